import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracsymm.analysis import (ChainFunction, ProblemSpec, WeightFunction, ab_inequality_check,
                               ab_random_suite, chain_rule_check, chain_rule_random_suite,
                               energy_instance, g_test_function, luxemburg_norm,
                               maxmin_lemma_check, maxmin_random_suite, parse_rhs,
                               radial_shell_sample, regularity_regime, riesz_random_suite,
                               verify_energy, verify_regularity, verify_theorem1,
                               verify_theorem2)
from fracsymm.planar import GridFunction2D, assemble_operator_2d, build_domain, solve_linear_2d
from fracsymm.radial import (RadialFunction, assemble_gagliardo_radial, make_radial_mesh,
                             solve_linear_radial)
from fracsymm.rearrange import WeightedSample, concentration_at, decreasing_rearrangement
from fracsymm.specfun import DomainError, KernelParams


def test_g_test_function_examples():
    assert g_test_function(1.0, 0.5, 0.7) == 0.0
    assert g_test_function(1.0, 0.5, 1.25) == pytest.approx(0.25)
    assert g_test_function(1.0, 0.5, 15.0) == 0.5
    assert g_test_function(0.0, 0.3, 0.0) == 0.0


@given(st.floats(0.0, 5.0), st.floats(0.01, 2.0), st.floats(-1.0, 10.0), st.floats(-1.0, 10.0))
def test_g_test_function_monotone_lipschitz(t, h, a, b):
    ga, gb = g_test_function(t, h, a), g_test_function(t, h, b)
    assert 0.0 <= ga <= h
    if a <= b:
        assert ga <= gb
    assert abs(ga - gb) <= abs(a - b) + 1e-15


# ---------------------------------------------------------------- MaxMin

def test_maxmin_named_example():
    r = np.linspace(0.0, 1.0, 401)
    rep = maxmin_lemma_check(r, 2.0 * np.ones_like(r), np.ones_like(r),
                             WeightFunction(r, r, "increasing"), 2)
    assert rep.details["rbar"] == 1.0
    assert rep.details["weighted_increasing"] == pytest.approx(1.0 / 3.0, rel=1e-5)
    assert rep.passed


def test_maxmin_equal_functions_give_zero_margin():
    r = np.linspace(0.0, 2.0, 300)
    u = 1.0 + np.cos(r)
    for mono, h in (("increasing", 1.0 + r), ("decreasing", 3.0 - r)):
        rep = maxmin_lemma_check(r, u, u, WeightFunction(r, h, mono), 3)
        assert rep.details["weighted_hk1"] == 0.0
        assert rep.worst_margin == 0.0 and rep.passed


def test_maxmin_input_validation():
    r = np.linspace(0.0, 1.0, 100)
    w = WeightFunction(r, 1.0 + r, "increasing")
    with pytest.raises(DomainError):
        maxmin_lemma_check(r, np.ones(100), np.ones(100), w, 2)
    with pytest.raises(ValueError):
        WeightFunction(r, 2.0 - r, "increasing")
    with pytest.raises(ValueError):
        WeightFunction(r, r - 0.5, "increasing")


def test_maxmin_random_suite_small():
    rep = maxmin_random_suite(200, seed=5)
    assert rep.violations == 0 and rep.instances_run >= 200


# -------------------------------------------------------------------- ab

def test_ab_examples():
    res = ab_inequality_check(1.0, 2.0, 1.0)
    assert res.lhs == pytest.approx(0.5) and res.rhs == pytest.approx(1.0) and res.holds
    res = ab_inequality_check(3.0, 3.0, 0.7)
    assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds
    with pytest.raises(DomainError):
        ab_inequality_check(0.0, 1.0, 1.0)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-2, 4.0))
def test_ab_property(a, b, g):
    assert ab_inequality_check(a, b, g).holds


def test_ab_random_suite():
    assert ab_random_suite(20_000, seed=1).violations == 0


# ------------------------------------------------------------ chain rule

@pytest.fixture(scope="module")
def small_square():
    dom = build_domain("square:1", 1.0 / 16.0)
    return dom, assemble_operator_2d(dom, 0.4)


def bumps(dom, rng):
    x, y = dom.centers.T
    c = rng.uniform(-0.3, 0.3, 2)
    return rng.uniform(0.5, 2.0) * np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / 0.05)


def test_chain_rule_identity_is_equality(small_square):
    dom, op = small_square
    rng = np.random.default_rng(0)
    u = GridFunction2D(dom, bumps(dom, rng))
    phi = GridFunction2D(dom, rng.uniform(0, 1, dom.n))
    res = chain_rule_check(u, ChainFunction.identity(), phi, 0.4, op=op)
    assert res.lhs == pytest.approx(res.rhs, rel=1e-13)
    assert res.holds


def test_chain_rule_families_hold(small_square):
    dom, op = small_square
    rng = np.random.default_rng(1)
    for i in range(30):
        u = GridFunction2D(dom, bumps(dom, rng))
        phi = GridFunction2D(dom, rng.uniform(0, 1, dom.n))
        Phi = [ChainFunction.power(2.0), ChainFunction.hinge(rng.uniform(0.0, 1.0)),
               ChainFunction.saturating(rng.uniform(0.2, 4.0))][i % 3]
        assert chain_rule_check(u, Phi, phi, 0.4, op=op).holds


def test_chain_rule_random_suite_small():
    assert chain_rule_random_suite(30, seed=3).violations == 0


def test_riesz_random_suite_small():
    rep = riesz_random_suite(10, 16, seed=2)
    assert rep.violations == 0


# ---------------------------------------------------------- problem specs

def test_parse_rhs():
    assert parse_rhs("const:2").args == (2.0,)
    assert parse_rhs("gauss:0.4,0.15,0.3,1").args == (0.4, 0.15, 0.3, 1.0)
    assert parse_rhs("rpow:-0.5").kind == "rpow"
    for bad in ("const:-1", "gauss:1,2", "rpow:0.5", "sin:1", "const:x"):
        with pytest.raises(DomainError):
            parse_rhs(bad)


def test_problem_spec_validation():
    ProblemSpec()
    ProblemSpec(shape="ball:1", N=3, s=0.3, f="rpow:-0.5")
    for kw in (dict(gamma=0.0), dict(c=-1.0), dict(N=3), dict(s=1.0), dict(M=4),
               dict(shape="hexagon:1"), dict(f="const:-2")):
        with pytest.raises(DomainError):
            ProblemSpec(**kw)
    ref = ProblemSpec(h=0.1, M=40).refined()
    assert ref.h == pytest.approx(0.05) and ref.M == 80


def test_radial_shell_sample_exact_for_decreasing():
    grid = make_radial_mesh(1.0, 32, KernelParams(3, 0.5))
    u = RadialFunction.from_callable(grid, lambda r: 1.0 - r * r)
    smp = radial_shell_sample(u)
    assert smp.total == pytest.approx(4.0 * math.pi / 3.0, rel=1e-13)
    # int_B (1 - |x|^2) dx = 4 pi (1/3 - 1/5); u is piecewise linear, so close
    mass = float(np.sum(smp.values * smp.weights))
    assert mass == pytest.approx(4.0 * math.pi * (1 / 3 - 1 / 5), rel=1e-3)


# -------------------------------------------------------------- theorems

def test_theorem1_disk_curves_coincide():
    ver = verify_theorem1(ProblemSpec(shape="disk:1", gamma=1.0, s=0.5, h=1.0 / 32.0, M=128))
    rep, curves = ver
    # equality case: the sign of the margin is set by the O(h) planar error
    gap = np.max(np.abs(curves["C_u"] - curves["C_v"])) / rep.cv_total
    assert gap <= 0.03


def test_theorem1_square_small():
    rep, _ = verify_theorem1(ProblemSpec(shape="square:2", gamma=1.0, s=0.5, h=1.0 / 16.0, M=64))
    assert rep.holds and rep.tolerance == pytest.approx(0.01 * rep.cv_total)


def test_theorem2_gamma_to_zero_matches_linear_comparison():
    prob = ProblemSpec(shape="square:1", gamma=1e-12, s=0.5, h=1.0 / 32.0, M=96)
    rep, _ = verify_theorem2(prob)
    assert rep.holds
    # gamma -> 0: u solves the linear problem, v the symmetrized linear one
    dom = build_domain("square:1", 1.0 / 32.0)
    u = solve_linear_2d(assemble_operator_2d(dom, 0.5), GridFunction2D(dom, np.ones(dom.n)))
    grid = make_radial_mesh(math.sqrt(dom.area / math.pi), 96, KernelParams(2, 0.5))
    v = solve_linear_radial(grid, np.ones(grid.M + 1))
    cu = concentration_at(decreasing_rearrangement(WeightedSample(u.values, dom.areas)), dom.area)
    cv = concentration_at(decreasing_rearrangement(radial_shell_sample(v)), dom.area)
    assert rep.cv_total == pytest.approx(float(cv), rel=1e-6)
    assert float(cu) <= float(cv)


def test_theorem2_ball_radial_shortcut():
    rep, _ = verify_theorem2(ProblemSpec(shape="ball:1", N=3, s=0.3, gamma=2.0, f="rpow:-0.5", M=64))
    assert rep.holds


# ------------------------------------------------------------ regularity

def test_regularity_regimes():
    r1 = regularity_regime(3, 0.3, 3.0, 1.0)
    assert r1["regime"] == 1 and r1["q"] == pytest.approx(15.0)
    r2 = regularity_regime(3, 0.5, 3.0, 1.0)
    assert r2["regime"] == 2 and r2["p_conjugate"] == pytest.approx(1.5)
    assert r2["orlicz_exponent"] == pytest.approx(3.0)
    assert regularity_regime(2, 0.5, 4.0, 1.0)["regime"] == 3
    with pytest.raises(DomainError):
        regularity_regime(2, 0.5, 3.0, 1.0)


@given(st.floats(0.1, 10.0), st.floats(0.2, 5.0), st.floats(1.0, 4.0))
def test_luxemburg_norm_of_constant(c, measure, e):
    u = WeightedSample([c, c], [0.5 * measure, 0.5 * measure])
    exact = c / math.log1p(1.0 / measure) ** (1.0 / e)
    assert luxemburg_norm(u, e) == pytest.approx(exact, rel=2e-8)


def test_regularity_ratio_stable_radial():
    rep = verify_regularity(3.0, 1.0, KernelParams(3, 0.3), M=48)
    assert rep.regime == 1 and rep.stable and rep.spread <= 1e-3


# ---------------------------------------------------------------- energy

def test_energy_control_and_scaling():
    grid = make_radial_mesh(1.0, 64, KernelParams(2, 0.5))
    gm = assemble_gagliardo_radial(grid)
    v = solve_linear_radial(grid, np.ones(grid.M + 1), gmat=gm)
    # gamma ~ 0 and u = v: both sides identical
    res = verify_energy(v, 1e-12, 0.5, v, gmat=gm)
    assert res.ratio == pytest.approx(1.0, rel=1e-9) and res.holds
    prob = ProblemSpec(shape="square:2", gamma=1.0, s=0.5, h=1.0 / 16.0, M=64)
    base = energy_instance(prob)
    assert base.holds
    scaled = energy_instance(ProblemSpec(shape="square:2", f="const:3", gamma=1.0, s=0.5,
                                         h=1.0 / 16.0, M=64))
    assert scaled.lhs == pytest.approx(3.0 * base.lhs, rel=1e-6)
    assert scaled.ratio == pytest.approx(base.ratio, rel=1e-6)
