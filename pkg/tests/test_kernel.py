import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracsymm.kernel import (DiagonalError, ExtrapolationError, KernelEvaluator,
                             NearDiagonalError, near_diagonal_closed_form,
                             near_diagonal_coefficient, theta, theta_hypergeometric,
                             theta_quadrature)
from fracsymm.specfun import AccuracyLossError, KernelParams, hyp2f1_derivative


def trapezoid_oracle(n=10 ** 6):
    """2 int_0^pi (5 - 4 cos t)^{-3/2} dt for N=2, s=1/2, r=1, rho=2."""
    t = np.linspace(0.0, math.pi, n + 1)
    f = (5.0 - 4.0 * np.cos(t)) ** -1.5
    return 2.0 * (np.sum(f) - 0.5 * (f[0] + f[-1])) * (math.pi / n)


def test_theta_quadrature_trapezoid_oracle():
    p = KernelParams(2, 0.5)
    val = theta_quadrature(p, 1.0, 2.0)
    assert val.value == pytest.approx(trapezoid_oracle(), rel=1e-7)
    assert val.method == "angular-quadrature"
    assert val.est_error <= 1e-8


def test_theta_matches_frozen_angular_integrals(oracles):
    for N, s, r, rho, ref in oracles["theta"]:
        assert theta(KernelParams(N, s), r, rho).value == pytest.approx(ref, rel=1e-10)


def test_theta_at_origin_is_full_sphere_area():
    ev = theta_hypergeometric(KernelParams(2, 0.5), 0.0, 1.0)
    assert ev.value == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert ev.method == "hypergeometric"


def test_theta_quadrature_symmetric_and_cross_branch():
    p = KernelParams(2, 0.5)
    assert theta_quadrature(p, 2.0, 1.0).value == theta_quadrature(p, 1.0, 2.0).value
    q = KernelParams(3, 0.25)
    a = theta_quadrature(q, 1.0, 3.0).value
    b = theta_hypergeometric(q, 1.0, 3.0).value
    assert a == pytest.approx(b, rel=1e-8)
    assert theta_hypergeometric(p, 1.0, 2.0).value == pytest.approx(
        theta_quadrature(p, 1.0, 2.0).value, rel=1e-8)


def test_dispatch_rule():
    p = KernelParams(3, 0.4)
    assert theta(p, 0.5, 1.0).method == "hypergeometric"
    assert theta(p, 0.995, 1.0).method == "angular-quadrature"
    with pytest.raises(DiagonalError):
        theta(p, 1.0, 1.0)


def test_branch_errors():
    p = KernelParams(2, 0.3)
    with pytest.raises(NearDiagonalError):
        theta_quadrature(p, 1.0, 1.0 + 1e-8)
    with pytest.raises(AccuracyLossError):
        theta_hypergeometric(p, 1.0, 1.0 + 1e-12)


def test_symmetry_random_pairs_both_branches():
    rng = np.random.default_rng(3)
    for i in range(200):
        p = KernelParams(int(rng.integers(2, 5)), rng.uniform(0.05, 0.95))
        r = rng.uniform(0.05, 3.0)
        rho = r * (rng.uniform(0.2, 0.9) if i % 2 else rng.uniform(0.992, 0.999))
        a, b = theta(p, r, rho).value, theta(p, rho, r).value
        assert abs(a - b) / a <= 1e-10


@given(st.integers(2, 5), st.floats(0.05, 0.95), st.floats(0.05, 0.98), st.floats(0.1, 10.0))
def test_cross_branch_agreement_property(N, s, ratio, rho):
    p = KernelParams(N, s)
    r = ratio * rho
    a = theta_quadrature(p, r, rho).value
    b = theta_hypergeometric(p, r, rho).value
    assert a == pytest.approx(b, rel=1e-8)


def test_monotonicity_sampled_and_via_derivative():
    rng = np.random.default_rng(11)
    for _ in range(100):
        N = int(rng.integers(2, 5))
        s = rng.uniform(0.05, 0.95)
        p = KernelParams(N, s)
        rbar = rng.uniform(0.2, 2.0)
        rho = rbar * rng.uniform(1.05, 3.0)
        rs = np.linspace(0.0, rbar, 12)
        vals = [theta(p, r, rho).value for r in rs]
        assert np.all(np.diff(vals) > 0.0)
        r = rbar * rng.uniform(0.0, 0.95)
        rhos = np.linspace(rbar * 1.01, 4.0 * rbar, 12)
        vals = [theta(p, r, x).value for x in rhos]
        assert np.all(np.diff(vals) < 0.0)
        # d/dx 2F1 > 0 drives the increase in r for fixed rho
        a, b, c = 0.5 * (N + 2.0 * s), s + 1.0, 0.5 * N + 1.0
        assert hyp2f1_derivative(a, b, c, (rs[5] / rho) ** 2) > 0.0


def loglog_slope(xs, ys):
    return np.polyfit(np.log(xs), np.log(ys), 1)[0]


@pytest.mark.parametrize("N,s", [(2, 0.5), (3, 0.25), (4, 0.75)])
def test_near_diagonal_slope(N, s):
    p = KernelParams(N, s)
    ds = np.geomspace(1e-4, 1e-3, 6)
    vals = [theta(p, 1.0 + 0.5 * d, 1.0 - 0.5 * d).value for d in ds]
    assert loglog_slope(ds, vals) == pytest.approx(-(1.0 + 2.0 * s), rel=0.02)


@pytest.mark.parametrize("N,s", [(2, 0.5), (3, 0.25), (4, 0.75), (2, 0.1)])
def test_far_field_slope(N, s):
    p = KernelParams(N, s)
    rs = np.geomspace(10.0, 100.0, 8)
    vals = [theta(p, r, 1.0).value for r in rs]
    assert loglog_slope(rs, vals) == pytest.approx(-(N + 2.0 * s), rel=0.02)


@pytest.mark.parametrize("N,s,t", [(2, 0.5, 1.0), (3, 0.25, 1.0), (4, 0.7, 0.4), (2, 0.3, 2.0)])
def test_near_diagonal_coefficient_matches_closed_form(N, s, t):
    p = KernelParams(N, s)
    c = near_diagonal_coefficient(p, t)
    assert c > 0.0
    assert c == pytest.approx(near_diagonal_closed_form(p, t), rel=1e-3)


def test_near_diagonal_coefficient_t_dependence():
    p = KernelParams(3, 0.4)
    ts = [0.25, 0.5, 1.0, 2.0]
    cs = [near_diagonal_coefficient(p, t) for t in ts]
    assert all(c > 0.0 for c in cs)
    # |S^{N-1}| t^{1-N} scaling: c(2t)/c(t) = 2^{1-N}
    assert cs[1] / cs[0] == pytest.approx(2.0 ** (1 - 3), rel=1e-3)


def test_extrapolation_error_is_arithmetic():
    assert issubclass(ExtrapolationError, ArithmeticError)


@pytest.mark.parametrize("N,s", [(2, 0.5), (2, 0.3), (3, 0.7), (4, 0.5), (3, 0.502), (2, 0.4985)])
def test_split_evaluator_matches_reference_routes(N, s):
    p = KernelParams(N, s)
    ev = KernelEvaluator(p)
    rng = np.random.default_rng(5)
    r = rng.uniform(0.01, 2.0, 40)
    rho = r * np.concatenate([rng.uniform(0.1, 0.9, 20), rng.uniform(1.0001, 1.02, 20)])
    got = ev(r, rho)
    ref = np.array([theta(p, a, b).value for a, b in zip(r, rho)])
    assert np.max(np.abs(got / ref - 1.0)) <= 1e-9
