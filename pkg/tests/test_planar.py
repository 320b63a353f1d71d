import math

import numpy as np
import pytest

from fracsymm.planar import (GridFunction2D, ResolutionError, assemble_operator_2d, build_domain,
                             exterior_box_integral, parse_shape, seminorm_2d_squared,
                             solve_linear_2d, solve_singular_2d)
from fracsymm.radial import (assemble_gagliardo_radial, default_schedule, make_radial_mesh,
                             solve_linear_radial)
from fracsymm.specfun import DomainError, KernelParams


@pytest.fixture(scope="module")
def square():
    dom = build_domain("square:1", 1.0 / 20.0)
    return dom, assemble_operator_2d(dom, 0.5)


@pytest.fixture(scope="module")
def radial_torsion():
    grid = make_radial_mesh(1.0, 256, KernelParams(2, 0.5))
    gm = assemble_gagliardo_radial(grid)
    return grid, gm, solve_linear_radial(grid, np.ones(grid.M + 1), gmat=gm)


def test_build_domain_examples():
    disk = build_domain("disk:1", 1.0 / 32.0)
    assert disk.n == pytest.approx(math.pi * 32 ** 2, rel=0.02)
    sq = build_domain("square:2", 1.0 / 16.0)
    assert sq.n == 1024 and np.all(sq.mask)
    ell = build_domain("ellipse:1.5,0.75", 1.0 / 32.0)
    assert ell.area == pytest.approx(math.pi * 1.5 * 0.75, rel=0.02)
    assert np.all(ell.boundary_distance() > 0.0)
    # row-major ordering
    assert np.all(np.diff(sq.iy) >= 0)


def test_build_domain_errors():
    with pytest.raises(ResolutionError):
        build_domain("disk:1", 0.2)
    with pytest.raises(DomainError):
        build_domain("square:1", -0.1)
    with pytest.raises(DomainError):
        parse_shape("triangle:1")


def test_exterior_box_matches_polar_oracle(oracles):
    for x, y, X, Y, s, ref in oracles["exterior_box"]:
        assert float(exterior_box_integral(x, y, X, Y, s)) == pytest.approx(ref, rel=1e-12)


def test_operator_constant_vector_sees_only_tail(square):
    dom, op = square
    A1 = op.matvec(np.ones(dom.n))
    assert np.all(A1 > 0.0)
    assert np.allclose(A1, op.constant * op.tail, rtol=1e-9)


def test_operator_m_matrix_structure(square):
    dom, op = square
    A = op.to_dense()
    a = dom.areas
    assert np.max(np.abs(A * a[:, None] - (A * a[:, None]).T)) <= 1e-8 * np.max(np.abs(A))
    off = A - np.diag(np.diag(A))
    assert np.all(np.diag(A) > 0.0) and np.all(off <= 0.0)
    assert np.all(A.sum(axis=1) >= 0.0)


def test_discrete_maximum_principle(square):
    dom, op = square
    rng = np.random.default_rng(0)
    for _ in range(5):
        f = rng.uniform(0.0, 1.0, dom.n) * (rng.uniform(size=dom.n) < 0.3)
        u = solve_linear_2d(op, GridFunction2D(dom, f))
        assert np.min(u.values) >= -1e-12 * np.max(u.values)


def test_zero_rhs_and_linearity(square):
    dom, op = square
    assert np.all(solve_linear_2d(op, GridFunction2D(dom, np.zeros(dom.n))).values == 0.0)
    f = GridFunction2D.from_callable(dom, lambda x, y: 1.0 + x * x)
    u1 = solve_linear_2d(op, f)
    u3 = solve_linear_2d(op, 3.0 * f)
    assert np.allclose(u3.values, 3.0 * u1.values, rtol=1e-11)


@pytest.mark.slow
def test_disk_cross_validation_against_radial(radial_torsion):
    grid, gm, v = radial_torsion
    errs = []
    for h in (1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0):
        dom = build_domain("disk:1", h)
        u = solve_linear_2d(assemble_operator_2d(dom, 0.5), GridFunction2D(dom, np.ones(dom.n)))
        ref = v(np.hypot(*dom.centers.T))
        errs.append(np.linalg.norm(u.values - ref) / np.linalg.norm(ref))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 0.03


def test_seminorm_examples(square):
    dom, op = square
    assert seminorm_2d_squared(GridFunction2D(dom, np.zeros(dom.n)), 0.5, op) == 0.0
    e = np.zeros(dom.n)
    e[dom.n // 2] = 1.0
    val = seminorm_2d_squared(GridFunction2D(dom, e), 0.5, op)
    a = dom.cell_area
    expected = 2.0 * a * op.diag[dom.n // 2]     # 2 a^2 sum_j K_ij + 2 a T_i
    assert val == pytest.approx(expected, rel=1e-12) and val > 0.0


@pytest.mark.parametrize("s,lam", [(0.3, 2.0), (0.7, 0.5)])
def test_seminorm_dilation(s, lam):
    d1 = build_domain("square:1", 1.0 / 16.0)
    d2 = build_domain(f"square:{lam}", lam / 16.0)
    vals = np.cos(3.0 * d1.centers[:, 0]) * (1.0 + d1.centers[:, 1] ** 2)
    a = seminorm_2d_squared(GridFunction2D(d1, vals), s)
    b = seminorm_2d_squared(GridFunction2D(d2, vals), s)
    assert b == pytest.approx(lam ** (2.0 - 2.0 * s) * a, rel=1e-10)


def test_seminorm_agrees_with_radial_form(radial_torsion):
    grid, gm, v = radial_torsion
    dom = build_domain("disk:1", 1.0 / 64.0)
    u = GridFunction2D(dom, v(np.hypot(*dom.centers.T)))
    planar = seminorm_2d_squared(u, 0.5)
    assert planar == pytest.approx(gm.quadratic_form(v.dofs), rel=0.05)


# --------------------------------------------------------------- singular

def test_singular_2d_contracts(square):
    dom, op = square
    f = GridFunction2D.from_callable(dom, lambda x, y: 1.0 + 0.5 * np.exp(-8 * (x * x + y * y)))
    sched = default_schedule(64)
    lin = solve_linear_2d(op, f)
    near0 = solve_singular_2d(dom, f, 1e-12, schedule=sched, op=op).solution
    assert np.max(np.abs(near0.values - lin.values)) <= 1e-6 * np.max(lin.values)
    gamma = 0.7
    res = solve_singular_2d(dom, f, gamma, schedule=sched, op=op)
    base = res.solution.values
    ks = sorted(res.iterates)
    for a, b in zip(ks[:-1], ks[1:]):
        wa, wb = res.iterates[a].values, res.iterates[b].values
        assert np.min(wb - wa) >= -1e-8 * np.max(wb)
    inner = dom.boundary_distance() >= 4.0 * dom.h
    assert np.min(base[inner]) > 0.0
    for lam in (2.0, 10.0):
        sc = solve_singular_2d(dom, lam * f, gamma, schedule=sched, op=op).solution.values
        ref = lam ** (1.0 / (gamma + 1.0)) * base
        assert np.max(np.abs(sc - ref)) <= 1e-8 * np.max(ref)


def test_singular_2d_validation(square):
    dom, op = square
    f = GridFunction2D(dom, np.ones(dom.n))
    with pytest.raises(DomainError):
        solve_singular_2d(dom, f, 0.0, op=op)
    with pytest.raises(DomainError):
        solve_singular_2d(dom, f, 1.0)
    with pytest.raises(DomainError):
        solve_singular_2d(dom, f * -1.0, 1.0, op=op)
