r"""Radial Galerkin solver for fractional Dirichlet problems on a ball.

Radial functions u(|x|) in R^N reduce the Gagliardo form to

    [u]^2 = |S^{N-1}| ( \int\int_{(0,R)^2} (u(r)-u(rho))^2 Theta r^{N-1} rho^{N-1}
                        + 2 \int_0^R u(r)^2 tau(r) r^{N-1} dr ),
    tau(r) = \int_R^\infty Theta(r, rho) rho^{N-1} d rho,

which is discretized with continuous piecewise-linear hats on a mesh graded
toward r = R.  Unknowns are the nodal values at r_0 = 0, ..., r_{M-1}; the
value at r_M = R is zero.

Singular diagonal panels are integrated in local coordinates so that tiny
boundary elements keep full relative accuracy: the gap |r - rho| is never
formed by subtracting absolute radii.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .kernel import KernelEvaluator
from .quadrature import gauss_jacobi01, gauss_legendre
from .specfun import DomainError, KernelParams, frac_lap_constant, sphere_area

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "GagliardoMatrixRadial",
    "SolveReport",
    "SolverError",
    "PositivityError",
    "MonotonicityError",
    "make_radial_mesh",
    "assemble_gagliardo_radial",
    "lumped_mass",
    "tail_function",
    "solve_linear_radial",
    "solve_singular_radial",
    "integrated_inequality_lhs",
    "torsion_constant",
    "torsion_profile",
    "torsion_on_grid",
    "default_schedule",
]


class SolverError(RuntimeError):
    """Linear or nonlinear solve failed."""


class PositivityError(SolverError):
    """A solution that must be nonnegative came out negative."""


class MonotonicityError(SolverError):
    """The k-regularized iterates failed to increase with k."""


# ------------------------------------------------------------------ types

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes 0 = r_0 < ... < r_M = R; ``dist`` holds R - r_i computed directly."""

    R: float
    nodes: np.ndarray
    params: KernelParams
    dist: np.ndarray
    lengths: np.ndarray

    @property
    def M(self) -> int:
        return len(self.nodes) - 1

    def dilate(self, lam: float) -> "RadialGrid":
        return RadialGrid(self.R * lam, self.nodes * lam, self.params,
                          self.dist * lam, self.lengths * lam)


@dataclass(eq=False)
class RadialFunction:
    """Piecewise-linear radial profile; zero beyond R."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("radial function values must be finite")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.grid.nodes, self.values)
        return np.where(r > self.grid.R, 0.0, out)

    @property
    def dofs(self) -> np.ndarray:
        return self.values[:-1]

    @classmethod
    def from_dofs(cls, grid: RadialGrid, w) -> "RadialFunction":
        return cls(grid, np.append(np.asarray(w, dtype=float), 0.0))

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn) -> "RadialFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))


@dataclass(eq=False)
class GagliardoMatrixRadial:
    """G with w^T G w = [u_h]^2; ``tail`` is tau(r) sampled at the nodes r_0..r_{M-1}."""

    grid: RadialGrid
    matrix: np.ndarray
    tail: np.ndarray
    interior: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def quadratic_form(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(w @ self.matrix @ w)


@dataclass
class SolveReport:
    k_sequence: list = field(default_factory=list)
    newton_iterations: list = field(default_factory=list)
    final_residual: float = 0.0
    residual_scale: float = 1.0
    monotonicity_margins: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    converged_in_k: bool = False
    wall_time: float = 0.0
    backend: str = ""

    def as_dict(self) -> dict:
        return {
            "k_sequence": " ".join(str(k) for k in self.k_sequence),
            "newton_iterations": " ".join(str(n) for n in self.newton_iterations),
            "final_residual": self.final_residual,
            "residual_scale": self.residual_scale,
            "monotonicity_margins": " ".join(repr(float(m)) for m in self.monotonicity_margins),
            "k_increments": " ".join(repr(float(m)) for m in self.increments),
            "converged_in_k": self.converged_in_k,
            "wall_time": self.wall_time,
        }


# ------------------------------------------------------------------- mesh

def make_radial_mesh(R: float, M: int, p: KernelParams) -> RadialGrid:
    """Mesh r_i = R (1 - (1 - i/M)^q), q = max(1, 1/s), graded toward r = R.

    The last element then has length R M^{-q}, which meets the required
    boundary resolution (R/M)^{1/s} R^{1-1/s} with equality.
    """
    if int(M) != M or M < 8:
        raise DomainError(f"mesh needs M >= 8 elements, got {M!r}")
    if not R > 0.0:
        raise DomainError("radius must be positive")
    M = int(M)
    q = max(1.0, 1.0 / p.s)
    frac = 1.0 - np.arange(M + 1) / M
    dist = R * frac ** q
    dist[-1] = 0.0
    nodes = R - dist
    nodes[0] = 0.0
    nodes[-1] = R
    lengths = dist[:-1] - dist[1:]
    if np.any(np.diff(nodes) <= 0.0):
        raise DomainError(f"graded mesh with M={M}, q={q:g} is not representable in double "
                          "precision (boundary nodes coincide); reduce M or raise s")
    return RadialGrid(float(R), nodes, p, dist, lengths)


def default_schedule(k_max: int = 1024) -> list:
    ks = [1]
    while ks[-1] < k_max:
        ks.append(ks[-1] * 2)
    return ks


# --------------------------------------------------------- tail function

_TAIL_GL = 10
_TAIL_GJ = 12


def tail_function(ev: KernelEvaluator, R: float, r, d):
    """tau(r) = int_R^inf Theta(r, rho) rho^{N-1} d rho for r < R.

    ``d`` is R - r supplied directly.  [R, 2R] is split into panels of
    geometrically growing length in rho - R starting at width d; [2R, inf)
    is mapped by rho = 2R/t and integrated with a Gauss-Jacobi rule carrying
    the t^{2s-1} decay.
    """
    p = ev.params
    N, s = p.N, p.s
    r = np.atleast_1d(np.asarray(r, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d <= 0.0):
        raise DomainError("tail needs r < R")
    xg, wg = gauss_legendre(_TAIL_GL)
    # panels in u = rho - R: [0, d], [d, 2d], [2d, 4d], ... capped at R
    npan = int(np.ceil(np.log2(R / d.min()))) + 2
    lo = np.zeros((len(d), npan))
    hi = np.zeros((len(d), npan))
    hi[:, 0] = np.minimum(d, R)
    for k in range(1, npan):
        lo[:, k] = np.minimum(d * 2.0 ** (k - 1), R)
        hi[:, k] = np.minimum(d * 2.0 ** k, R)
    width = hi - lo                                     # zero for unused panels
    u = lo[:, :, None] + width[:, :, None] * xg[None, None, :]
    w = width[:, :, None] * wg[None, None, :]
    rr = np.broadcast_to(r[:, None, None], u.shape)
    rho = R + u
    delta = d[:, None, None] + u
    vals = delta ** (-1.0 - 2.0 * s) * ev.smooth(rr, rho, delta) * rho ** (N - 1)
    near = np.sum(w * vals, axis=(1, 2))
    # far part
    tj, wj = gauss_jacobi01(_TAIL_GJ, 0.0, 2.0 * s - 1.0)
    rho = 2.0 * R / tj[None, :]
    rr = np.broadcast_to(r[:, None], (len(r), len(tj)))
    delta = rho - rr
    bracket = delta ** (-1.0 - 2.0 * s) * ev.smooth(rr, rho, delta) * rho ** (N + 2.0 * s)
    far = (2.0 * R) ** (-2.0 * s) * (bracket @ wj)
    return near + far


# ------------------------------------------------------ assembly helpers

_N_DIAG_T = 10       # Gauss-Jacobi points across the diagonal direction
_N_DIAG_X = 8        # Gauss-Legendre points along the diagonal
_N_FAR = 6           # tensor points for well-separated element pairs
_N_NEAR = 10         # tensor points for close pairs after subdivision
_ETA = 1.0           # admissibility: gap >= ETA * max(panel sizes)


class _Accumulator:
    """Collects sum_q K_q D_a(q) D_b(q) into a dense matrix via bincount."""

    def __init__(self, M: int):
        self.M = M
        self.mat = np.zeros(M * M)

    def add(self, kq, idx, dvals):
        """kq: (Q,), idx: list of (Q,) node indices, dvals: list of (Q,) D-values."""
        M = self.M
        for ia, da in zip(idx, dvals):
            for ib, db in zip(idx, dvals):
                valid = (ia < M) & (ib < M)
                if not np.any(valid):
                    continue
                flat = (ia * M + ib)[valid]
                self.mat += np.bincount(flat, weights=(kq * da * db)[valid], minlength=M * M)

    def matrix(self):
        G = self.mat.reshape(self.M, self.M)
        return 0.5 * (G + G.T)


def _smooth_weighted(ev, r, rho, delta, N):
    return ev.smooth(r, rho, delta) * (r ** (N - 1)) * (rho ** (N - 1))


def _diagonal_blocks(grid, ev, acc):
    """Same-element pairs: (r, rho) = (r_e + L(1-t)xi, r + L t)."""
    s, N = grid.params.s, grid.params.N
    M = grid.M
    tj, wj = gauss_jacobi01(_N_DIAG_T, 1.0, 1.0 - 2.0 * s)   # (1-t) t^{1-2s}
    xg, wg = gauss_legendre(_N_DIAG_X)
    e = np.arange(M)
    L = grid.lengths[:, None, None]
    left = grid.nodes[:-1][:, None, None]
    t = tj[None, :, None]
    xi = xg[None, None, :]
    delta = L * t
    r = left + L * (1.0 - t) * xi
    rho = r + delta
    w = 2.0 * L ** (3.0 - 2.0 * s) * wj[None, :, None] * wg[None, None, :]
    shape = np.broadcast_shapes(delta.shape, r.shape)
    r = np.broadcast_to(r, shape)
    kq = (w * _smooth_weighted(ev, r, np.broadcast_to(rho, shape),
                               np.broadcast_to(delta, shape), N)).reshape(M, -1).sum(axis=1)
    inv = 1.0 / grid.lengths
    acc.add(kq, [e, e + 1], [-inv, inv])


def _adjacent_blocks(grid, ev, acc):
    """Elements e, e+1 sharing node p: Duffy split of the corner singularity."""
    s, N = grid.params.s, grid.params.N
    M = grid.M
    zj, wz = gauss_jacobi01(_N_DIAG_T, 0.0, 2.0 - 2.0 * s)
    wgx, wgw = gauss_legendre(_N_DIAG_X)
    e = np.arange(M - 1)
    L1 = grid.lengths[:-1][:, None, None]
    L2 = grid.lengths[1:][:, None, None]
    p = grid.nodes[1:-1][:, None, None]
    z = zj[None, :, None]
    wv = wgx[None, None, :]
    W = wz[None, :, None] * wgw[None, None, :]
    for tri in (0, 1):
        if tri == 0:            # y <= x: x = z, y = z w
            x, y = z, z * wv
            den = L1 + L2 * wv
            dE, dP, dF = -1.0 / den, (1.0 - wv) / den, wv / den
        else:                   # x <= y: y = z, x = z w
            x, y = z * wv, z
            den = L1 * wv + L2
            dE, dP, dF = -wv / den, (wv - 1.0) / den, 1.0 / den
        delta = z * den
        r = p - L1 * x
        rho = p + L2 * y
        w = 2.0 * L1 * L2 * den ** (1.0 - 2.0 * s) * W
        shape = np.broadcast_shapes(delta.shape, r.shape, rho.shape)
        kq = w * _smooth_weighted(ev, np.broadcast_to(r, shape), np.broadcast_to(rho, shape),
                                  np.broadcast_to(delta, shape), N)
        # D-values depend on w only: reduce over z first
        Q = shape[1] * shape[2]
        ee = np.repeat(e, Q)
        dvals = [np.broadcast_to(d, shape).reshape(-1) for d in (dE, dP, dF)]
        acc.add(kq.reshape(-1), [ee, ee + 1, ee + 2], dvals)


def _separated_panels(grid):
    """Panel pairs for element pairs (e, f), f >= e + 2, subdivided until admissible."""
    M = grid.M
    L = grid.lengths
    dist = grid.dist
    e_idx, f_idx = np.triu_indices(M, k=2)
    gap = dist[e_idx + 1] - dist[f_idx]
    big = np.maximum(L[e_idx], L[f_idx])
    ok = gap >= _ETA * big
    far = (e_idx[ok], np.zeros(ok.sum()), np.ones(ok.sum()),
           f_idx[ok], np.zeros(ok.sum()), np.ones(ok.sum()))
    near = []
    stack = [(int(e), 0.0, 1.0, int(f), 0.0, 1.0) for e, f in zip(e_idx[~ok], f_idx[~ok])]
    while stack:
        e, a1, b1, f, a2, b2 = stack.pop()
        g = L[e] * (1.0 - b1) + (dist[e + 1] - dist[f]) + L[f] * a2
        s1 = L[e] * (b1 - a1)
        s2 = L[f] * (b2 - a2)
        if g >= _ETA * max(s1, s2):
            near.append((e, a1, b1, f, a2, b2))
        elif s1 >= s2:
            m = 0.5 * (a1 + b1)
            stack.append((e, a1, m, f, a2, b2))
            stack.append((e, m, b1, f, a2, b2))
        else:
            m = 0.5 * (a2 + b2)
            stack.append((e, a1, b1, f, a2, m))
            stack.append((e, a1, b1, f, m, b2))
    near = tuple(np.array(c) for c in zip(*near)) if near else None
    return far, near


def _tensor_blocks(grid, ev, acc, panels, n):
    s, N = grid.params.s, grid.params.N
    e, a1, b1, f, a2, b2 = panels
    if len(e) == 0:
        return
    xg, wg = gauss_legendre(n)
    L = grid.lengths
    dist = grid.dist
    xi1 = a1[:, None, None] + (b1 - a1)[:, None, None] * xg[None, :, None]
    xi2 = a2[:, None, None] + (b2 - a2)[:, None, None] * xg[None, None, :]
    Le = L[e][:, None, None]
    Lf = L[f][:, None, None]
    gap = (dist[e + 1] - dist[f])[:, None, None]
    delta = Le * (1.0 - xi1) + gap + Lf * xi2
    r = grid.nodes[e][:, None, None] + Le * xi1
    rho = grid.nodes[f][:, None, None] + Lf * xi2
    w = (2.0 * Le * Lf * ((b1 - a1) * (b2 - a2))[:, None, None]
         * wg[None, :, None] * wg[None, None, :] * delta ** (1.0 - 2.0 * s))
    shape = delta.shape
    kq = w * _smooth_weighted(ev, np.broadcast_to(r, shape), np.broadcast_to(rho, shape), delta, N)
    inv = 1.0 / delta
    dvals = [-(1.0 - xi1) * inv, -xi1 * inv, (1.0 - xi2) * inv, xi2 * inv]
    dvals = [np.broadcast_to(d, shape).reshape(-1) for d in dvals]
    Q = shape[1] * shape[2]
    ee = np.repeat(e, Q)
    ff = np.repeat(f, Q)
    acc.add(kq.reshape(-1), [ee, ee + 1, ff, ff + 1], dvals)


_TAIL_ELEM_GL = 8
_TAIL_LAST_GJ = 14


def _tail_points(grid):
    """Quadrature points (element, xi, weight-in-r, distance to R) for the tail term."""
    s = grid.params.s
    M = grid.M
    L = grid.lengths
    dist = grid.dist
    xg, wg = gauss_legendre(_TAIL_ELEM_GL)
    elems, xis, ws, ds = [], [], [], []
    for e in range(M - 1):
        d_lo = dist[e + 1]
        # panel edges measured as distance from the right end of the element
        edges = [0.0]
        if d_lo < L[e]:
            step = d_lo
            while edges[-1] + step < L[e]:
                edges.append(edges[-1] + step)
                step = edges[-1] + d_lo
        edges.append(L[e])
        edges = np.array(edges)
        for lo, hi in zip(edges[:-1], edges[1:]):
            off = lo + (hi - lo) * xg             # distance from the right node
            elems.append(np.full(len(xg), e))
            xis.append(1.0 - off / L[e])
            ws.append((hi - lo) * wg)
            ds.append(d_lo + off)
    # last element: only phi_{M-1} = 1 - xi lives here, and phi^2 tau behaves
    # like (1 - xi)^{2-2s}; that factor is carried by the Gauss-Jacobi weight
    tj, wj = gauss_jacobi01(_TAIL_LAST_GJ, 2.0 - 2.0 * s, 0.0)
    e = M - 1
    off = L[e] * (1.0 - tj)
    elems.append(np.full(len(tj), e))
    xis.append(tj)
    ws.append(L[e] * wj * (1.0 - tj) ** (2.0 * s - 2.0))
    ds.append(off)
    return (np.concatenate(elems), np.concatenate(xis), np.concatenate(ws),
            np.concatenate(ds))


def _tail_block(grid, ev, acc):
    N = grid.params.N
    e, xi, w, d = _tail_points(grid)
    r = grid.nodes[e] + grid.lengths[e] * xi
    tau = tail_function(ev, grid.R, r, d)
    kq = 2.0 * w * tau * r ** (N - 1)
    acc.add(kq, [e, e + 1], [1.0 - xi, xi])


def assemble_gagliardo_radial(grid: RadialGrid, backend: str | None = None) -> GagliardoMatrixRadial:
    """Dense symmetric matrix of the Gagliardo form on the hat basis."""
    ev = KernelEvaluator(grid.params, backend=backend)
    M = grid.M
    acc = _Accumulator(M)
    _diagonal_blocks(grid, ev, acc)
    _adjacent_blocks(grid, ev, acc)
    far, near = _separated_panels(grid)
    _tensor_blocks(grid, ev, acc, far, _N_FAR)
    if near is not None:
        _tensor_blocks(grid, ev, acc, near, _N_NEAR)
    interior = acc.matrix()
    acc_t = _Accumulator(M)
    _tail_block(grid, ev, acc_t)
    tail_mat = acc_t.matrix()
    P = sphere_area(grid.params.N)
    G = P * (interior + tail_mat)
    G = 0.5 * (G + G.T)
    if not np.all(np.isfinite(G)):
        raise SolverError("assembly produced non-finite entries")
    tail_nodes = tail_function(ev, grid.R, grid.nodes[:-1], grid.dist[:-1])
    return GagliardoMatrixRadial(grid, G, tail_nodes, P * interior)


# ---------------------------------------------------------------- solvers

def lumped_mass(grid: RadialGrid) -> np.ndarray:
    """m_i = |S^{N-1}| int phi_i r^{N-1} dr for the DOF nodes (exact)."""
    N = grid.params.N
    xg, wg = gauss_legendre(max(2, N // 2 + 2))
    left = grid.nodes[:-1, None]
    L = grid.lengths[:, None]
    r = left + L * xg[None, :]
    base = L * wg[None, :] * r ** (N - 1)
    mL = np.sum(base * (1.0 - xg[None, :]), axis=1)
    mR = np.sum(base * xg[None, :], axis=1)
    m = np.zeros(grid.M + 1)
    m[:-1] += mL
    m[1:] += mR
    return sphere_area(N) * m[:-1]


def torsion_constant(p: KernelParams) -> float:
    """lambda_{N,s} with (-Delta)^s [lambda (1-|x|^2)_+^s] = 1 in the unit ball."""
    from .specfun import gamma_fn
    N, s = p.N, p.s
    return gamma_fn(0.5 * N) / (4.0 ** s * gamma_fn(0.5 * (N + 2.0 * s)) * gamma_fn(1.0 + s))


def torsion_profile(p: KernelParams, R: float, r):
    """Solution of (-Delta)^s v = 1 in B_R, v = 0 outside: lambda (R^2 - r^2)_+^s."""
    r = np.asarray(r, dtype=float)
    return torsion_constant(p) * np.clip(R * R - r * r, 0.0, None) ** p.s


def torsion_on_grid(grid: RadialGrid) -> np.ndarray:
    """Torsion profile at the nodes, using R^2 - r^2 = d (2R - d) with d = R - r."""
    d = grid.dist
    return torsion_constant(grid.params) * (d * (2.0 * grid.R - d)) ** grid.params.s


def _system(gmat: GagliardoMatrixRadial, c: float):
    grid = gmat.grid
    m = lumped_mass(grid)
    K = 0.5 * frac_lap_constant(grid.params) * gmat.matrix + c * np.diag(m)
    return K, m


def _check_positive(w, what="solution"):
    top = float(np.max(np.abs(w))) if len(w) else 0.0
    if len(w) and float(np.min(w)) < -1e-10 * max(top, 1e-300):
        raise PositivityError(f"{what} has negative values (min {float(np.min(w))!r}, max {top!r})")


def solve_linear_radial(grid: RadialGrid, rhs: RadialFunction, c: float = 0.0,
                        gmat: GagliardoMatrixRadial | None = None) -> RadialFunction:
    """Solve (gamma(N,s)/2) G w + c M w = load with lumped mass and load."""
    if c < 0.0:
        raise DomainError("zero-order coefficient c must be nonnegative")
    f = np.asarray(rhs.values if isinstance(rhs, RadialFunction) else rhs, dtype=float)
    if np.any(f < 0.0):
        raise DomainError("right-hand side must be nonnegative")
    if gmat is None:
        gmat = assemble_gagliardo_radial(grid)
    K, m = _system(gmat, c)
    try:
        fac = cho_factor(K, lower=True)
    except LinAlgError as exc:
        raise SolverError("Cholesky factorization failed") from exc
    w = cho_solve(fac, m * f[:-1])
    _check_positive(w)
    return RadialFunction.from_dofs(grid, w)


_NEWTON_MAX = 50
_ARMIJO = 1e-4
_NEWTON_RTOL = 1e-10


def _newton(K, m, F, gamma, eps, w0, scale_hint=None):
    """Damped Newton for K w = m F (w + eps)^{-gamma}, keeping w + eps > 0."""
    w = w0.copy()

    def residual(v):
        return K @ v - m * F * (v + eps) ** (-gamma)

    res = residual(w)
    for it in range(_NEWTON_MAX + 1):
        load = m * F * (w + eps) ** (-gamma)
        scale = max(float(np.max(np.abs(K @ w))), float(np.max(np.abs(load))), 1e-300)
        if float(np.max(np.abs(res))) <= _NEWTON_RTOL * scale:
            return w, it, float(np.max(np.abs(res))), scale
        if it == _NEWTON_MAX:
            break
        J = K + np.diag(gamma * m * F * (w + eps) ** (-gamma - 1.0))
        try:
            step = cho_solve(cho_factor(J, lower=True), -res)
        except LinAlgError:
            step = np.linalg.solve(J, -res)
        phi0 = float(res @ res)
        t = 1.0
        while True:
            trial = w + t * step
            if np.all(trial + eps > 0.0):
                rt = residual(trial)
                if float(rt @ rt) <= (1.0 - 2.0 * _ARMIJO * t) * phi0:
                    break
            t *= 0.5
            if t < 1e-12:
                raise SolverError("Newton line search failed to keep the iterate positive")
        w, res = trial, rt
    raise SolverError(f"Newton did not converge in {_NEWTON_MAX} steps "
                      f"(residual {float(np.max(np.abs(res)))!r})")


@dataclass
class SingularSolution:
    solution: RadialFunction
    iterates: dict
    report: SolveReport

    def __iter__(self):   # allows ``sol, its, rep = solve_singular_radial(...)``
        return iter((self.solution, self.iterates, self.report))


def _k_sweep(K, m, F, gamma, schedule, w_init_linear, newton=_newton):
    """Shared k-regularization driver for the radial and planar solvers."""
    rep = SolveReport()
    iterates = {}
    w_prev = None
    w = None
    for k in schedule:
        Fk = np.minimum(F, float(k))
        eps = 1.0 / k
        if w is None:
            w0 = np.maximum(w_init_linear(Fk), 0.0) ** (1.0 / (gamma + 1.0))
        else:
            w0 = w.copy()
        w, its, res, scale = newton(K, m, Fk, gamma, eps, w0)
        rep.k_sequence.append(k)
        rep.newton_iterations.append(its)
        rep.final_residual = res
        rep.residual_scale = scale
        iterates[k] = w.copy()
        if w_prev is not None:
            top = float(np.max(np.abs(w)))
            margin = float(np.min(w - w_prev))
            rep.monotonicity_margins.append(margin)
            if margin < -1e-8 * top:
                raise MonotonicityError(
                    f"iterate for k={k} drops below the previous one by {-margin!r}")
            inc = float(np.max(np.abs(w - w_prev))) / max(top, 1e-300)
            rep.increments.append(inc)
            if inc <= 1e-6:
                rep.converged_in_k = True
                break
        w_prev = w
    return w, iterates, rep


def solve_singular_radial(grid: RadialGrid, F, gamma: float, c: float = 0.0,
                          schedule=None, gmat: GagliardoMatrixRadial | None = None,
                          limit: bool = True) -> SingularSolution:
    """k-regularized solve of (-Delta)^s w + c w = F / w^gamma on the ball.

    For each k of the schedule, Newton solves the discrete problem with right
    side F_k / (w + 1/k)^gamma, F_k = min(F, k), warm-started from the previous
    k.  The sweep stops early once successive iterates agree to 1e-6 relative.
    With ``limit=True`` the returned solution is the k -> infinity limit of
    the discrete scheme (F uncapped, no shift), obtained by one more Newton
    solve from the last iterate; the per-k iterates are returned unchanged.
    """
    t0 = time.perf_counter()
    if gamma <= 0.0:
        raise DomainError("singular exponent gamma must be positive")
    if c < 0.0:
        raise DomainError("zero-order coefficient c must be nonnegative")
    f = np.asarray(F.values if isinstance(F, RadialFunction) else F, dtype=float)
    if np.any(f < 0.0):
        raise DomainError("F must be nonnegative")
    if schedule is None:
        schedule = default_schedule()
    schedule = list(schedule)
    if any(b <= a for a, b in zip(schedule[:-1], schedule[1:])):
        raise DomainError("k schedule must be strictly increasing")
    if gmat is None:
        gmat = assemble_gagliardo_radial(grid)
    K, m = _system(gmat, c)
    fac = cho_factor(K, lower=True)
    fd = f[:-1]

    def init(Fk):
        return cho_solve(fac, m * Fk)

    w, iterates, rep = _k_sweep(K, m, fd, gamma, schedule, init)
    if limit:
        w, its, res, scale = _newton(K, m, fd, gamma, 0.0, np.maximum(w, 1e-300))
        rep.newton_iterations.append(its)
        rep.final_residual = res
        rep.residual_scale = scale
    _check_positive(w)
    rep.wall_time = time.perf_counter() - t0
    sol = RadialFunction.from_dofs(grid, w)
    its = {k: RadialFunction.from_dofs(grid, v) for k, v in iterates.items()}
    return SingularSolution(sol, its, rep)


# ------------------------------------------------ integrated inequality

_IQ_N = 8


def integrated_inequality_lhs(u: RadialFunction, r: float, power: float = 1.0) -> float:
    """gamma(N,s) int_0^r int_r^inf (u(t)^p - u(rho)^p) Theta(t, rho) rho^{N-1} t^{N-1}.

    Panels follow the mesh on [0, r] and [r, R]; the pair of panels meeting
    at r is integrated with a Duffy split (integrand ~ |t - rho|^{-2s}); the
    part rho > R reduces to u(t)^p tau(t).
    """
    grid = u.grid
    p = grid.params
    N, s = p.N, p.s
    R = grid.R
    if not (0.0 < r < R):
        raise DomainError("r must lie in (0, R)")
    if power < 1.0:
        raise DomainError("power must be >= 1")
    ev = KernelEvaluator(p)
    vals = np.clip(u.values, 0.0, None)

    def up(x):
        return np.interp(x, grid.nodes, vals) ** power

    # panel edges (distance from r measured directly)
    nodes = grid.nodes
    inner = np.concatenate([[0.0], nodes[(nodes > 0.0) & (nodes < r)], [r]])
    outer = np.concatenate([[r], nodes[(nodes > r) & (nodes < R)], [R]])
    # distance-to-r representation: a in (0, r], b in (0, R - r]
    A = r - inner[::-1]          # increasing distances below r, A[0] = 0
    B = outer - r                # increasing distances above r, B[0] = 0
    B[-1] = R - r
    total = 0.0
    xg, wg = gauss_legendre(_IQ_N)
    # corner panel pair: t = r - a, rho = r + b with a in (0, A1), b in (0, B1)
    zj, wz = gauss_jacobi01(_IQ_N + 4, 0.0, 1.0 - 2.0 * s)
    L1, L2 = A[1], B[1]
    for tri in (0, 1):
        z = zj[:, None]
        v = xg[None, :]
        if tri == 0:
            a, b = L1 * z, L2 * z * v
            den = L1 + L2 * v
        else:
            a, b = L1 * z * v, L2 * z
            den = L1 * v + L2
        delta = z * den
        t = r - a
        rho = r + b
        w = L1 * L2 * den ** (-2.0 * s) * wz[:, None] * wg[None, :]
        # (u(t)^p - u(rho)^p)/delta: bounded for Lipschitz u
        diff = (up(t) - up(rho)) / delta
        sm = ev.smooth(t, rho, delta) * t ** (N - 1) * rho ** (N - 1)
        total += float(np.sum(w * diff * sm))
    # remaining panel pairs: tensor Gauss-Legendre with subdivision by gap
    pairs = []
    for i in range(len(A) - 1):
        for j in range(len(B) - 1):
            if i == 0 and j == 0:
                continue
            pairs.append((A[i], A[i + 1], B[j], B[j + 1]))
    stack = list(pairs)
    done = []
    while stack:
        a0, a1, b0, b1 = stack.pop()
        gap = a0 + b0
        if gap >= max(a1 - a0, b1 - b0):
            done.append((a0, a1, b0, b1))
        elif a1 - a0 >= b1 - b0:
            m_ = 0.5 * (a0 + a1)
            stack += [(a0, m_, b0, b1), (m_, a1, b0, b1)]
        else:
            m_ = 0.5 * (b0 + b1)
            stack += [(a0, a1, b0, m_), (a0, a1, m_, b1)]
    if done:
        arr = np.array(done)
        a = arr[:, 0:1, None] + (arr[:, 1:2, None] - arr[:, 0:1, None]) * xg[None, :, None]
        b = arr[:, 2:3, None] + (arr[:, 3:4, None] - arr[:, 2:3, None]) * xg[None, None, :]
        w = ((arr[:, 1] - arr[:, 0]) * (arr[:, 3] - arr[:, 2]))[:, None, None] * wg[None, :, None] * wg[None, None, :]
        delta = a + b
        t = r - a
        rho = r + b
        shape = delta.shape
        t = np.broadcast_to(t, shape)
        rho = np.broadcast_to(rho, shape)
        val = ((up(t) - up(rho)) * delta ** (-1.0 - 2.0 * s)
               * ev.smooth(t, rho, delta) * t ** (N - 1) * rho ** (N - 1))
        total += float(np.sum(w * val))
    # exterior: rho > R contributes u(t)^p tau(t) on [0, r]
    xq, wq = gauss_legendre(_IQ_N)
    edges = inner
    tt = (edges[:-1, None] + np.diff(edges)[:, None] * xq[None, :]).ravel()
    ww = (np.diff(edges)[:, None] * wq[None, :]).ravel()
    tau = tail_function(ev, R, tt, R - tt)
    total += float(np.sum(ww * up(tt) * tau * tt ** (N - 1)))
    return frac_lap_constant(p) * total
