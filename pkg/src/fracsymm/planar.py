"""Collocation solver for (-Delta)^s on planar domains (N = 2).

Cells of a uniform grid whose centers lie inside the shape carry the
unknowns.  With Q(o) the integral of |y|^{-2-2s} over the cell at offset o
(exact for the 8 neighbours, midpoint rule otherwise, zero for o = 0),

    (A u)_i = gamma(2,s) [ D_i u_i - sum_{j in Omega} Q(x_j - x_i) u_j ],
    D_i = E_i + sum_{j in box, j != i} Q(x_j - x_i),

where E_i is the exact integral of the kernel over the complement of the
grid's bounding box.  D_i - sum_{j in Omega} Q_ij is the exterior tail T_i.
The convolution structure is applied with FFTs, so no dense matrix is
formed; linear systems use Jacobi-preconditioned conjugate gradients.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy import integrate
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .radial import MonotonicityError, PositivityError, SolveReport, SolverError, default_schedule
from .specfun import DomainError, KernelParams, frac_lap_constant

__all__ = [
    "PlanarDomain",
    "GridFunction2D",
    "PlanarOperator",
    "ResolutionError",
    "build_domain",
    "parse_shape",
    "assemble_operator_2d",
    "solve_linear_2d",
    "solve_singular_2d",
    "seminorm_2d_squared",
    "exterior_box_integral",
]


class ResolutionError(DomainError):
    """Grid too coarse for the requested shape."""


# ----------------------------------------------------------------- domain

@dataclass(frozen=True, eq=False)
class PlanarDomain:
    shape: tuple            # ("disk", R) | ("square", L) | ("ellipse", a, b)
    h: float
    xs: np.ndarray          # cell-center abscissae of the bounding box
    ys: np.ndarray
    mask: np.ndarray        # (ny, nx) True where the center is inside
    iy: np.ndarray          # row-major cell indices into the box
    ix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.iy)

    @property
    def centers(self) -> np.ndarray:
        return np.column_stack([self.xs[self.ix], self.ys[self.iy]])

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def areas(self) -> np.ndarray:
        return np.full(self.n, self.h * self.h)

    @property
    def area(self) -> float:
        return self.n * self.h * self.h

    @property
    def analytic_area(self) -> float:
        kind = self.shape[0]
        if kind == "disk":
            return math.pi * self.shape[1] ** 2
        if kind == "square":
            return self.shape[1] ** 2
        return math.pi * self.shape[1] * self.shape[2]

    def to_box(self, values) -> np.ndarray:
        out = np.zeros(self.mask.shape)
        out[self.iy, self.ix] = values
        return out

    def boundary_distance(self) -> np.ndarray:
        """Distance of each center to the boundary (lower bound for ellipses)."""
        x, y = self.centers.T
        kind = self.shape[0]
        if kind == "disk":
            return self.shape[1] - np.hypot(x, y)
        if kind == "square":
            return 0.5 * self.shape[1] - np.maximum(np.abs(x), np.abs(y))
        a, b = self.shape[1], self.shape[2]
        rho = np.hypot(x / a, y / b)
        return (1.0 - rho) * min(a, b)


@dataclass(eq=False)
class GridFunction2D:
    domain: PlanarDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.n,):
            raise ValueError("values must have one entry per cell")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    @classmethod
    def from_callable(cls, dom: PlanarDomain, fn) -> "GridFunction2D":
        x, y = dom.centers.T
        return cls(dom, np.broadcast_to(np.asarray(fn(x, y), dtype=float), (dom.n,)).copy())

    def __mul__(self, c):
        return GridFunction2D(self.domain, self.values * c)

    __rmul__ = __mul__


def parse_shape(spec) -> tuple:
    """Parse 'disk:R', 'square:L', 'ellipse:a,b' (or pass a tuple through)."""
    if isinstance(spec, tuple):
        return spec
    kind, _, rest = str(spec).partition(":")
    vals = tuple(float(v) for v in rest.split(",") if v.strip())
    kind = kind.strip().lower()
    want = {"disk": 1, "square": 1, "ellipse": 2}
    if kind not in want or len(vals) != want[kind] or any(v <= 0 for v in vals):
        raise DomainError(f"bad shape specification {spec!r}")
    return (kind,) + vals


def build_domain(shape, h: float) -> PlanarDomain:
    """Uniform grid of spacing h; keep cells whose centers are strictly inside."""
    shape = parse_shape(shape)
    kind = shape[0]
    if not h > 0.0:
        raise DomainError("grid spacing must be positive")
    if kind == "disk":
        hx = hy = shape[1]
        diam = 2.0 * shape[1]
    elif kind == "square":
        hx = hy = 0.5 * shape[1]
        diam = shape[1]
    else:
        hx, hy = shape[1], shape[2]
        diam = 2.0 * min(shape[1], shape[2])
    if diam / h < 16.0 - 1e-9:
        raise ResolutionError(f"need at least 16 cells across the domain, got {diam / h:.2f}")
    nx = int(math.ceil(2.0 * hx / h - 1e-9))
    ny = int(math.ceil(2.0 * hy / h - 1e-9))
    xs = (np.arange(nx) + 0.5) * h - 0.5 * nx * h
    ys = (np.arange(ny) + 0.5) * h - 0.5 * ny * h
    X, Y = np.meshgrid(xs, ys)
    if kind == "disk":
        mask = X * X + Y * Y < shape[1] ** 2
    elif kind == "square":
        mask = np.maximum(np.abs(X), np.abs(Y)) < 0.5 * shape[1]
    else:
        mask = (X / shape[1]) ** 2 + (Y / shape[2]) ** 2 < 1.0
    iy, ix = np.nonzero(mask)        # row-major order
    return PlanarDomain(shape, float(h), xs, ys, mask, iy, ix)


# -------------------------------------------------------- kernel pieces

@lru_cache(maxsize=64)
def _neighbour_integrals(s: float):
    """Integrals of |y|^{-2-2s} over the unit cells at offsets (1,0) and (1,1)."""
    f = lambda y, x: (x * x + y * y) ** (-1.0 - s)
    edge, err1 = integrate.dblquad(f, 0.5, 1.5, -0.5, 0.5, epsabs=0.0, epsrel=1e-13)
    corner, err2 = integrate.dblquad(f, 0.5, 1.5, 0.5, 1.5, epsabs=0.0, epsrel=1e-13)
    if err1 > 1e-10 * edge or err2 > 1e-10 * corner:
        raise SolverError("neighbour-cell quadrature failed to converge")
    return edge, corner


def _sinpow_integral(phi, p):
    """int_0^phi sin^p(t) dt for 0 <= phi <= pi/2."""
    a = 0.5 * (p + 1.0)
    return 0.5 * beta_fn(a, 0.5) * betainc(a, 0.5, np.sin(phi) ** 2)


def _halfplane(d, s):
    return beta_fn(0.5, 0.5 + s) / (2.0 * s) * d ** (-2.0 * s)


def _quadrant(a, b, s):
    th = np.arctan2(b, a)
    p = 2.0 * s
    return (b ** (-p) * _sinpow_integral(th, p)
            + a ** (-p) * _sinpow_integral(0.5 * np.pi - th, p)) / (2.0 * s)


def exterior_box_integral(x, y, X: float, Y: float, s: float):
    """int over R^2 minus [-X,X]x[-Y,Y] of |(x,y) - z|^{-2-2s} dz (exact).

    Inclusion-exclusion over the four half-planes beyond the edges and the
    four quadrants beyond the corners.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dl, dr = x + X, X - x
    db, dt = y + Y, Y - y
    total = _halfplane(dl, s) + _halfplane(dr, s) + _halfplane(db, s) + _halfplane(dt, s)
    total -= (_quadrant(dr, dt, s) + _quadrant(dr, db, s)
              + _quadrant(dl, dt, s) + _quadrant(dl, db, s))
    return total


def _offset_kernel(ny, nx, h, s):
    """Q over offsets (dy, dx) in [-(ny-1), ny-1] x [-(nx-1), nx-1]."""
    oy = np.arange(-(ny - 1), ny)[:, None]
    ox = np.arange(-(nx - 1), nx)[None, :]
    d2 = (oy * oy + ox * ox).astype(float)
    d2[ny - 1, nx - 1] = 1.0
    Q = h * h * (h * h * d2) ** (-1.0 - s)
    Q[ny - 1, nx - 1] = 0.0
    edge, corner = _neighbour_integrals(s)
    scale = h ** (-2.0 * s)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == dx == 0:
                continue
            if abs(dy) + abs(dx) == 1:
                val = edge
            else:
                val = corner
            if 0 <= ny - 1 + dy < 2 * ny - 1 and 0 <= nx - 1 + dx < 2 * nx - 1:
                Q[ny - 1 + dy, nx - 1 + dx] = val * scale
    return Q


class _Convolver:
    """Applies sum_j Q(x_i - x_j) U_j on the bounding box via circular FFT."""

    def __init__(self, Q, ny, nx):
        self.ny, self.nx = ny, nx
        self.shape = (2 * ny, 2 * nx)
        Kc = np.zeros(self.shape)
        oy = np.arange(-(ny - 1), ny) % (2 * ny)
        ox = np.arange(-(nx - 1), nx) % (2 * nx)
        Kc[np.ix_(oy, ox)] = Q
        self.khat = sfft.rfft2(Kc)

    def __call__(self, U):
        out = sfft.irfft2(sfft.rfft2(U, s=self.shape) * self.khat, s=self.shape)
        return out[: self.ny, : self.nx]


@dataclass(eq=False)
class PlanarOperator:
    """Discrete (-Delta)^s on a planar domain, applied matrix-free."""

    domain: PlanarDomain
    params: KernelParams
    diag: np.ndarray          # D_i (without the gamma(2,s) factor)
    tail: np.ndarray          # T_i
    constant: float           # gamma(2, s)
    offsets: np.ndarray = field(repr=False)
    _conv: _Convolver = field(repr=False)

    @property
    def n(self):
        return self.domain.n

    def apply_kernel(self, u):
        """sum_{j in Omega} Q_ij u_j."""
        dom = self.domain
        return self._conv(dom.to_box(u))[dom.iy, dom.ix]

    def matvec(self, u):
        u = np.asarray(u, dtype=float)
        return self.constant * (self.diag * u - self.apply_kernel(u))

    __matmul__ = matvec

    def diagonal(self):
        return self.constant * self.diag

    def to_dense(self) -> np.ndarray:
        """Dense matrix (small domains only)."""
        dom = self.domain
        if dom.n > 6000:
            raise MemoryError("domain too large for a dense operator")
        ny, nx = dom.mask.shape
        dy = dom.iy[:, None] - dom.iy[None, :]
        dx = dom.ix[:, None] - dom.ix[None, :]
        K = self.offsets[dy + ny - 1, dx + nx - 1]
        A = -K
        A[np.diag_indices(dom.n)] = self.diag
        return self.constant * A


def assemble_operator_2d(dom: PlanarDomain, s: float) -> PlanarOperator:
    p = KernelParams(2, s)
    ny, nx = dom.mask.shape
    h = dom.h
    Q = _offset_kernel(ny, nx, h, p.s)
    conv = _Convolver(Q, ny, nx)
    X, Y = 0.5 * nx * h, 0.5 * ny * h
    x, y = dom.centers.T
    ext = exterior_box_integral(x, y, X, Y, p.s)
    box_sum = conv(np.ones((ny, nx)))[dom.iy, dom.ix]
    diag = ext + box_sum
    dom_sum = conv(dom.mask.astype(float))[dom.iy, dom.ix]
    tail = diag - dom_sum
    if not (np.all(np.isfinite(diag)) and np.all(tail > 0.0)):
        raise SolverError("exterior tail must be positive and finite")
    return PlanarOperator(dom, p, diag, tail, frac_lap_constant(p), Q, conv)


def seminorm_2d_squared(u: GridFunction2D, s: float, op: PlanarOperator | None = None) -> float:
    """sum_{i != j} (u_i - u_j)^2 K_ij a_i a_j + 2 sum_i u_i^2 T_i a_i."""
    if op is None:
        op = assemble_operator_2d(u.domain, s)
    v = u.values
    a = u.domain.cell_area
    form = float(v @ (op.diag * v - op.apply_kernel(v)))
    return max(2.0 * a * form, 0.0)


# ---------------------------------------------------------------- solvers

_CG_RTOL = 1e-13


def _pcg(op_apply, diag, b, x0=None):
    n = len(b)
    A = LinearOperator((n, n), matvec=op_apply, dtype=float)
    P = LinearOperator((n, n), matvec=lambda r: r / diag, dtype=float)
    x, info = cg(A, b, x0=x0, rtol=_CG_RTOL, atol=0.0, maxiter=20 * n, M=P)
    if info != 0:
        raise SolverError(f"conjugate gradients did not converge (info={info})")
    return x


def _check_positive(u, what="solution"):
    top = float(np.max(np.abs(u))) if len(u) else 0.0
    if len(u) and float(np.min(u)) < -1e-10 * max(top, 1e-300):
        raise PositivityError(f"{what} has negative values (min {float(np.min(u))!r})")


def solve_linear_2d(op: PlanarOperator, f: GridFunction2D, c: float = 0.0) -> GridFunction2D:
    """Solve A u + c u = f."""
    if c < 0.0:
        raise DomainError("c must be nonnegative")
    b = np.asarray(f.values, dtype=float)
    if np.all(b == 0.0):
        return GridFunction2D(op.domain, np.zeros(op.n))
    u = _pcg(lambda v: op.matvec(v) + c * v, op.diagonal() + c, b)
    _check_positive(u)
    return GridFunction2D(op.domain, u)


_NEWTON_MAX = 50
_ARMIJO = 1e-4
_NEWTON_RTOL = 1e-10


class _Shifted:
    def __init__(self, op, c):
        self.op, self.c = op, c

    def __matmul__(self, v):
        return self.op.matvec(v) + self.c * v


def _newton_2d(K, m, F, gamma, eps, w0):
    op, c = K.op, K.c
    w = w0.copy()

    def residual(v):
        return K @ v - F * (v + eps) ** (-gamma)

    res = residual(w)
    base = op.diagonal() + c
    for it in range(_NEWTON_MAX + 1):
        load = F * (w + eps) ** (-gamma)
        scale = max(float(np.max(np.abs(K @ w))), float(np.max(np.abs(load))), 1e-300)
        if float(np.max(np.abs(res))) <= _NEWTON_RTOL * scale:
            return w, it, float(np.max(np.abs(res))), scale
        if it == _NEWTON_MAX:
            break
        dj = gamma * F * (w + eps) ** (-gamma - 1.0)
        step = _pcg(lambda v: K @ v + dj * v, base + dj, -res)
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
    raise SolverError(f"Newton did not converge in {_NEWTON_MAX} steps")


@dataclass
class PlanarSingularSolution:
    solution: GridFunction2D
    iterates: dict
    report: SolveReport

    def __iter__(self):
        return iter((self.solution, self.iterates, self.report))


def solve_singular_2d(dom: PlanarDomain, f: GridFunction2D, gamma: float, c: float = 0.0,
                      schedule=None, s: float | None = None, op: PlanarOperator | None = None,
                      limit: bool = True) -> PlanarSingularSolution:
    """k-regularized collocation solve of (-Delta)^s u + c u = f / u^gamma.

    Same scheme as :func:`fracsymm.radial.solve_singular_radial`: Newton per k
    on A u + c u = f_k / (u + 1/k)^gamma, warm-started along the schedule,
    followed (``limit=True``) by the k -> infinity limit of the discrete
    equations.  Interior positivity is checked on cells at distance >= 4h
    from the boundary.
    """
    from .radial import _k_sweep

    t0 = time.perf_counter()
    if op is None:
        if s is None:
            raise DomainError("pass either the operator or the order s")
        op = assemble_operator_2d(dom, s)
    if gamma <= 0.0 or c < 0.0:
        raise DomainError("need gamma > 0 and c >= 0")
    F = np.asarray(f.values, dtype=float)
    if np.any(F < 0.0):
        raise DomainError("f must be nonnegative")
    if schedule is None:
        schedule = default_schedule()
    schedule = list(schedule)
    if any(b <= a for a, b in zip(schedule[:-1], schedule[1:])):
        raise DomainError("k schedule must be strictly increasing")
    K = _Shifted(op, c)
    ones = np.ones(op.n)
    base = op.diagonal() + c

    def init(Fk):
        if np.all(Fk == 0.0):
            return np.zeros_like(Fk)
        return _pcg(lambda v: K @ v, base, Fk)

    w, iterates, rep = _k_sweep(K, ones, F, gamma, schedule, init, newton=_newton_2d)
    if limit:
        w, its, res, scale = _newton_2d(K, ones, F, gamma, 0.0, np.maximum(w, 1e-300))
        rep.newton_iterations.append(its)
        rep.final_residual = res
        rep.residual_scale = scale
    _check_positive(w)
    inner = dom.boundary_distance() >= 4.0 * dom.h
    if np.any(inner) and np.any(F > 0.0) and not float(np.min(w[inner])) > 0.0:
        raise PositivityError("solution is not strictly positive away from the boundary")
    rep.wall_time = time.perf_counter() - t0
    return PlanarSingularSolution(GridFunction2D(dom, w),
                                  {k: GridFunction2D(dom, v) for k, v in iterates.items()}, rep)
