"""Rearrangements of cell-sampled functions and the concentration order.

A function is represented by cell values and cell measures; the decreasing
rearrangement is then a weighted sort with equal values merged, so that
equimeasurability and norm preservation hold exactly rather than up to a
quadrature error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .specfun import DomainError, unit_ball_volume

__all__ = [
    "WeightedSample",
    "StepRearrangement",
    "ConcentrationCurve",
    "ConcentrationResult",
    "MeasureMismatchError",
    "GTestFunction",
    "distribution_function",
    "decreasing_rearrangement",
    "schwarz_profile",
    "SchwarzProfile",
    "maximal_function",
    "concentration_curve",
    "concentration_at",
    "is_less_concentrated",
    "hardy_littlewood_check",
    "schwarz_rearrange_grid",
    "riesz_check",
    "lp_norm",
]


class MeasureMismatchError(DomainError):
    """Compared functions live on domains of different measure."""


@dataclass(eq=False)
class WeightedSample:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.values.shape != self.weights.shape:
            raise ValueError("values and weights must have the same length")
        if np.any(~(self.weights > 0.0)):
            raise ValueError("weights must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    @classmethod
    def from_grid(cls, g) -> "WeightedSample":
        """From a GridFunction2D (or anything with ``values`` and ``domain.areas``)."""
        return cls(g.values, g.domain.areas)


@dataclass(eq=False)
class StepRearrangement:
    """u*(sigma) = plateau_values[k] for breakpoints[k] <= sigma < breakpoints[k+1]."""

    breakpoints: np.ndarray
    plateau_values: np.ndarray
    masses: np.ndarray = None    # exact plateau measures (differences of breakpoints may round)

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.plateau_values = np.asarray(self.plateau_values, dtype=float)
        if self.masses is None:
            self.masses = np.diff(self.breakpoints)
        if len(self.breakpoints) != len(self.plateau_values) + 1:
            raise ValueError("need one more breakpoint than plateaus")

    @property
    def total(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        k = np.searchsorted(self.breakpoints, sigma, side="right") - 1
        inside = (k >= 0) & (k < len(self.plateau_values))
        out = np.zeros(sigma.shape)
        out[inside] = self.plateau_values[k[inside]]
        return out

    def distribution(self, t: float) -> float:
        """|{u* > t}| (equals the source's distribution function)."""
        return float(np.sum(self.masses[self.plateau_values > t]))

    def cumulative(self) -> np.ndarray:
        """C at the breakpoints: 0, then running sums of plateau * width."""
        return np.concatenate([[0.0], np.cumsum(self.plateau_values * self.masses)])

    def lp_norm(self, p: float) -> float:
        w = self.masses
        if math.isinf(p):
            return float(self.plateau_values[0]) if len(w) else 0.0
        return float(np.sum(w * self.plateau_values ** p)) ** (1.0 / p)


def lp_norm(u: WeightedSample, p: float) -> float:
    a = np.abs(u.values)
    if math.isinf(p):
        return float(np.max(a)) if len(a) else 0.0
    return float(np.sum(u.weights * a ** p)) ** (1.0 / p)


def distribution_function(u: WeightedSample, t: float) -> float:
    """mu_u(t) = |{|u| > t}|."""
    return float(np.sum(u.weights[np.abs(u.values) > t]))


def decreasing_rearrangement(u: WeightedSample) -> StepRearrangement:
    a = np.abs(u.values)
    order = np.argsort(-a, kind="mergesort")
    vals = a[order]
    w = u.weights[order]
    # merge ties into single plateaus
    start = np.concatenate([[True], vals[1:] != vals[:-1]]) if len(vals) else np.array([], bool)
    idx = np.flatnonzero(start)
    plateau = vals[idx]
    wsum = np.add.reduceat(w, idx) if len(idx) else np.array([])
    bp = np.concatenate([[0.0], np.cumsum(wsum)])
    return StepRearrangement(bp, plateau, wsum)


def _as_step(u) -> StepRearrangement:
    if isinstance(u, StepRearrangement):
        return u
    if isinstance(u, WeightedSample):
        return decreasing_rearrangement(u)
    raise TypeError("expected a WeightedSample or StepRearrangement")


@dataclass(eq=False)
class SchwarzProfile:
    """Radial nonincreasing profile r -> u*(omega_N r^N) on [0, R_star]."""

    N: int
    radii: np.ndarray           # breakpoint radii, radii[-1] = R_star
    plateau_values: np.ndarray

    @property
    def R_star(self) -> float:
        return float(self.radii[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        k = np.searchsorted(self.radii, r, side="right") - 1
        inside = (k >= 0) & (k < len(self.plateau_values))
        out = np.zeros(r.shape)
        out[inside] = self.plateau_values[k[inside]]
        return out


def schwarz_profile(ustar: StepRearrangement, N: int) -> SchwarzProfile:
    if N < 1:
        raise DomainError("N must be >= 1")
    om = 2.0 if N == 1 else unit_ball_volume(N)
    radii = (ustar.breakpoints / om) ** (1.0 / N)
    return SchwarzProfile(int(N), radii, ustar.plateau_values.copy())


def concentration_at(ustar: StepRearrangement, sigma):
    """Exact C(sigma) = int_0^sigma u* (piecewise linear in sigma)."""
    sigma = np.asarray(sigma, dtype=float)
    return np.interp(sigma, ustar.breakpoints, ustar.cumulative())


def maximal_function(ustar: StepRearrangement, sigma: float) -> float:
    """u**(sigma) = (1/sigma) int_0^sigma u*."""
    if not (0.0 < sigma <= ustar.total * (1.0 + 1e-12)):
        raise DomainError("sigma must lie in (0, |Omega|]")
    return float(concentration_at(ustar, sigma)) / sigma


@dataclass(eq=False)
class ConcentrationCurve:
    volumes: np.ndarray
    cumulative: np.ndarray

    def __call__(self, sigma):
        return np.interp(np.asarray(sigma, dtype=float), self.volumes, self.cumulative)


def concentration_curve(ustar: StepRearrangement, grid=None) -> ConcentrationCurve:
    """C on ``grid`` (defaults to the breakpoints of u*)."""
    if grid is None:
        grid = ustar.breakpoints
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0.0) or np.any(grid > ustar.total * (1.0 + 1e-12)):
        raise DomainError("grid must lie inside [0, |Omega|]")
    return ConcentrationCurve(grid.copy(), concentration_at(ustar, grid))


@dataclass
class ConcentrationResult:
    holds: bool
    worst_margin: float
    worst_volume: float
    tolerance: float
    volumes: np.ndarray = None
    margins: np.ndarray = None

    def __bool__(self):
        return bool(self.holds)


def is_less_concentrated(u, v, tol: float = 0.0) -> ConcentrationResult:
    """u < v in the concentration order: C_u <= C_v + tol max(1, C_v(|Omega|)).

    Checked at every breakpoint of either curve (both are piecewise linear,
    so this is exact).  ``worst_margin`` is max(C_u - C_v) over those points,
    sigma = 0 included, so it is never negative.
    """
    us, vs = _as_step(u), _as_step(v)
    tu, tv = us.total, vs.total
    if abs(tu - tv) > 1e-9 * max(abs(tu), abs(tv), 1e-300):
        raise MeasureMismatchError(f"domain measures differ: {tu!r} vs {tv!r}")
    grid = np.union1d(us.breakpoints, vs.breakpoints)
    grid = grid[grid <= min(tu, tv)]
    cu = concentration_at(us, grid)
    cv = concentration_at(vs, grid)
    margin = cu - cv
    k = int(np.argmax(margin))
    allowed = tol * max(1.0, float(concentration_at(vs, tv)))
    return ConcentrationResult(bool(np.all(margin <= allowed)), float(margin[k]), float(grid[k]),
                               allowed, grid, margin)


@dataclass
class HardyLittlewoodResult:
    lhs: float
    rhs: float
    holds: bool


def hardy_littlewood_check(u: WeightedSample, v: WeightedSample) -> HardyLittlewoodResult:
    """sum |u_i v_i| w_i <= int_0^{|Omega|} u* v*."""
    if u.values.shape != v.values.shape or not np.array_equal(u.weights, v.weights):
        raise MeasureMismatchError("Hardy-Littlewood needs the same cell decomposition")
    lhs = float(np.sum(np.abs(u.values * v.values) * u.weights))
    us, vs = decreasing_rearrangement(u), decreasing_rearrangement(v)
    grid = np.union1d(us.breakpoints, vs.breakpoints)
    mids = 0.5 * (grid[:-1] + grid[1:])
    rhs = float(np.sum(us(mids) * vs(mids) * np.diff(grid)))
    return HardyLittlewoodResult(lhs, rhs, lhs <= rhs + 1e-12 * abs(rhs))


# ------------------------------------------------------------ Riesz check

@dataclass(frozen=True)
class GTestFunction:
    """G_{t,h}(theta): 0 below t, theta - t on (t, t+h], h above."""

    t: float
    h: float

    def __post_init__(self):
        if not self.h > 0.0:
            raise DomainError("h must be positive")

    def __call__(self, theta):
        return np.clip(np.asarray(theta, dtype=float) - self.t, 0.0, self.h)


def schwarz_rearrange_grid(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Discrete Schwarz rearrangement on a tensor grid about its center.

    Cells are ordered by distance of their center to the grid center (ties
    broken by angle, then by index) and receive the values of |u| in
    decreasing order.  The result is an exact permutation of |u|, so it is
    equimeasurable with u on the grid.
    """
    values = np.abs(np.asarray(values, dtype=float))
    cx, cy = 0.5 * (xs[0] + xs[-1]), 0.5 * (ys[0] + ys[-1])
    X, Y = np.meshgrid(xs - cx, ys - cy)
    d2 = np.round((X * X + Y * Y) / (xs[1] - xs[0]) ** 2, 9).ravel()
    ang = np.arctan2(Y, X).ravel()
    cells = np.lexsort((np.arange(d2.size), ang, d2))
    out = np.empty(values.size)
    out[cells] = np.sort(values.ravel(), kind="mergesort")[::-1]
    return out.reshape(values.shape)


@dataclass
class RieszResult:
    lhs: float
    rhs: float
    holds_within: float          # rhs - lhs

    @property
    def relative_violation(self) -> float:
        return max(0.0, self.lhs - self.rhs) / max(abs(self.rhs), 1e-300)


def _riesz_sum_generic(u, v, xs, ys, area, alpha, G):
    wx = np.exp(-alpha * np.subtract.outer(xs, xs) ** 2)
    wy = np.exp(-alpha * np.subtract.outer(ys, ys) ** 2)

    def conv(field):
        return wy @ field @ wx.T

    Gu, Gv = G(u), G(v)
    ones = np.ones_like(u)
    total = (np.sum((u * u - u * Gu) * conv(ones)) + np.sum((v * v - v * Gv) * conv(ones))
             + np.sum(u * conv(Gv)) + np.sum(Gu * conv(v)))
    return float(total) * area * area


def riesz_check(u, v, alpha: float, G, xs=None, ys=None, backend: str | None = None) -> RieszResult:
    """Compare sum F(u_i, v_j) W_alpha(x_i - x_j) a_i a_j before and after rearrangement.

    F(u, v) = u^2 + v^2 - (u - v)(G(u) - G(v)), W_alpha(x) = exp(-alpha |x|^2).
    ``u`` and ``v`` are GridFunction2D on a full rectangular grid, or 2-D
    arrays together with the axes ``xs``, ``ys``.
    """
    if hasattr(u, "domain"):
        dom = u.domain
        if not np.all(dom.mask):
            raise DomainError("riesz_check needs a full rectangular grid")
        xs, ys = dom.xs, dom.ys
        U, V = dom.to_box(u.values), dom.to_box(v.values)
    else:
        U, V = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if np.any(U < 0.0) or np.any(V < 0.0):
        raise DomainError("riesz_check needs nonnegative functions")
    area = float((xs[1] - xs[0]) * (ys[1] - ys[0]))
    Us, Vs = schwarz_rearrange_grid(U, xs, ys), schwarz_rearrange_grid(V, xs, ys)
    if isinstance(G, GTestFunction):
        impl = _backend.get_backend(backend)
        lhs = impl.riesz_double_sum(U, V, (xs, ys), area, alpha, G.t, G.h)
        rhs = impl.riesz_double_sum(Us, Vs, (xs, ys), area, alpha, G.t, G.h)
    else:
        lhs = _riesz_sum_generic(U, V, xs, ys, area, alpha, G)
        rhs = _riesz_sum_generic(Us, Vs, xs, ys, area, alpha, G)
    return RieszResult(lhs, rhs, rhs - lhs)
