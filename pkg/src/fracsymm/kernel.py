r"""The radial interaction kernel Theta_{N,s}(r, rho).

Theta is the spherical average that turns the N-dimensional Gagliardo form of
a radial function into a one-dimensional double integral:

    Theta(r, rho) = \int_{S^{N-1}} |r e - rho y|^{-N-2s} dH^{N-1}(y)

for any unit vector e.  Two independent routes are provided:

* :func:`theta_quadrature` integrates the angular representation directly;
* :func:`theta_hypergeometric` uses the closed form
  |S^{N-1}| rho^{-N-2s} 2F1((N+2s)/2, s+1; N/2; r^2/rho^2) for r < rho.

The prefactor of the closed form is the full sphere area 2 pi^{N/2}/Gamma(N/2);
the angular representation carries the (N-2)-sphere area 2 pi^{(N-1)/2} /
Gamma((N-1)/2) in front of an integral over [0, pi].  The two agree.

:class:`KernelEvaluator` is the vectorized split form used by the assemblers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .quadrature import QuadratureError, adaptive_gauss
from .specfun import (AccuracyLossError, DomainError, KernelParams, _hyp2f1_with_error,
                      digamma, gamma_fn, gamma_real, rgamma, sphere_area)

__all__ = [
    "ThetaEval",
    "DiagonalError",
    "NearDiagonalError",
    "ExtrapolationError",
    "theta_quadrature",
    "theta_hypergeometric",
    "theta",
    "near_diagonal_coefficient",
    "near_diagonal_closed_form",
    "KernelEvaluator",
    "kernel_coefficients",
]

METHOD_QUADRATURE = "angular-quadrature"
METHOD_HYPERGEOMETRIC = "hypergeometric"
SWITCH_RATIO2 = 0.98


class DiagonalError(DomainError):
    """Theta is infinite on the diagonal r = rho."""


class NearDiagonalError(DomainError):
    """The angular quadrature cannot resolve a gap this small."""


class ExtrapolationError(ArithmeticError):
    """Richardson estimates disagree; the limit is not trustworthy."""


@dataclass(frozen=True)
class ThetaEval:
    value: float
    method: str
    est_error: float


def _check_radii(r, rho):
    if not (r >= 0.0 and rho >= 0.0) or (r == 0.0 and rho == 0.0):
        raise DomainError(f"radii must be nonnegative and not both zero: r={r!r}, rho={rho!r}")
    if r == rho:
        raise DiagonalError("Theta(r, r) is infinite")


def theta_quadrature(p: KernelParams, r: float, rho: float) -> ThetaEval:
    """Angular-integral route, adaptive Gauss-Legendre graded toward theta = 0."""
    r, rho = float(r), float(rho)
    _check_radii(r, rho)
    if r <= 0.0 or rho <= 0.0:
        raise DomainError("theta_quadrature needs r, rho > 0")
    gap = abs(rho - r)
    if gap / max(r, rho) < 1e-6:
        raise NearDiagonalError(
            f"relative gap {gap / max(r, rho):.3e} below 1e-6; use the near-diagonal split")
    N, s = p.N, p.s
    expo = -0.5 * (N + 2.0 * s)
    four_rr = 4.0 * r * rho
    d2 = gap * gap

    def integrand(th):
        # r^2 - 2 r rho cos(th) + rho^2 written without cancellation
        sh = np.sin(0.5 * th)
        val = (d2 + four_rr * sh * sh) ** expo
        if N > 2:
            val = val * np.sin(th) ** (N - 2)
        return val

    # the peak at theta = 0 has width ~ gap / sqrt(r rho)
    width = gap / math.sqrt(r * rho)
    brk = []
    b = 0.25 * width
    while b < math.pi:
        brk.append(b)
        b *= 2.0
    try:
        val, err = adaptive_gauss(integrand, 0.0, math.pi, rtol=1e-13, breakpoints=brk)
    except QuadratureError as exc:
        raise AccuracyLossError(str(exc)) from exc
    if N == 2:
        pref = 2.0
    else:
        pref = 2.0 * math.pi ** (0.5 * (N - 1)) / gamma_fn(0.5 * (N - 1))
    return ThetaEval(pref * val, METHOD_QUADRATURE, err / val)


def _kernel_hyp2f1(p: KernelParams, x: float):
    """2F1((N+2s)/2, s+1; N/2; x) with Euler-valid parameters.

    c = N/2 does not exceed b = s+1 when N = 2 (or N = 3, s >= 1/2), so the
    contiguous relation
        F(a,b;c;x) = F(a,b;c+1;x) + x ab/(c(c+1)) F(a+1,b+1;c+2;x)
    is used there; both terms have c' > b' > 0 and are positive.
    """
    a = 0.5 * (p.N + 2.0 * p.s)
    b = p.s + 1.0
    c = 0.5 * p.N
    if c > b:
        return _hyp2f1_with_error(a, b, c, x)
    f0, e0 = _hyp2f1_with_error(a, b, c + 1.0, x)
    f1, e1 = _hyp2f1_with_error(a + 1.0, b + 1.0, c + 2.0, x)
    t1 = x * a * b / (c * (c + 1.0)) * f1
    val = f0 + t1
    return val, (e0 * f0 + e1 * t1) / val


def theta_hypergeometric(p: KernelParams, r: float, rho: float) -> ThetaEval:
    """Closed-form route via Gauss 2F1 (arguments swapped when rho < r)."""
    r, rho = float(r), float(rho)
    _check_radii(r, rho)
    mn, mx = (r, rho) if r < rho else (rho, r)
    x = (mn / mx) ** 2
    if x > 1.0 - 1e-10:
        raise AccuracyLossError("r/rho too close to 1 for the hypergeometric route")
    f, err = _kernel_hyp2f1(p, x)
    val = sphere_area(p.N) * mx ** (-p.N - 2.0 * p.s) * f
    return ThetaEval(val, METHOD_HYPERGEOMETRIC, err)


def theta(p: KernelParams, r: float, rho: float) -> ThetaEval:
    """Dispatch: hypergeometric when (min/max)^2 <= 0.98, else quadrature."""
    r, rho = float(r), float(rho)
    _check_radii(r, rho)
    mn, mx = (r, rho) if r < rho else (rho, r)
    if (mn / mx) ** 2 <= SWITCH_RATIO2:
        return theta_hypergeometric(p, r, rho)
    return theta_quadrature(p, r, rho)


def near_diagonal_coefficient(p: KernelParams, t: float) -> float:
    """Limit of Theta(t + d/2, t - d/2) d^{1+2s} as d -> 0+ (Richardson).

    Along the diagonal the product behaves like c0 + c1 d + c2 d^{1+2s} + ...;
    the two leading corrections are eliminated from samples at
    d = (1e-2, 5e-3, 2.5e-3) t.
    """
    t = float(t)
    if not t > 0.0:
        raise DomainError("t must be positive")
    s = p.s
    ds = np.array([1e-2, 5e-3, 2.5e-3]) * t
    est = np.array([theta(p, t + 0.5 * d, t - 0.5 * d).value * d ** (1.0 + 2.0 * s) for d in ds])
    # eliminate d^1 from consecutive pairs (ratio 2), then d^{1+2s}
    r1 = 2.0 * est[1] - est[0]
    r2 = 2.0 * est[2] - est[1]
    q = 2.0 ** (2.0 * s)
    final = (q * r2 - r1) / (q - 1.0)
    if abs(r1 - r2) > 0.01 * abs(final):
        raise ExtrapolationError(
            f"near-diagonal estimates {r1!r} and {r2!r} differ by more than 1%")
    return float(final)


def near_diagonal_closed_form(p: KernelParams, t: float) -> float:
    """Exact near-diagonal coefficient |S^{N-1}| 2^{-1-2s} t^{1-N} g(1)."""
    N, s = p.N, p.s
    g1 = gamma_fn(0.5 * N) * gamma_fn(1.0 + 2.0 * s) / (gamma_fn(0.5 * N + s) * gamma_fn(1.0 + s))
    return sphere_area(N) * 2.0 ** (-1.0 - 2.0 * s) * t ** (1.0 - N) * g1


# ------------------------------------------------------------ fast evaluator

_DEGENERATE_TOL = 1e-12
_INTERP_HALFWIDTH = 5e-3
_INTERP_NODES = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


@lru_cache(maxsize=128)
def kernel_coefficients(N: int, s: float) -> tuple:
    """Constants of the split-form evaluator (see ``_kernel_py``)."""
    N = int(N)
    s = float(s)
    P = sphere_area(N)
    a, b, c = -s, 0.5 * N - 1.0 - s, 0.5 * N
    deg = abs(2.0 * s - 1.0) < _DEGENERATE_TOL
    if deg:
        s = 0.5
        a, b = -0.5, 0.5 * N - 1.5
        m = 2.0
        lead = gamma_fn(m) * gamma_fn(c) / (gamma_fn(a + m) * gamma_fn(b + m))
        cst = gamma_fn(c) * rgamma(a) * rgamma(b) / 2.0
        psis = (digamma(1.0), digamma(3.0), digamma(a + m), digamma(b + m))
        A = B = 0.0
    else:
        A = gamma_fn(c) * gamma_fn(1.0 + 2.0 * s) / (gamma_fn(c + s) * gamma_fn(1.0 + s))
        B = gamma_fn(c) * gamma_real(-1.0 - 2.0 * s) * rgamma(-s) * rgamma(b)
        lead = cst = 0.0
        psis = (0.0, 0.0, 0.0, 0.0)
    return (float(N), s, P, A, B, a, b, c, bool(deg)) + psis + (lead, cst)


class KernelEvaluator:
    """Vectorized Theta in split form: Theta = |r - rho|^{-1-2s} S(r, rho).

    ``smooth(r, rho, delta)`` takes the gap separately so callers working in
    local coordinates keep full relative accuracy of tiny gaps.  For s within
    5e-3 of 1/2 (but not equal) the connection formula cancels badly; there S
    is interpolated in s through five nodes, which is accurate because S is
    analytic in s.
    """

    def __init__(self, p: KernelParams, backend: str | None = None):
        self.params = p
        self._impl = _backend.get_backend(backend)
        off = p.s - 0.5
        if 0.0 < abs(off) < _INTERP_HALFWIDTH and abs(2.0 * off) >= _DEGENERATE_TOL:
            nodes = 0.5 + _INTERP_HALFWIDTH * _INTERP_NODES
            self._coefs = [kernel_coefficients(p.N, float(x)) for x in nodes]
            t = off / _INTERP_HALFWIDTH
            lag = []
            for j in range(len(nodes)):
                w = 1.0
                for m in range(len(nodes)):
                    if m != j:
                        w *= (t - _INTERP_NODES[m]) / (_INTERP_NODES[j] - _INTERP_NODES[m])
                lag.append(w)
            self._weights = lag
        else:
            self._coefs = [kernel_coefficients(p.N, p.s)]
            self._weights = [1.0]

    def smooth(self, r, rho, delta):
        out = None
        for w, coef in zip(self._weights, self._coefs):
            val = w * self._impl.kernel_smooth(coef, r, rho, delta)
            out = val if out is None else out + val
        return out

    def __call__(self, r, rho):
        r = np.asarray(r, dtype=float)
        rho = np.asarray(rho, dtype=float)
        delta = np.abs(r - rho)
        return delta ** (-1.0 - 2.0 * self.params.s) * self.smooth(r, rho, delta)
