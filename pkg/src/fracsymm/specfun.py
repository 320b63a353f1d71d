"""Special functions for the fractional kernel: Gamma, Gauss 2F1 and constants."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureError, adaptive_gauss

__all__ = [
    "KernelParams",
    "DomainError",
    "AccuracyLossError",
    "gamma_fn",
    "gammaln",
    "gamma_real",
    "rgamma",
    "digamma",
    "beta_fn",
    "unit_ball_volume",
    "sphere_area",
    "frac_lap_constant",
    "critical_exponent",
    "hyp2f1",
    "hyp2f1_series",
    "hyp2f1_derivative",
]


class DomainError(ValueError):
    """Argument outside the supported domain of a function."""


class AccuracyLossError(ArithmeticError):
    """The requested value cannot be delivered at the promised accuracy."""


@dataclass(frozen=True)
class KernelParams:
    """Dimension ``N`` and fractional order ``s`` of (-Delta)^s in R^N."""

    N: int
    s: float

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 2:
            raise DomainError(f"dimension N must be an integer >= 2, got {self.N!r}")
        if not (0.0 < float(self.s) < 1.0):
            raise DomainError(f"order s must lie in (0, 1), got {self.s!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "s", float(self.s))


# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _lanczos_sum(z):
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    return acc


def gamma_fn(x: float) -> float:
    """Gamma function for positive real ``x``."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_fn needs x > 0, got {x!r}")
    if x < 0.5:
        # keep the Lanczos argument in its accurate range
        return gamma_fn(x + 1.0) / x
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    if x > 140.0:
        return math.exp(gammaln(x))
    return _SQRT_2PI * t ** (z + 0.5) * math.exp(-t) * _lanczos_sum(z)


def gammaln(x: float) -> float:
    """log Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gammaln needs x > 0, got {x!r}")
    if x < 0.5:
        return gammaln(x + 1.0) - math.log(x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_real(x: float) -> float:
    """Gamma on the whole real line except the poles (reflection for x < 0.5).

    Only used internally for connection coefficients of 2F1.
    """
    x = float(x)
    if x > 0.0:
        return gamma_fn(x)
    if x == math.floor(x):
        raise DomainError(f"Gamma has a pole at {x!r}")
    return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))


def rgamma(x: float) -> float:
    """1/Gamma(x), equal to zero at the poles."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    return 1.0 / gamma_real(x)


def digamma(x: float) -> float:
    """Digamma function for x > 0 (recurrence plus asymptotic series)."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"digamma needs x > 0, got {x!r}")
    acc = 0.0
    while x < 8.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    # Bernoulli tail: 1/12, 1/120, 1/252, 1/240, 1/132, 691/32760
    tail = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * 691.0 / 32760)))))
    return acc + math.log(x) - 0.5 / x - tail


def beta_fn(a: float, b: float) -> float:
    return math.exp(gammaln(a) + gammaln(b) - gammaln(a + b))


def unit_ball_volume(N: int) -> float:
    """omega_N = pi^{N/2} / Gamma(N/2 + 1)."""
    return math.pi ** (0.5 * N) / gamma_fn(0.5 * N + 1.0)


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1}, i.e. N * omega_N."""
    return 2.0 * math.pi ** (0.5 * N) / gamma_fn(0.5 * N)


def frac_lap_constant(p: KernelParams) -> float:
    """Normalization gamma(N, s) of the fractional Laplacian."""
    N, s = p.N, p.s
    return (s * 2.0 ** (2.0 * s) * gamma_fn(0.5 * (N + 2.0 * s))
            / (math.pi ** (0.5 * N) * gamma_fn(1.0 - s)))


def critical_exponent(p: KernelParams) -> float:
    """Fractional Sobolev exponent 2N/(N - 2s)."""
    if p.N <= 2.0 * p.s:
        raise DomainError("critical exponent needs N > 2s")
    return 2.0 * p.N / (p.N - 2.0 * p.s)


# ---------------------------------------------------------------- 2F1

_SERIES_TOL = 1e-15
_SERIES_MAX_TERMS = 10_000


def hyp2f1_series(a: float, b: float, c: float, x: float) -> float:
    """Power series of 2F1(a, b; c; x) for |x| < 1.

    Terminates when |term| < 1e-15 * |sum|; raises after 10^4 terms.
    """
    if c <= 0.0 and c == math.floor(c):
        raise DomainError("c must not be a non-positive integer")
    total = 1.0
    term = 1.0
    for n in range(_SERIES_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x
        total += term
        if term == 0.0 or abs(term) < _SERIES_TOL * abs(total):
            return total
    raise AccuracyLossError(f"2F1 series did not converge in {_SERIES_MAX_TERMS} terms (x={x!r})")


def _check_hyp_args(b, c, x):
    if not (b > 0.0 and c > b):
        raise DomainError(f"2F1 evaluation needs c > b > 0, got b={b!r}, c={c!r}")
    if not x >= 0.0:
        raise DomainError(f"2F1 evaluation needs x >= 0, got {x!r}")
    if x >= 1.0 - 1e-10:
        raise AccuracyLossError(f"2F1 argument too close to 1: x={x!r}")


def _euler_integral(a, b, c, x, rtol=1e-13):
    """Euler integral representation, split at tau = 1/2.

    Left half: tau = sigma^(1/b) absorbs tau^(b-1).  Right half:
    1 - tau = sigma^(1/(c-b)) absorbs (1-tau)^(c-b-1).  Both transformed
    integrands are bounded, so plain Gauss-Legendre panels converge.
    """
    cb = c - b

    def left(sig):
        tau = sig ** (1.0 / b)
        return (1.0 - tau) ** (cb - 1.0) * (1.0 - x * tau) ** (-a) / b

    def right(sig):
        om = sig ** (1.0 / cb)           # 1 - tau
        tau = 1.0 - om
        return tau ** (b - 1.0) * ((1.0 - x) + x * om) ** (-a) / cb

    s_left = 0.5 ** b
    s_right = 0.5 ** cb
    # where (1 - x*tau)^(-a) varies on the right panel: om ~ (1-x)/x
    brk = []
    scale = ((1.0 - x) / max(x, 1e-300)) ** cb
    while scale < s_right:
        brk.append(scale)
        scale *= 4.0
    lv, le = adaptive_gauss(left, 0.0, s_left, rtol=rtol)
    rv, re_ = adaptive_gauss(right, 0.0, s_right, rtol=rtol, breakpoints=brk)
    pref = math.exp(gammaln(c) - gammaln(b) - gammaln(cb))
    val = pref * (lv + rv)
    err = pref * (le + re_)
    return val, err


def _hyp2f1_with_error(a, b, c, x):
    a, b, c, x = float(a), float(b), float(c), float(x)
    _check_hyp_args(b, c, x)
    if x == 0.0:
        return 1.0, 0.0
    if x <= 0.5:
        return hyp2f1_series(a, b, c, x), 1e-15
    try:
        val, err = _euler_integral(a, b, c, x)
    except QuadratureError as exc:
        raise AccuracyLossError(str(exc)) from exc
    rel = err / abs(val) if val != 0.0 else err
    if rel > 1e-10:
        raise AccuracyLossError(f"2F1 Euler integral error estimate {rel:.2e} too large")
    return val, rel


def hyp2f1(a: float, b: float, c: float, x: float) -> float:
    """Gauss hypergeometric 2F1(a, b; c; x) for c > b > 0 and 0 <= x < 1."""
    return _hyp2f1_with_error(a, b, c, x)[0]


def hyp2f1_derivative(a: float, b: float, c: float, x: float) -> float:
    """d/dx 2F1(a, b; c; x) = (ab/c) 2F1(a+1, b+1; c+1; x)."""
    return a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, x)


def hyp2f1_vec(a, b, c, x):
    """Elementwise :func:`hyp2f1` over an array of arguments."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for idx, xi in np.ndenumerate(x):
        out[idx] = hyp2f1(a, b, c, xi)
    return out
