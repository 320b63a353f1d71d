"""Pure NumPy implementation of the hot loops (fallback for ``_core``).

The kernel is evaluated in the split form

    Theta(r, rho) = |r - rho|^(-1-2s) * S(r, rho),
    S = P * mx^(2-N+2s) * (mx + mn)^(-1-2s) * g(x),   x = (mn/mx)^2,

with g(x) = 2F1(-s, N/2-1-s; N/2; x) bounded on [0, 1].  g is summed as a
power series in x for x <= 1/2 and through the connection formula in
y = 1 - x otherwise (logarithmic form when 2s = 1).
"""
from __future__ import annotations

import numpy as np

_MAX_TERMS = 200
_TOL = 1e-17


def _series(a, b, c, z):
    """Vectorized 2F1(a, b; c; z) power series for 0 <= z <= 1/2."""
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(_MAX_TERMS):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total += term
        if np.all(np.abs(term) <= _TOL * np.abs(total)):
            break
    return total


def _log_series(coef, y):
    """Sum of the logarithmic branch (2s = 1) for y <= 1/2."""
    (_, _, _, _, _, a, b, _, _, psi1, psi3, psia, psib) = coef[:13]
    m = 2.0
    ly = np.log(np.where(y > 0.0, y, 1.0))
    total = np.zeros_like(y)
    term = np.ones_like(y)
    p1, p3, pa, pb = psi1, psi3, psia, psib
    for n in range(_MAX_TERMS):
        if n > 0:
            term = term * ((a + m + n - 1.0) * (b + m + n - 1.0) / (n * (n + m))) * y
            p1 += 1.0 / n
            p3 += 1.0 / (n + m)
            pa += 1.0 / (a + m + n - 1.0)
            pb += 1.0 / (b + m + n - 1.0)
        add = term * (ly - p1 - p3 + pa + pb)
        total += add
        if n > 2 and np.all(np.abs(term) * (np.abs(ly) + 50.0) <= _TOL * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def g_function(coef, x, y):
    """g(x) with y = 1 - x supplied separately (accurate near x = 1)."""
    N, s, P, A, B, a, b, c, deg = coef[:9]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty_like(x)
    lo = x <= 0.5
    if np.any(lo):
        out[lo] = _series(-s, 0.5 * N - 1.0 - s, 0.5 * N, x[lo])
    hi = ~lo
    if np.any(hi):
        yy = y[hi]
        if deg:
            # A&S 15.3.11 with m = 2: finite part plus y^2 times log series
            lead, cst = coef[13], coef[14]
            finite = lead * (1.0 - a * b * yy)
            out[hi] = finite - cst * yy * yy * _log_series(coef, yy)
        else:
            f1 = _series(-s, 0.5 * N - 1.0 - s, -2.0 * s, yy)
            f2 = _series(0.5 * N + s, 1.0 + s, 2.0 + 2.0 * s, yy)
            out[hi] = A * f1 + B * yy ** (1.0 + 2.0 * s) * f2
    return out


def kernel_smooth(coef, r, rho, delta):
    """S(r, rho) = Theta(r, rho) * |r - rho|^(1+2s); delta = |r - rho| > 0."""
    N, s, P = coef[0], coef[1], coef[2]
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    delta = np.asarray(delta, dtype=float)
    r, rho, delta = np.broadcast_arrays(r, rho, delta)
    mx = np.maximum(r, rho)
    mn = np.minimum(r, rho)
    x = (mn / mx) ** 2
    y = delta * (mx + mn) / (mx * mx)
    g = g_function(coef, x, y)
    return P * mx ** (2.0 - N + 2.0 * s) * (mx + mn) ** (-1.0 - 2.0 * s) * g


def kernel_values(coef, r, rho, delta):
    s = coef[1]
    return np.asarray(delta, dtype=float) ** (-1.0 - 2.0 * s) * kernel_smooth(coef, r, rho, delta)


def riesz_double_sum(u, v, coords, area, alpha, t, h):
    """sum_ij F(u_i, v_j) exp(-alpha |x_i - x_j|^2) a_i a_j with G = G_{t,h}.

    F(u, v) = u^2 + v^2 - (u - v)(G(u) - G(v)).  The Gaussian weight is a
    product of one-dimensional factors on a tensor grid, and F splits into
    p(u) + q(v) + u G(v) + G(u) v, so the sum reduces to a few weighted
    matrix products.  ``coords`` is a pair of 1-D axes (xs, ys) of a tensor
    grid and u, v are arrays of shape (len(ys), len(xs)).
    """
    xs, ys = coords
    wx = np.exp(-alpha * (xs[:, None] - xs[None, :]) ** 2)
    wy = np.exp(-alpha * (ys[:, None] - ys[None, :]) ** 2)

    def G(z):
        return np.clip(z - t, 0.0, h)

    def conv(field):
        return wy @ field @ wx.T

    Gu, Gv = G(u), G(v)
    ones = np.ones_like(u)
    # F = u^2 - u G(u) + v^2 - v G(v) + u G(v) + G(u) v
    p = u * u - u * Gu
    q = v * v - v * Gv
    total = (np.sum(p * conv(ones)) + np.sum(ones * conv(q))
             + np.sum(u * conv(Gv)) + np.sum(Gu * conv(v)))
    return float(total) * area * area
