# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: split-form kernel evaluation and the Riesz double sum.

Mirrors ``_kernel_py`` branch for branch; see that module for the formulas.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, log, fabs, exp

cnp.import_array()

DEF MAX_TERMS = 400
DEF TOL = 1e-17


cdef inline double _series(double a, double b, double c, double z) nogil:
    cdef double total = 1.0, term = 1.0
    cdef int n
    for n in range(MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if fabs(term) <= TOL * fabs(total):
            break
    return total


cdef inline double _log_series(double a, double b, double y, double psi1,
                               double psi3, double psia, double psib) nogil:
    cdef double m = 2.0
    cdef double ly = log(y) if y > 0.0 else 0.0
    cdef double total = 0.0, term = 1.0, add
    cdef double p1 = psi1, p3 = psi3, pa = psia, pb = psib
    cdef int n
    for n in range(MAX_TERMS):
        if n > 0:
            term *= (a + m + n - 1.0) * (b + m + n - 1.0) / (n * (n + m)) * y
            p1 += 1.0 / n
            p3 += 1.0 / (n + m)
            pa += 1.0 / (a + m + n - 1.0)
            pb += 1.0 / (b + m + n - 1.0)
        add = term * (ly - p1 - p3 + pa + pb)
        total += add
        if n > 2 and fabs(term) * (fabs(ly) + 50.0) <= TOL * fabs(total):
            break
    return total


cdef struct Coef:
    double N, s, P, A, B, a, b, c
    int deg
    double psi1, psi3, psia, psib, lead, cst


cdef Coef _unpack(tuple coef):
    cdef Coef k
    k.N, k.s, k.P, k.A, k.B, k.a, k.b, k.c = coef[:8]
    k.deg = 1 if coef[8] else 0
    k.psi1, k.psi3, k.psia, k.psib, k.lead, k.cst = coef[9:15]
    return k


cdef inline double _g(Coef* k, double x, double y) nogil:
    cdef double f1, f2
    if x <= 0.5:
        return _series(-k.s, 0.5 * k.N - 1.0 - k.s, 0.5 * k.N, x)
    if k.deg:
        return (k.lead * (1.0 - k.a * k.b * y)
                - k.cst * y * y * _log_series(k.a, k.b, y, k.psi1, k.psi3, k.psia, k.psib))
    f1 = _series(-k.s, 0.5 * k.N - 1.0 - k.s, -2.0 * k.s, y)
    f2 = _series(0.5 * k.N + k.s, 1.0 + k.s, 2.0 + 2.0 * k.s, y)
    return k.A * f1 + k.B * pow(y, 1.0 + 2.0 * k.s) * f2


cdef inline double _smooth(Coef* k, double r, double rho, double delta) nogil:
    cdef double mx = r if r > rho else rho
    cdef double mn = rho if r > rho else r
    cdef double x = (mn / mx) * (mn / mx)
    cdef double y = delta * (mx + mn) / (mx * mx)
    return (k.P * pow(mx, 2.0 - k.N + 2.0 * k.s) * pow(mx + mn, -1.0 - 2.0 * k.s)
            * _g(k, x, y))


def g_function(tuple coef, x, y):
    cdef Coef k = _unpack(coef)
    cdef const double[::1] xf = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef const double[::1] yf = np.ascontiguousarray(y, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = xf.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _g(&k, xf[i], yf[i])
    return out.reshape(np.shape(x))


def kernel_smooth(tuple coef, r, rho, delta):
    cdef Coef k = _unpack(coef)
    rb, pb, db = np.broadcast_arrays(np.asarray(r, dtype=np.float64),
                                     np.asarray(rho, dtype=np.float64),
                                     np.asarray(delta, dtype=np.float64))
    shape = rb.shape
    cdef const double[::1] rf = np.ascontiguousarray(rb).ravel()
    cdef const double[::1] pf = np.ascontiguousarray(pb).ravel()
    cdef const double[::1] df = np.ascontiguousarray(db).ravel()
    cdef Py_ssize_t i, n = rf.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _smooth(&k, rf[i], pf[i], df[i])
    return out.reshape(shape)


def kernel_values(tuple coef, r, rho, delta):
    s = coef[1]
    return np.asarray(delta, dtype=np.float64) ** (-1.0 - 2.0 * s) * kernel_smooth(coef, r, rho, delta)


cdef inline double _clipG(double z, double t, double h) nogil:
    z -= t
    if z < 0.0:
        return 0.0
    if z > h:
        return h
    return z


def riesz_double_sum(u, v, coords, double area, double alpha, double t, double h):
    """Direct O(n^2) sum of F(u_i, v_j) W(x_i - x_j) a_i a_j on a tensor grid."""
    xs, ys = coords
    cdef const double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[:, ::1] wx = np.exp(-alpha * (np.subtract.outer(xs, xs)) ** 2)
    cdef double[:, ::1] wy = np.exp(-alpha * (np.subtract.outer(ys, ys)) ** 2)
    cdef Py_ssize_t ny = uu.shape[0], nx = uu.shape[1]
    cdef Py_ssize_t iy, ix, jy, jx
    cdef double ui, gui, vj, row, total = 0.0, inner, wyy
    with nogil:
        for iy in range(ny):
            for ix in range(nx):
                ui = uu[iy, ix]
                gui = _clipG(ui, t, h)
                row = 0.0
                for jy in range(ny):
                    wyy = wy[iy, jy]
                    inner = 0.0
                    for jx in range(nx):
                        vj = vv[jy, jx]
                        inner += (ui * ui + vj * vj - (ui - vj) * (gui - _clipG(vj, t, h))) * wx[ix, jx]
                    row += wyy * inner
                total += row
    return total * area * area
