# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels: Lambert W and the Cox risk-set sweeps.

Same surface as ``coxover._kern.fallback``. The extended-precision sweep
uses 80-bit ``long double`` accumulators with Neumaier compensation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log

cnp.import_array()

cdef extern from "math.h" nogil:
    long double expl(long double)
    long double logl(long double)
    long double fabsl(long double)

cdef double _E = 2.718281828459045


cdef double _w0(double z) noexcept nogil:
    cdef double w, ew, f, dw, lz, h, hp
    cdef int it
    if z <= 0.0:
        return 0.0
    if z <= _E:
        w = z / (1.0 + z)
        for it in range(30):
            ew = exp(w)
            f = w * ew - z
            dw = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0))
            w -= dw
            if fabs(dw) <= 1e-16 * (1.0 + fabs(w)):
                break
        return w
    # Large branch: Halley on h(w) = w + log w - log z (overflow-free).
    lz = log(z)
    w = lz - log(lz)
    for it in range(30):
        h = w + log(w) - lz
        hp = 1.0 + 1.0 / w
        dw = h / (hp + h / (2.0 * w * w * hp))
        w -= dw
        if fabs(dw) <= 1e-16 * (1.0 + fabs(w)):
            break
    return w


def lambert_w0(double[::1] z):
    """Elementwise principal-branch Lambert W for a nonnegative 1-D array."""
    cdef Py_ssize_t n = z.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _w0(z[i])
    return out_arr


def cox_loglik(double[::1] eta, bint extended=False):
    """Partial log-likelihood for time-ascending linear predictors."""
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t i
    cdef double c = eta[0]
    cdef double s1 = 0.0, ll = 0.0
    cdef long double s1l = 0.0, lll = 0.0
    for i in range(n):
        if eta[i] > c:
            c = eta[i]
    if extended:
        with nogil:
            for i in range(n - 1, -1, -1):
                s1l += expl(<long double> eta[i] - <long double> c)
                lll += (<long double> eta[i]) - logl(s1l) - (<long double> c)
        return float(lll)
    with nogil:
        for i in range(n - 1, -1, -1):
            s1 += exp(eta[i] - c)
            ll += eta[i] - log(s1) - c
    return ll


def cox_sweep(double[::1] eta, double[:, ::1] Z, bint extended=False):
    """Risk-set sweep over descending time; see the fallback docstring."""
    if extended:
        return _sweep_extended(eta, Z)
    return _sweep_standard(eta, Z)


def _sweep_standard(double[::1] eta, double[:, ::1] Z):
    cdef Py_ssize_t n = eta.shape[0], p = Z.shape[1]
    cdef Py_ssize_t i, a, b

    grad_arr = np.zeros(p, dtype=np.float64)
    hess_arr = np.zeros((p, p), dtype=np.float64)
    logs1_arr = np.empty(n, dtype=np.float64)
    sz_arr = np.zeros(p, dtype=np.float64)
    szz_arr = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[:, ::1] hess = hess_arr
    cdef double[::1] logs1 = logs1_arr
    cdef double[::1] sz = sz_arr
    cdef double[:, ::1] szz = szz_arr

    cdef double c = eta[0]
    cdef double s1 = 0.0, ll = 0.0, y, ls, ma, mb, za
    for i in range(n):
        if eta[i] > c:
            c = eta[i]

    with nogil:
        for i in range(n - 1, -1, -1):
            y = exp(eta[i] - c)
            s1 += y
            for a in range(p):
                za = Z[i, a]
                sz[a] += y * za
                for b in range(p):
                    szz[a, b] += y * za * Z[i, b]
            ls = log(s1) + c
            logs1[i] = ls
            ll += eta[i] - ls
            for a in range(p):
                ma = sz[a] / s1
                grad[a] += Z[i, a] - ma
                for b in range(p):
                    mb = sz[b] / s1
                    hess[a, b] -= szz[a, b] / s1 - ma * mb

    return ll, grad_arr, hess_arr, logs1_arr


def _sweep_extended(double[::1] eta, double[:, ::1] Z):
    cdef Py_ssize_t n = eta.shape[0], p = Z.shape[1]
    cdef Py_ssize_t i, a, b

    grad_arr = np.zeros(p, dtype=np.float64)
    hess_arr = np.zeros((p, p), dtype=np.float64)
    logs1_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[:, ::1] hess = hess_arr
    cdef double[::1] logs1 = logs1_arr

    sz_arr = np.zeros(p, dtype=np.longdouble)
    cz_arr = np.zeros(p, dtype=np.longdouble)
    szz_arr = np.zeros((p, p), dtype=np.longdouble)
    czz_arr = np.zeros((p, p), dtype=np.longdouble)
    m_arr = np.zeros(p, dtype=np.longdouble)
    cdef long double[::1] sz = sz_arr
    cdef long double[::1] cz = cz_arr
    cdef long double[:, ::1] szz = szz_arr
    cdef long double[:, ::1] czz = czz_arr
    cdef long double[::1] m = m_arr

    cdef double c = eta[0]
    cdef long double s1 = 0.0, c1 = 0.0, y, t, x, tot1, ls, ll = 0.0, cl
    for i in range(n):
        if eta[i] > c:
            c = eta[i]
    cl = <long double> c

    with nogil:
        for i in range(n - 1, -1, -1):
            y = expl(<long double> eta[i] - cl)
            # Neumaier-compensated accumulation of the risk-set sums.
            t = s1 + y
            if fabsl(s1) >= fabsl(y):
                c1 += (s1 - t) + y
            else:
                c1 += (y - t) + s1
            s1 = t
            for a in range(p):
                x = y * (<long double> Z[i, a])
                t = sz[a] + x
                if fabsl(sz[a]) >= fabsl(x):
                    cz[a] += (sz[a] - t) + x
                else:
                    cz[a] += (x - t) + sz[a]
                sz[a] = t
                for b in range(p):
                    x = y * (<long double> Z[i, a]) * (<long double> Z[i, b])
                    t = szz[a, b] + x
                    if fabsl(szz[a, b]) >= fabsl(x):
                        czz[a, b] += (szz[a, b] - t) + x
                    else:
                        czz[a, b] += (x - t) + szz[a, b]
                    szz[a, b] = t

            tot1 = s1 + c1
            ls = logl(tot1) + cl
            logs1[i] = <double> ls
            ll += (<long double> eta[i]) - ls
            for a in range(p):
                m[a] = (sz[a] + cz[a]) / tot1
            for a in range(p):
                grad[a] += Z[i, a] - <double> m[a]
                for b in range(p):
                    hess[a, b] -= <double> ((szz[a, b] + czz[a, b]) / tot1 - m[a] * m[b])

    return float(ll), grad_arr, hess_arr, logs1_arr
