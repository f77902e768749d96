# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tilted-bank reductions; same contract as ``mediv._tilt_py``.

Each call makes one pass for the max-shift, one pass computing and caching
the weights alongside the first-moment sums, and one pass for the centred
second moments.
"""

import numpy as np
from libc.math cimport exp, log, sqrt


cdef double _shift(const double[::1] g, double beta) noexcept nogil:
    cdef Py_ssize_t j, n = g.shape[0]
    cdef double m = beta * g[0], v
    for j in range(1, n):
        v = beta * g[j]
        if v > m:
            m = v
    return m


def tilt_stats(g, double beta):
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t j, n = gv.shape[0]
    cdef double[::1] w = np.empty(n)
    cdef double shift, wj, d, dw, s0 = 0.0, s1 = 0.0, q0 = 0.0
    cdef double sv = 0.0, sv2 = 0.0, sw = 0.0
    cdef double mean, wbar, se_log
    with nogil:
        shift = _shift(gv, beta)
        for j in range(n):
            wj = exp(beta * gv[j] - shift)
            w[j] = wj
            s0 += wj
            s1 += wj * gv[j]
            q0 += wj * wj
        mean = s1 / s0
        wbar = s0 / n
        for j in range(n):
            wj = w[j]
            d = gv[j] - mean
            d = wj * d * d
            sv += d
            sv2 += wj * d
            dw = wj - wbar
            sw += dw * dw
    if n > 1:
        se_log = sqrt(sw / (n * (n - 1.0))) / wbar
    else:
        se_log = 0.0
    return (shift + log(wbar), mean, sv / s0, s0 * s0 / q0, se_log, sqrt(sv2) / s0)


def tilt_means(points, g, double beta):
    cdef const double[:, ::1] pv = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t j, i, n = pv.shape[0], k = pv.shape[1]
    cdef double[::1] w = np.empty(n)
    means = np.zeros(k)
    se = np.zeros(k)
    cdef double[::1] mv = means
    cdef double[::1] sv = se
    cdef double shift, wj, d, s0 = 0.0
    with nogil:
        shift = _shift(gv, beta)
        for j in range(n):
            wj = exp(beta * gv[j] - shift)
            w[j] = wj
            s0 += wj
            for i in range(k):
                mv[i] += wj * pv[j, i]
        for i in range(k):
            mv[i] /= s0
        for j in range(n):
            wj = w[j] * w[j]
            for i in range(k):
                d = pv[j, i] - mv[i]
                sv[i] += wj * d * d
        for i in range(k):
            sv[i] = sqrt(sv[i]) / s0
    return means, se
