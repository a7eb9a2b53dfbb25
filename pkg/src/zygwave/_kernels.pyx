# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the shift-sup and time-convolution loops.

Semantics match ``zygwave._kernels_py`` exactly; see the docstrings there.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, NAN

cnp.import_array()

ctypedef fused scalar:
    double
    double complex


cdef inline double _abs(scalar v) nogil:
    if scalar is double:
        return fabs(v)
    else:
        return abs(v)


def second_difference_sup(const scalar[::1] f, shifts, bint periodic=True):
    cdef Py_ssize_t n = f.shape[0]
    cdef long[::1] ms = np.ascontiguousarray(shifts, dtype=np.int64)
    cdef double[::1] out = np.empty(ms.shape[0])
    cdef Py_ssize_t i, z, m, zp, zm
    cdef double best, v
    for i in range(ms.shape[0]):
        m = ms[i]
        best = 0.0
        if periodic:
            m = m % n
            for z in range(n):
                zp = z + m
                if zp >= n:
                    zp -= n
                zm = z - m
                if zm < 0:
                    zm += n
                v = _abs(f[zp] + f[zm] - 2.0 * f[z])
                if v > best:
                    best = v
        else:
            if 2 * m >= n:
                out[i] = NAN
                continue
            for z in range(m, n - m):
                v = _abs(f[z + m] + f[z - m] - 2.0 * f[z])
                if v > best:
                    best = v
        out[i] = best
    return np.asarray(out)


def first_difference_sup(const scalar[::1] f, shifts, bint periodic=True):
    cdef Py_ssize_t n = f.shape[0]
    cdef long[::1] ms = np.ascontiguousarray(shifts, dtype=np.int64)
    cdef double[::1] out = np.empty(ms.shape[0])
    cdef Py_ssize_t i, z, m, zp
    cdef double best, v
    for i in range(ms.shape[0]):
        m = ms[i]
        best = 0.0
        if periodic:
            m = m % n
            for z in range(n):
                zp = z + m
                if zp >= n:
                    zp -= n
                v = _abs(f[zp] - f[z])
                if v > best:
                    best = v
        else:
            if m >= n:
                out[i] = NAN
                continue
            for z in range(n - m):
                v = _abs(f[z + m] - f[z])
                if v > best:
                    best = v
        out[i] = best
    return np.asarray(out)


def second_difference_sup_2d(const scalar[:, ::1] f, tshifts, xshifts):
    cdef Py_ssize_t nt = f.shape[0], nx = f.shape[1]
    cdef long[::1] ts = np.ascontiguousarray(tshifts, dtype=np.int64)
    cdef long[::1] ys = np.ascontiguousarray(xshifts, dtype=np.int64)
    cdef double[:, ::1] out = np.full((ts.shape[0], ys.shape[0]), np.nan)
    cdef Py_ssize_t a, b, t, x, tau, y, xp, xm
    cdef double best, v
    for a in range(ts.shape[0]):
        tau = ts[a]
        if 2 * tau >= nt:
            continue
        for b in range(ys.shape[0]):
            y = ys[b] % nx
            best = 0.0
            for t in range(tau, nt - tau):
                for x in range(nx):
                    xp = x + y
                    if xp >= nx:
                        xp -= nx
                    xm = x - y
                    if xm < 0:
                        xm += nx
                    v = _abs(f[t + tau, xp] + f[t - tau, xm] - 2.0 * f[t, x])
                    if v > best:
                        best = v
            out[a, b] = best
    return np.asarray(out)


cdef inline Py_ssize_t _reflect(Py_ssize_t i, Py_ssize_t n) nogil:
    cdef Py_ssize_t period
    if n == 1:
        return 0
    period = 2 * n - 2
    i = i % period
    if i < 0:
        i += period
    if i >= n:
        i = period - i
    return i


def convolve_reflect(values, const double[::1] weights, rows=None):
    cdef const double[:, ::1] v2
    arr = np.ascontiguousarray(values, dtype=np.float64)
    shape = arr.shape
    v2 = arr.reshape(shape[0], -1)
    cdef Py_ssize_t nt = v2.shape[0], ncol = v2.shape[1]
    cdef Py_ssize_t M = (weights.shape[0] - 1) // 2
    if rows is None:
        rows = np.arange(nt)
    cdef long[::1] rs = np.ascontiguousarray(rows, dtype=np.int64)
    cdef double[:, ::1] out = np.zeros((rs.shape[0], ncol))
    cdef Py_ssize_t r, m, c, src
    cdef double w
    for r in range(rs.shape[0]):
        for m in range(weights.shape[0]):
            w = weights[m]
            if w == 0.0:
                continue
            src = _reflect(rs[r] - (m - M), nt)
            for c in range(ncol):
                out[r, c] += w * v2[src, c]
    return np.asarray(out).reshape((rs.shape[0],) + shape[1:])
