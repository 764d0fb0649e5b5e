# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: cone classification and mass accumulation.

Same contracts as _fallback.py. Mass accumulation uses Kahan compensated
summation per cone so results are independent of point order to ~1 ulp.
All loops run without the GIL, so multistart threads overlap.
"""

from libc.math cimport exp, sqrt, INFINITY
from libc.stdlib cimport free, malloc

import numpy as np


def hard_labels(pts, dirs, shift):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    shift = np.ascontiguousarray(shift, dtype=np.float64)
    out = np.empty(pts.shape[0], dtype=np.int64)
    _hard_labels(pts, dirs, shift, out)
    return out


cdef void _hard_labels(const double[:, ::1] pts, const double[:, ::1] dirs,
                       const double[::1] shift, long long[::1] out):
    cdef Py_ssize_t n = pts.shape[0], dim = pts.shape[1], m = dirs.shape[0]
    cdef Py_ssize_t i, j, k, best
    cdef double s, smax
    cdef double* y
    with nogil:
        y = <double*> malloc(dim * sizeof(double))
        for i in range(n):
            for k in range(dim):
                y[k] = pts[i, k] - shift[k]
            best = 0
            smax = -INFINITY
            for j in range(m):
                s = 0.0
                for k in range(dim):
                    s += y[k] * dirs[j, k]
                if s > smax:
                    smax = s
                    best = j
            out[i] = best
        free(y)


def hard_masses(pts, wts, dirs, shift):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    shift = np.ascontiguousarray(shift, dtype=np.float64)
    out = np.zeros(dirs.shape[0], dtype=np.float64)
    _hard_masses(pts, wts, dirs, shift, out)
    return out


cdef void _hard_masses(const double[:, ::1] pts, const double[::1] wts,
                       const double[:, ::1] dirs, const double[::1] shift,
                       double[::1] acc):
    cdef Py_ssize_t n = pts.shape[0], dim = pts.shape[1], m = dirs.shape[0]
    cdef Py_ssize_t i, j, k, best
    cdef double s, smax, inc, t
    cdef double* y
    cdef double* comp
    with nogil:
        y = <double*> malloc(dim * sizeof(double))
        comp = <double*> malloc(m * sizeof(double))
        for j in range(m):
            comp[j] = 0.0
        for i in range(n):
            for k in range(dim):
                y[k] = pts[i, k] - shift[k]
            best = 0
            smax = -INFINITY
            for j in range(m):
                s = 0.0
                for k in range(dim):
                    s += y[k] * dirs[j, k]
                if s > smax:
                    smax = s
                    best = j
            # Kahan step on the winning cone
            inc = wts[i] - comp[best]
            t = acc[best] + inc
            comp[best] = (t - acc[best]) - inc
            acc[best] = t
        free(y)
        free(comp)


def soft_masses(pts, wts, dirs, shift, double beta):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    shift = np.ascontiguousarray(shift, dtype=np.float64)
    out = np.zeros(dirs.shape[0], dtype=np.float64)
    _soft_masses(pts, wts, dirs, shift, beta, out)
    return out


cdef void _soft_masses(const double[:, ::1] pts, const double[::1] wts,
                       const double[:, ::1] dirs, const double[::1] shift,
                       double beta, double[::1] acc):
    cdef Py_ssize_t n = pts.shape[0], dim = pts.shape[1], m = dirs.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s, smax, r, z, w, inc, t
    cdef double* y
    cdef double* sc
    cdef double* comp
    with nogil:
        y = <double*> malloc(dim * sizeof(double))
        sc = <double*> malloc(m * sizeof(double))
        comp = <double*> malloc(m * sizeof(double))
        for j in range(m):
            comp[j] = 0.0
        for i in range(n):
            r = 0.0
            for k in range(dim):
                y[k] = pts[i, k] - shift[k]
                r += y[k] * y[k]
            r = sqrt(r)
            if r > 0.0:
                smax = -INFINITY
                for j in range(m):
                    s = 0.0
                    for k in range(dim):
                        s += y[k] * dirs[j, k]
                    s = beta * s / r
                    sc[j] = s
                    if s > smax:
                        smax = s
                z = 0.0
                for j in range(m):
                    sc[j] = exp(sc[j] - smax)
                    z += sc[j]
            else:
                # point at the cone apex: uniform membership
                for j in range(m):
                    sc[j] = 1.0
                z = <double> m
            w = wts[i] / z
            for j in range(m):
                inc = w * sc[j] - comp[j]
                t = acc[j] + inc
                comp[j] = (t - acc[j]) - inc
                acc[j] = t
        free(y)
        free(sc)
        free(comp)
