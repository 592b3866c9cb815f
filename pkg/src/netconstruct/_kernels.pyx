# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shallow-network forward pass over a batch of points.

Pre-activations for one point are formed into a scratch row, then the
activation is applied family by family so the dispatch sits outside the
hot loop and no n_pts x n intermediate is allocated.
"""

import numpy as np
from libc.math cimport exp, sin, cos, sinh, cosh

cdef enum:
    EXP = 0
    SIN = 1
    COS = 2
    SINH = 3
    COSH = 4
    POLY = 5
    RELU = 6
    LEAKY = 7


cdef double _sum_real(int code, const double[::1] coeffs, double slope,
                      const double[::1] a, const double[::1] pre) noexcept nogil:
    cdef Py_ssize_t k, j, n = pre.shape[0], m = coeffs.shape[0]
    cdef double acc = 0.0, t, s
    if code == EXP:
        for k in range(n):
            acc += a[k] * exp(pre[k])
    elif code == SIN:
        for k in range(n):
            acc += a[k] * sin(pre[k])
    elif code == COS:
        for k in range(n):
            acc += a[k] * cos(pre[k])
    elif code == SINH:
        for k in range(n):
            acc += a[k] * sinh(pre[k])
    elif code == COSH:
        for k in range(n):
            acc += a[k] * cosh(pre[k])
    elif code == POLY:
        for k in range(n):
            t = pre[k]
            s = coeffs[m - 1]
            for j in range(m - 2, -1, -1):
                s = s * t + coeffs[j]
            acc += a[k] * s
    elif code == RELU:
        for k in range(n):
            if pre[k] > 0:
                acc += a[k] * pre[k]
    else:
        for k in range(n):
            t = pre[k]
            acc += a[k] * (t if t >= 0 else slope * t)
    return acc


cdef inline double complex _act_complex(int code, const double complex[::1] coeffs, double complex t) noexcept nogil:
    cdef double x = t.real, y = t.imag, e
    cdef Py_ssize_t j
    cdef double complex acc
    if code == EXP:
        e = exp(x)
        acc.real = e * cos(y)
        acc.imag = e * sin(y)
    elif code == SIN:
        acc.real = sin(x) * cosh(y)
        acc.imag = cos(x) * sinh(y)
    elif code == COS:
        acc.real = cos(x) * cosh(y)
        acc.imag = -sin(x) * sinh(y)
    elif code == SINH:
        acc.real = sinh(x) * cos(y)
        acc.imag = cosh(x) * sin(y)
    elif code == COSH:
        acc.real = cosh(x) * cos(y)
        acc.imag = sinh(x) * sin(y)
    else:
        acc = coeffs[coeffs.shape[0] - 1]
        for j in range(coeffs.shape[0] - 2, -1, -1):
            acc = acc * t + coeffs[j]
    return acc


def shallow_forward_real(int code, const double[::1] coeffs, double slope,
                         const double[::1] a, const double[:, ::1] wc, const double[::1] b,
                         const double[:, ::1] pts):
    cdef Py_ssize_t n_pts = pts.shape[0], n = wc.shape[0], d = wc.shape[1]
    cdef Py_ssize_t p, k, i
    cdef double t
    out = np.empty(n_pts, dtype=np.float64)
    scratch = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out, pre = scratch
    with nogil:
        for p in range(n_pts):
            for k in range(n):
                t = b[k]
                for i in range(d):
                    t += wc[k, i] * pts[p, i]
                pre[k] = t
            out_v[p] = _sum_real(code, coeffs, slope, a, pre)
    return out


def shallow_forward_complex(int code, const double complex[::1] coeffs,
                            const double complex[::1] a, const double complex[:, ::1] wc,
                            const double complex[::1] b, const double complex[:, ::1] pts):
    cdef Py_ssize_t n_pts = pts.shape[0], n = wc.shape[0], d = wc.shape[1]
    cdef Py_ssize_t p, k, i
    cdef double complex t, acc
    out = np.empty(n_pts, dtype=np.complex128)
    cdef double complex[::1] out_v = out
    with nogil:
        for p in range(n_pts):
            acc = 0.0
            for k in range(n):
                t = b[k]
                for i in range(d):
                    t = t + wc[k, i] * pts[p, i]
                acc = acc + a[k] * _act_complex(code, coeffs, t)
            out_v[p] = acc
    return out
