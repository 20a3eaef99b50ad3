# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, log1p, sqrt, pow

cnp.import_array()


cdef inline double _phi(int kind, const double[::1] a, const double[::1] b, double s,
                        const double* x, int k) noexcept nogil:
    cdef int j
    cdef double acc, d
    if kind == 0:
        return s
    if kind == 1 or kind == 2:
        acc = 0.0
        for j in range(k):
            acc += x[j] * a[j]
        return cos(acc) if kind == 1 else sin(acc)
    if kind == 3:
        for j in range(k):
            if x[j] < a[j] or x[j] > b[j]:
                return 0.0
        return 1.0
    if kind == 4:
        acc = 0.0
        for j in range(k):
            d = x[j] - a[j]
            acc += d * d
        return exp(-0.5 * acc / (s * s))
    acc = 1.0
    for j in range(k):
        acc *= pow(x[j], a[j])
    if acc > s:
        return s
    if acc < -s:
        return -s
    return acc


def mc_block(const double[:, ::1] h, const double[::1] s, const double[::1] mean,
             const double[:, ::1] chol, double radius, int kind,
             const double[::1] a, const double[::1] b, double sc):
    cdef Py_ssize_t n = h.shape[0], i
    cdef int k = <int>h.shape[1], r, c
    cdef bint slice_mode = s.shape[0] > 0
    cdef double[::1] vals = np.empty(n)
    cdef double[16] x
    cdef double hh, scale, y, total = 0.0, mu, m2 = 0.0, dv
    if k > 16:
        raise ValueError("kernel supports k <= 16")
    with nogil:
        for i in range(n):
            scale = 1.0
            if slice_mode:
                hh = 0.0
                for c in range(k):
                    hh += h[i, c] * h[i, c]
                scale = radius / sqrt(hh + s[i])
            for r in range(k):
                y = 0.0
                for c in range(r + 1):
                    y += chol[r, c] * h[i, c]
                x[r] = mean[r] + y * scale
            vals[i] = _phi(kind, a, b, sc, x, k)
            total += vals[i]
        mu = total / n
        for i in range(n):
            dv = vals[i] - mu
            m2 += dv * dv
    return mu, m2


def density_grid(const double[:, ::1] xs, const double[::1] mean, const double[:, ::1] linv,
                 double a2, double lognorm, double expo, int kind,
                 const double[::1] a, const double[::1] b, double sc):
    cdef Py_ssize_t n = xs.shape[0], i
    cdef int k = <int>xs.shape[1], r, c
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[16] d
    cdef double q, z, u, dens
    if k > 16:
        raise ValueError("kernel supports k <= 16")
    with nogil:
        for i in range(n):
            for c in range(k):
                d[c] = xs[i, c] - mean[c]
            q = 0.0
            for r in range(k):
                z = 0.0
                for c in range(r + 1):
                    z += linv[r, c] * d[c]
                q += z * z
            if a2 > 0:
                u = q / a2
                if u < 1.0:
                    dens = exp(lognorm + expo * log1p(-u))
                else:
                    dens = 0.0
            else:
                dens = exp(lognorm - 0.5 * q)
            if dens != 0.0:
                dens *= _phi(kind, a, b, sc, &xs[i, 0], k)
            out[i] = dens
    return out_arr
