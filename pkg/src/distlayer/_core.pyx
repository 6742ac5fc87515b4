# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same contracts as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


def jacobi_eigh(a, double tol, int max_sweeps):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.array(a, dtype=np.float64, order="C")
    cdef Py_ssize_t n = arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] varr = np.eye(n)
    cdef double[:, ::1] m = arr
    cdef double[:, ::1] v = varr
    cdef Py_ssize_t p, q, k
    cdef double off, scale = 0.0, apq, theta, t, c, s, x, y
    cdef int sweeps = 0
    cdef bint converged = False
    for p in range(n):
        for q in range(n):
            scale += m[p, q] * m[p, q]
    scale = sqrt(scale)
    while True:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * m[p, q] * m[p, q]
        if sqrt(off) <= tol * scale:
            converged = True
            break
        if sweeps >= max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = m[k, p]
                    y = m[k, q]
                    m[k, p] = c * x - s * y
                    m[k, q] = s * x + c * y
                for k in range(n):
                    x = m[p, k]
                    y = m[q, k]
                    m[p, k] = c * x - s * y
                    m[q, k] = s * x + c * y
                m[p, q] = 0.0
                m[q, p] = 0.0
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * y
                    v[k, q] = s * x + c * y
    return np.diagonal(arr).copy(), varr, sweeps, converged


def assign_nearest(x, centers):
    cdef const double[:, ::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] cs = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], k = cs.shape[0], d = xs.shape[1]
    labels_arr = np.zeros(n, dtype=np.int64)
    best_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, j, f
    cdef double acc, diff, bd
    cdef cnp.int64_t bl
    for i in range(n):
        bd = INFINITY
        bl = 0
        for j in range(k):
            acc = 0.0
            for f in range(d):
                diff = xs[i, f] - cs[j, f]
                acc += diff * diff
            if acc < bd:
                bd = acc
                bl = j
        labels[i] = bl
        best[i] = bd
    return labels_arr, best_arr
