"""Pure numpy implementations of the hot kernels.

Mirrors ``_core.pyx`` operation for operation; used when the compiled
extension is unavailable or ``DISTLAYER_PURE_PYTHON`` is set.
"""

import math

import numpy as np


def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps, converged)`` with eigenvalues
    in diagonal order (unsorted) and eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64, order="C")
    n = a.shape[0]
    v = np.eye(n)
    scale = 0.0
    for value in a.ravel().tolist():
        scale += value * value
    scale = math.sqrt(scale)
    sweeps = 0
    converged = False
    while True:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if math.sqrt(off) <= tol * scale:
            converged = True
            break
        if sweeps >= max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diagonal(a).copy(), v, sweeps, converged


def assign_nearest(x, centers):
    """Nearest center (lowest index on ties) and squared distance per row."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    n = x.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    best = np.full(n, np.inf)
    for j in range(centers.shape[0]):
        diff = x - centers[j]
        # accumulate feature by feature, the same order as the compiled loop
        d2 = diff[:, 0] * diff[:, 0]
        for f in range(1, x.shape[1]):
            d2 += diff[:, f] * diff[:, f]
        better = d2 < best
        labels[better] = j
        best[better] = d2[better]
    return labels, best
