"""Dense linear algebra kernels: symmetric eigendecomposition, random
rotations and least squares."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from distlayer import _kernels
from distlayer.errors import InvalidDimension, InvalidMatrix, NumericalFailure, ShapeError
from distlayer.rng import Stream

SYMMETRY_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# entries within this fraction of the largest magnitude count as tied
_SIGN_TIE = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending and unit eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return a


def _canonical_signs(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    for j in range(v.shape[1]):
        col = mags[:, j]
        lead = int(np.argmax(col >= col.max() * (1.0 - _SIGN_TIE)))
        if v[lead, j] < 0.0:
            v[:, j] = -v[:, j]
    return v


def eigh_symmetric(m) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back in descending order (stable for ties). Each
    eigenvector is flipped so that its first entry of largest magnitude is
    non-negative, which makes the result unique for distinct eigenvalues.

    Raises
    ------
    InvalidMatrix
        If ``m`` is not square or not symmetric within ``SYMMETRY_TOL``.
    NumericalFailure
        If the off-diagonal mass has not vanished after ``JACOBI_MAX_SWEEPS``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.T))
    if asym > SYMMETRY_TOL:
        raise InvalidMatrix(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    a = 0.5 * (a + a.T)
    values, vectors, _, converged = _kernels.jacobi_eigh(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not converged:
        raise NumericalFailure(f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], _canonical_signs(vectors[:, order]))


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Random matrix in SO(dim), deterministic per seed.

    QR of a standard-normal matrix with the diagonal of R made positive gives
    a Haar-distributed orthogonal matrix; the first column is then negated if
    needed so the determinant is +1.
    """
    if dim < 1:
        raise InvalidDimension(f"dim must be >= 1, got {dim}")
    if dim == 1:
        return np.ones((1, 1))
    z = Stream(seed).normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    q = q * d
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _solve_lstsq(a: np.ndarray, y: np.ndarray, rank_tol: float = 1e-12):
    gram = a.T @ a
    rhs = a.T @ y
    eig = eigh_symmetric(gram)
    top = eig.eigenvalues[0]
    keep = eig.eigenvalues > rank_tol * top if top > 0 else np.zeros_like(eig.eigenvalues, bool)
    rank = int(np.count_nonzero(keep))
    if rank == a.shape[1]:
        x = np.linalg.solve(gram, rhs)
    else:
        # minimum-norm solution: pseudo-inverse of the Gram on its range
        vk = eig.eigenvectors[:, keep]
        x = vk @ ((vk.T @ rhs) / eig.eigenvalues[keep])
    return x, rank


def least_squares(a, y) -> np.ndarray:
    """Minimizer of ``||a x - y||``; the minimum-norm one when ``a`` is
    rank-deficient."""
    return least_squares_rank(a, y)[0]


def least_squares_rank(a, y):
    """Like :func:`least_squares` but also returns the numerical rank of ``a``."""
    a = as_matrix(a, "a")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != a.shape[0]:
        raise ShapeError(f"a is {a.shape} but y has shape {y.shape}")
    return _solve_lstsq(a, y)
