"""Gaussians, mixtures, Mahalanobis distances and whitening bases."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from distlayer.errors import InvalidMatrix, InvalidRotation, NumericalFailure, ShapeError
from distlayer.linalg import SYMMETRY_TOL, EigenDecomposition, eigh_symmetric, random_rotation
from distlayer.rng import Stream

# eigenvalue floor of regularized covariances, relative to the mean variance
VAR_EPS_REL = 1e-9
# used when the covariance has zero trace
VAR_EPS_FLOOR = 1e-9
ROTATION_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def variance_epsilon(cov: np.ndarray) -> float:
    mean_var = float(np.trace(cov)) / cov.shape[0]
    return VAR_EPS_REL * mean_var if mean_var > 0 else VAR_EPS_FLOOR


@dataclass(frozen=True, eq=False)
class Gaussian:
    """N(mean, covariance).

    ``degenerate`` marks components whose covariance is a placeholder
    (e.g. a cluster with one member).
    """

    mean: np.ndarray
    covariance: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        mean = _frozen(self.mean)
        cov = _frozen(self.covariance)
        if mean.ndim != 1 or mean.size < 1:
            raise ShapeError(f"mean must be a non-empty vector, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ShapeError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidMatrix("Gaussian parameters must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise InvalidMatrix("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def epsilon(self) -> float:
        return variance_epsilon(self.covariance)

    @cached_property
    def _raw_eigen(self) -> EigenDecomposition:
        raw = eigh_symmetric(self.covariance)
        scale = max(abs(raw.eigenvalues[0]), 1.0)
        if raw.eigenvalues[-1] < -1e-10 * scale:
            raise InvalidMatrix(f"covariance is not PSD (smallest eigenvalue {raw.eigenvalues[-1]:.3g})")
        return raw

    @cached_property
    def eigen(self) -> EigenDecomposition:
        """Eigendecomposition of the regularized covariance.

        Regularization floors every eigenvalue at ``epsilon``. The floor is
        idempotent, so a covariance rebuilt from these eigenpairs regularizes
        to itself.
        """
        raw = self._raw_eigen
        values = np.maximum(raw.eigenvalues, self.epsilon)
        return EigenDecomposition(_frozen(values), _frozen(raw.eigenvectors))

    @cached_property
    def regularized_covariance(self) -> np.ndarray:
        """The covariance itself when no eigenvalue needed flooring, otherwise
        its reconstruction from the floored eigenpairs."""
        if self._raw_eigen.eigenvalues[-1] >= self.epsilon:
            return self.covariance
        vals, vecs = self.eigen
        rebuilt = (vecs * vals) @ vecs.T
        return _frozen(0.5 * (rebuilt + rebuilt.T))


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = _frozen(self.weights)
        comps = tuple(self.components)
        if w.ndim != 1 or w.size != len(comps) or w.size == 0:
            raise ShapeError("need one weight per component and at least one component")
        if np.any(w < 0):
            raise ValueError("mixture weights must be non-negative")
        if abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {np.sum(w)!r}, expected 1")
        if len({c.dim for c in comps}) != 1:
            raise ShapeError("all mixture components must share one dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Row-per-sample matrix with the generating (or class) label of each row."""

    x: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        x = _frozen(self.x)
        if x.ndim != 2:
            raise ShapeError(f"dataset must be 2-D, got shape {x.shape}")
        labels = np.zeros(x.shape[0], dtype=np.int64) if self.labels is None else np.array(self.labels, dtype=np.int64)
        if labels.shape != (x.shape[0],):
            raise ShapeError("need exactly one label per sample")
        labels.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def _centered(g: Gaussian, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (g.dim,) or x.ndim > 2:
        raise ShapeError(f"point shape {x.shape} does not match Gaussian dimension {g.dim}")
    return x - g.mean


def mahalanobis(g: Gaussian, x):
    """sqrt((x - mu)^T Sigma^-1 (x - mu)) using a direct solve against the
    regularized covariance. ``x`` may be one point or a batch of rows."""
    diff = _centered(g, x)
    try:
        sol = np.linalg.solve(g.regularized_covariance, diff.T)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("covariance is singular") from exc
    sq = np.einsum("ni,in->n", diff, sol) if diff.ndim == 2 else float(diff @ sol)
    return np.sqrt(np.maximum(sq, 0.0))


def whitened_coordinates(g: Gaussian, x) -> np.ndarray:
    """Standard deviations of ``x`` from the mean along each principal axis,
    signed, largest-variance axis first."""
    diff = _centered(g, x)
    vals, vecs = g.eigen
    return (diff @ vecs) / np.sqrt(vals)


def mahalanobis_pca(g: Gaussian, x):
    """Mahalanobis distance as the l2 norm of the whitened coordinates."""
    z = whitened_coordinates(g, x)
    return np.sqrt(np.sum(z * z, axis=-1))


def component_distance(g: Gaussian, i: int, x):
    """Absolute number of standard deviations along principal component ``i``."""
    if not 0 <= i < g.dim:
        raise IndexError(f"component index {i} out of range for dimension {g.dim}")
    vals, vecs = g.eigen
    return np.abs(_centered(g, x) @ vecs[:, i]) / np.sqrt(vals[i])


@dataclass(frozen=True, eq=False)
class WhiteningBasis:
    """Rows map centered points to whitened coordinates: z = rows @ (x - origin)."""

    rows: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", _frozen(self.rows))
        object.__setattr__(self, "origin", _frozen(self.origin))

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.origin) @ self.rows.T

    def distance(self, x):
        z = self.apply(x)
        return np.sqrt(np.sum(z * z, axis=-1))


def whitening_basis(g: Gaussian) -> WhiteningBasis:
    vals, vecs = g.eigen
    return WhiteningBasis(vecs.T / np.sqrt(vals)[:, None], g.mean)


def rotate_whitening(b: WhiteningBasis, r) -> WhiteningBasis:
    """Another valid whitening: rotate the whitened space by orthogonal ``r``."""
    r = np.asarray(r, dtype=np.float64)
    d = b.rows.shape[0]
    if r.shape != (d, d):
        raise ShapeError(f"rotation must be {d}x{d}, got {r.shape}")
    err = np.max(np.abs(r.T @ r - np.eye(d)))
    if err > ROTATION_TOL:
        raise InvalidRotation(f"matrix is not orthogonal (max |R^T R - I| = {err:.3g})")
    return WhiteningBasis(r @ b.rows, b.origin)


def sample_gmm(m: GaussianMixture, n: int, seed: int) -> Dataset:
    """Draw ``n`` labelled samples.

    The stream supplies ``n`` uniforms for component choice followed by
    ``n * d`` standard normals; sample = mean + L z with L the lower Cholesky
    factor of the regularized covariance.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    stream = Stream(seed)
    cdf = np.cumsum(m.weights)
    u = stream.uniform(n) * cdf[-1]
    labels = np.minimum(np.searchsorted(cdf, u, side="right"), len(m) - 1)
    z = stream.normal((n, m.dim))
    x = np.empty((n, m.dim))
    for c, comp in enumerate(m.components):
        try:
            chol = np.linalg.cholesky(comp.regularized_covariance)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"component {c} covariance has no Cholesky factor") from exc
        rows = labels == c
        x[rows] = comp.mean + z[rows] @ chol.T
    return Dataset(x, labels)


def random_covariance(dim: int, stream: Stream, min_var: float = 0.25, max_var: float = 1.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues uniform in [min_var, max_var]."""
    seed = int(stream.uniform(1)[0] * 2**31)
    rot = random_rotation(dim, seed)
    lam = min_var + (max_var - min_var) * stream.uniform(dim)
    cov = (rot * lam) @ rot.T
    return 0.5 * (cov + cov.T)
