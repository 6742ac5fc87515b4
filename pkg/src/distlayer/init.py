"""Data-driven first-layer initialization: k-means, per-cluster Gaussians,
principal-component rows; plus a random-normal baseline."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from distlayer import _kernels
from distlayer.errors import InsufficientComponents, InvalidK, ShapeError
from distlayer.gaussian import VAR_EPS_FLOOR, Dataset, Gaussian, GaussianMixture
from distlayer.layer import Activation, DistanceLayer, node_from_component
from distlayer.rng import Stream


class Strategy(str, enum.Enum):
    CLUSTER_PCA = "cluster-pca"
    RANDOM_NORMAL = "random-normal"


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centers: np.ndarray
    assignments: np.ndarray
    inertia: float
    # inertia after every assignment step, first entry from the seeding
    history: tuple = ()
    iterations: int = 0


def _points(data) -> np.ndarray:
    x = data.x if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"data must be a non-empty 2-D array, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data has non-finite entries")
    return x


def _plus_plus(x, k, stream):
    n = x.shape[0]
    chosen = [int(stream.uniform(1)[0] * n)]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        if d2.sum() > 0:
            idx = stream.choice(d2)
        else:
            # every point coincides with a center; take the next unused index
            idx = next(i for i in range(n) if i not in chosen)
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return x[chosen].copy()


def kmeans(data, k: int, seed: int, max_iters: int = 100) -> ClusterModel:
    """Lloyd's algorithm from k-means++ seeds.

    Stops at an assignment fixpoint or after ``max_iters`` center updates.
    A center left without members moves to the point currently farthest
    from its own center (lowest index on ties).
    """
    x = _points(data)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    centers = _plus_plus(x, k, Stream(seed))
    labels, d2 = _kernels.assign_nearest(x, centers)
    history = [float(d2.sum())]
    it = 0
    for it in range(1, max_iters + 1):
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(d2))
            centers[j] = x[far]
            d2[far] = 0.0
        new_labels, d2 = _kernels.assign_nearest(x, centers)
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    labels.setflags(write=False)
    centers.setflags(write=False)
    return ClusterModel(centers, labels, history[-1], tuple(history), it)


def estimate_cluster_gaussians(data, c: ClusterModel) -> GaussianMixture:
    """Sample mean and unbiased sample covariance of every cluster, weighted
    by cluster occupancy. Singleton or zero-spread clusters get a tiny
    isotropic covariance and are marked degenerate."""
    x = _points(data)
    k = c.centers.shape[0]
    counts = np.bincount(c.assignments, minlength=k)
    if np.any(counts == 0):
        raise ValueError(f"clusters {np.flatnonzero(counts == 0).tolist()} are empty")
    comps = []
    for j in range(k):
        pts = x[c.assignments == j]
        mean = pts.mean(axis=0)
        if len(pts) > 1:
            diff = pts - mean
            cov = diff.T @ diff / (len(pts) - 1)
        else:
            cov = np.zeros((x.shape[1], x.shape[1]))
        degenerate = float(np.trace(cov)) <= 0.0
        if degenerate:
            cov = VAR_EPS_FLOOR * np.eye(x.shape[1])
        comps.append(Gaussian(mean, 0.5 * (cov + cov.T), degenerate=degenerate))
    return GaussianMixture(counts / counts.sum(), comps)


def cluster_pca_rows(mixture: GaussianMixture, rows: int):
    """(component, eigen_index) pairs taken round-robin over components,
    each component contributing its next-largest-variance direction."""
    d = mixture.dim
    if rows > len(mixture) * d:
        raise InsufficientComponents(f"{rows} rows requested but only {len(mixture) * d} components exist")
    picks = [(c, i) for i in range(d) for c in range(len(mixture))]
    return picks[:rows]


def initialize_layer(data, k: int, rows: int, strategy: Strategy, seed: int,
                     max_iters: int = 100) -> DistanceLayer:
    x = _points(data)
    strategy = Strategy(strategy)
    if rows < 1:
        raise ValueError(f"rows must be >= 1, got {rows}")
    d = x.shape[1]
    if strategy is Strategy.RANDOM_NORMAL:
        w = Stream(seed).normal((rows, d)) * np.sqrt(1.0 / d)
        return DistanceLayer(w, np.zeros(rows), Activation.ABS)
    if rows > k * d:
        raise InsufficientComponents(f"{rows} rows requested but k*d = {k * d}")
    clusters = kmeans(x, k, seed, max_iters)
    mixture = estimate_cluster_gaussians(x, clusters)
    picks = cluster_pca_rows(mixture, rows)
    nodes = [node_from_component(mixture.components[c], i) for c, i in picks]
    return DistanceLayer(np.array([w for w, _ in nodes]), np.array([b for _, b in nodes]),
                         Activation.ABS, tuple(picks))
