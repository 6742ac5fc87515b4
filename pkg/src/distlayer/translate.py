"""Translation between Gaussian mixtures and Abs distance layers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from distlayer.errors import InvalidSubset, ShapeError, UnderdeterminedGroup, UnsupportedActivation
from distlayer.gaussian import Gaussian, GaussianMixture
from distlayer.layer import Activation, DistanceLayer, layer_from_gaussian
from distlayer.linalg import eigh_symmetric, least_squares_rank

ORTHOGONAL_TOL = 1e-6
RANK_TOL = 1e-12


class Prototype(NamedTuple):
    mean: np.ndarray
    underdetermined: bool


@dataclass(frozen=True)
class GroupRecovery:
    rows: tuple
    # "orthogonal" when sum(lambda v v^T) was used, "precision" for (W^T W)^-1
    path: str
    partial: bool


@dataclass(frozen=True)
class TranslationReport:
    mixture: GaussianMixture
    groups: tuple
    mean_errors: tuple | None = None
    covariance_errors: tuple | None = None


def gmm_to_network(m: GaussianMixture, subsets=None) -> DistanceLayer:
    """Stack the Abs rows of every component into one layer.

    ``subsets[c]`` lists the principal components kept for component ``c``;
    all of them by default.
    """
    if subsets is None:
        subsets = [list(range(m.dim))] * len(m)
    if len(subsets) != len(m):
        raise InvalidSubset(f"got {len(subsets)} subsets for {len(m)} components")
    parts = [layer_from_gaussian(g, s, component=c) for c, (g, s) in enumerate(zip(m.components, subsets))]
    return DistanceLayer(
        np.vstack([p.weights for p in parts]),
        np.concatenate([p.bias for p in parts]),
        Activation.ABS,
        sum((p.provenance for p in parts), ()),
    )


def natural_grouping(layer: DistanceLayer):
    """Row groups by source component, read from provenance."""
    if layer.provenance is None:
        raise ValueError("layer has no provenance; pass an explicit grouping")
    groups = {}
    for row, (c, _) in enumerate(layer.provenance):
        groups.setdefault(c, []).append(row)
    return [groups[c] for c in sorted(groups)]


def _group_arrays(layer, group):
    group = [int(r) for r in group]
    if not group:
        raise InvalidSubset("row group is empty")
    if any(not 0 <= r < layer.rows for r in group):
        raise ShapeError(f"row group {group} out of range for {layer.rows} rows")
    return layer.weights[group], layer.bias[group]


def recover_prototype(layer: DistanceLayer, group) -> Prototype:
    """Estimated mean of the Gaussian a group of rows models: the
    minimum-norm point closest to every row's decision boundary."""
    w, b = _group_arrays(layer, group)
    mu, rank = least_squares_rank(w, -b)
    return Prototype(mu, rank < layer.dim)


def _recover_group(w, b, allow_partial, group):
    d = w.shape[1]
    norms = np.linalg.norm(w, axis=1)
    lam = 1.0 / norms**2
    dirs = w / norms[:, None]
    mu, rank = least_squares_rank(w, -b)
    partial = rank < d
    if partial and not allow_partial:
        raise UnderdeterminedGroup(f"row group {list(group)} has rank {rank} < {d}", group=list(group))
    gram = dirs @ dirs.T
    offdiag = np.max(np.abs(gram - np.eye(len(gram)))) if len(gram) > 1 else 0.0
    orthogonal = len(gram) <= d and offdiag < ORTHOGONAL_TOL
    if partial:
        fill = float(lam.max())
        prec = eigh_symmetric(w.T @ w)
        null = prec.eigenvectors[:, prec.eigenvalues <= RANK_TOL * prec.eigenvalues[0]]
        null_proj = null @ null.T
    if orthogonal:
        cov = (dirs.T * lam) @ dirs
        if partial:
            cov = cov + fill * null_proj
    else:
        precision = w.T @ w
        if partial:
            precision = precision + null_proj / fill
        cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    return Gaussian(mu, cov), GroupRecovery(tuple(int(r) for r in group), "orthogonal" if orthogonal else "precision", partial)


def translate_network(layer: DistanceLayer, grouping=None, truth: GaussianMixture | None = None,
                      allow_partial: bool = False) -> TranslationReport:
    """Recover a mixture from an Abs layer, one component per row group.

    Per group the mean is the least-squares solution of ``W mu = -b``. The
    covariance is ``sum(lambda_i v_i v_i^T)`` with ``lambda_i = 1/|w_i|^2``
    when the rows are mutually orthogonal, else the inverse of the implied
    precision ``W^T W``. Groups of rank below the input dimension raise
    :class:`UnderdeterminedGroup` unless ``allow_partial``, in which case the
    missing directions get the group's largest recovered variance. Weights
    are uniform since a layer carries no occupancy information.

    With ``truth`` the report includes per-component mean errors (max abs)
    and covariance errors (relative Frobenius), matched by position.
    """
    if layer.activation is not Activation.ABS:
        raise UnsupportedActivation(f"only Abs layers translate to Gaussians, got {layer.activation.value}")
    if grouping is None:
        grouping = natural_grouping(layer)
    seen = set()
    for group in grouping:
        overlap = seen.intersection(group)
        if overlap:
            raise InvalidSubset(f"row groups overlap at rows {sorted(overlap)}")
        seen.update(group)
    comps, info = [], []
    for group in grouping:
        w, b = _group_arrays(layer, group)
        g, rec = _recover_group(w, b, allow_partial, group)
        comps.append(g)
        info.append(rec)
    k = len(comps)
    mixture = GaussianMixture(np.full(k, 1.0 / k), comps)
    mean_err = cov_err = None
    if truth is not None:
        if len(truth) != k or truth.dim != layer.dim:
            raise ShapeError("ground-truth mixture does not match the recovered one")
        mean_err = tuple(float(np.max(np.abs(r.mean - t.mean))) for r, t in zip(comps, truth.components))
        cov_err = tuple(
            float(np.linalg.norm(r.covariance - t.covariance) / np.linalg.norm(t.covariance))
            for r, t in zip(comps, truth.components)
        )
    return TranslationReport(mixture, tuple(info), mean_err, cov_err)


def network_to_gmm(layer: DistanceLayer, grouping=None, allow_partial: bool = False) -> GaussianMixture:
    return translate_network(layer, grouping, allow_partial=allow_partial).mixture
