"""Distance-interpreted linear layers.

A row ``w = lambda_i^(-1/2) v_i`` with bias ``b = -w . mu`` followed by Abs
returns the number of standard deviations from ``mu`` along principal
component ``i``; its decision boundary ``w . x + b = 0`` passes through the
mean.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from distlayer.errors import InvalidConfidence, InvalidDistance, InvalidSubset, ShapeError, ZeroRowError
from distlayer.gaussian import Gaussian

DEFAULT_DELTA = 3.0


class Activation(str, enum.Enum):
    ABS = "abs"
    RELU = "relu"
    IDENTITY = "identity"


class IntensityKind(str, enum.Enum):
    GAUSSIAN_EXP = "gaussian-exp"
    LAPLACE = "laplace"
    RELU_ABS_COMPOSITE = "relu-abs-composite"


@dataclass(frozen=True, eq=False)
class DistanceLayer:
    """Weights ``k x d``, bias ``k`` and one activation for all rows.

    ``provenance`` optionally tags row ``j`` with the ``(component, eigen_index)``
    it was built from.
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.ABS
    provenance: tuple | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ShapeError(f"weights must be a non-empty 2-D array, got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeError(f"bias shape {b.shape} does not match {w.shape[0]} rows")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        if np.any(np.all(w == 0.0, axis=1)):
            raise ZeroRowError("layer has an all-zero weight row")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.provenance is not None:
            prov = tuple((int(c), int(i)) for c, i in self.provenance)
            if len(prov) != w.shape[0]:
                raise ShapeError("provenance needs one entry per row")
            object.__setattr__(self, "provenance", prov)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def node_from_component(g: Gaussian, i: int):
    """Weight row and bias of the Abs node measuring deviation along
    principal component ``i`` of ``g``."""
    if not 0 <= i < g.dim:
        raise IndexError(f"component index {i} out of range for dimension {g.dim}")
    vals, vecs = g.eigen
    w = vecs[:, i] / np.sqrt(vals[i])
    return w, -float(w @ g.mean)


def _check_subset(subset, dim):
    subset = [int(i) for i in subset]
    if not subset:
        raise InvalidSubset("subset of principal components is empty")
    if len(set(subset)) != len(subset):
        raise InvalidSubset(f"subset has duplicate indices: {subset}")
    bad = [i for i in subset if not 0 <= i < dim]
    if bad:
        raise InvalidSubset(f"indices {bad} out of range for dimension {dim}")
    return subset


def layer_from_gaussian(g: Gaussian, subset, component: int = 0) -> DistanceLayer:
    subset = _check_subset(subset, g.dim)
    nodes = [node_from_component(g, i) for i in subset]
    return DistanceLayer(
        np.array([w for w, _ in nodes]),
        np.array([b for _, b in nodes]),
        Activation.ABS,
        tuple((component, i) for i in subset),
    )


def preactivation(layer: DistanceLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (layer.dim,) or x.ndim > 2:
        raise ShapeError(f"input shape {x.shape} does not match layer width {layer.dim}")
    return x @ layer.weights.T + layer.bias


def activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.ABS:
        return np.abs(z)
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    return z


def forward(layer: DistanceLayer, x) -> np.ndarray:
    """Evaluate the layer on one point or a batch of rows."""
    return activate(preactivation(layer, x), layer.activation)


def abs_to_relu(node, delta: float = DEFAULT_DELTA):
    """Turn an Abs node into a ReLU node whose boundary sits ``delta``
    outside the cluster.

    The ReLU node computes ``max(0, delta - (w . x + b))``: inside the band
    ``|w . x + b| <= delta`` it reads ``2 delta`` on one edge, ``delta`` at the
    mean and 0 on the other edge.
    """
    if not delta > 0:
        raise InvalidConfidence(f"delta must be positive, got {delta}")
    w, b = node
    return -np.asarray(w, dtype=np.float64), -float(b) + delta


def to_intensity(d_values, kind: IntensityKind, bound: float = DEFAULT_DELTA) -> np.ndarray:
    """Map distances (0 = strongest) to intensities (largest = strongest)."""
    d = np.asarray(d_values, dtype=np.float64)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise InvalidDistance("distances must be non-negative")
    kind = IntensityKind(kind)
    if kind is IntensityKind.GAUSSIAN_EXP:
        return np.exp(-d * d)
    if kind is IntensityKind.LAPLACE:
        return np.exp(-d)
    if not bound > 0:
        raise InvalidConfidence(f"bound must be positive, got {bound}")
    return np.maximum(0.0, bound - d)
