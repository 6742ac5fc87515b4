"""File formats: dataset CSV, mixture JSON, model JSON and loss-history CSV.

All writers are byte-deterministic: fixed key order, ``.17g`` reals (which
round-trip every double), LF line endings, UTF-8.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from distlayer.gaussian import Dataset, Gaussian, GaussianMixture
from distlayer.layer import Activation, DistanceLayer
from distlayer.train import MLPModel

MODEL_FORMAT_VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{j}" for j in range(data.dim)] + ["label"])
    for row, label in zip(data.x, data.labels):
        writer.writerow([fmt(v) for v in row] + [int(label)])
    return buf.getvalue()


def save_dataset(data: Dataset, path) -> None:
    _write_text(path, dataset_to_csv(data))


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "label" or header[:-1] != [f"x{j}" for j in range(len(header) - 1)]:
            raise ValueError(f"{path}: expected header x0,...,x{{d-1}},label")
        rows = [r for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: dataset has no rows")
    x = np.array([[float(v) for v in r[:-1]] for r in rows])
    labels = np.array([int(r[-1]) for r in rows])
    return Dataset(x, labels)


def mixture_to_dict(m: GaussianMixture) -> dict:
    return {
        "weights": [float(w) for w in m.weights],
        "components": [
            {"mean": [float(v) for v in g.mean], "covariance": [[float(v) for v in row] for row in g.covariance]}
            for g in m.components
        ],
    }


def mixture_from_dict(obj: dict) -> GaussianMixture:
    comps = [Gaussian(c["mean"], c["covariance"]) for c in obj["components"]]
    return GaussianMixture(obj["weights"], comps)


def save_mixture(m: GaussianMixture, path) -> None:
    _write_text(path, json.dumps(mixture_to_dict(m), indent=2) + "\n")


def load_mixture(path) -> GaussianMixture:
    with open(path, encoding="utf-8") as fh:
        return mixture_from_dict(json.load(fh))


def _layer_to_dict(layer: DistanceLayer) -> dict:
    return {
        "shape": list(layer.weights.shape),
        "weights": [fmt(v) for v in layer.weights.ravel()],
        "bias": [fmt(v) for v in layer.bias],
        "activation": layer.activation.value,
        "provenance": None if layer.provenance is None else [list(p) for p in layer.provenance],
    }


def _layer_from_dict(obj: dict) -> DistanceLayer:
    rows, cols = (int(s) for s in obj["shape"])
    w = np.array([float(v) for v in obj["weights"]])
    if w.size != rows * cols:
        raise ValueError(f"layer declares shape {rows}x{cols} but has {w.size} weights")
    return DistanceLayer(w.reshape(rows, cols), [float(v) for v in obj["bias"]],
                         Activation(obj["activation"]), obj.get("provenance"))


def model_to_dict(layers, metadata=None) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "layers": [_layer_to_dict(l) for l in layers],
        "metadata": dict(metadata or {}),
    }


def model_to_json(layers, metadata=None) -> str:
    return json.dumps(model_to_dict(layers, metadata), indent=2, sort_keys=False) + "\n"


def save_model(layers, path, metadata=None) -> None:
    """Write a list of layers (or an :class:`MLPModel`) as a ModelFile."""
    if isinstance(layers, MLPModel):
        layers = layers.all_layers
    elif isinstance(layers, DistanceLayer):
        layers = [layers]
    _write_text(path, model_to_json(layers, metadata))


def load_model(path):
    """Return ``(layers, metadata)`` from a ModelFile."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format version {obj.get('version')!r}")
    layers = [_layer_from_dict(l) for l in obj["layers"]]
    for j in range(1, len(layers)):
        if layers[j].dim != layers[j - 1].rows:
            raise ValueError(f"{path}: layer {j} does not chain onto layer {j - 1}")
    return layers, obj.get("metadata", {})


def history_to_csv(history) -> str:
    lines = ["epoch,loss,penalty,total"]
    lines += [f"{r.epoch},{fmt(r.loss)},{fmt(r.penalty)},{fmt(r.total)}" for r in history]
    return "\n".join(lines) + "\n"


def save_history(history, path) -> None:
    _write_text(path, history_to_csv(history))


def write_json(obj, path) -> None:
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def ensure_parent(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p
