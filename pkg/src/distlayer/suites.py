"""Invariant suites run by ``distlayer verify``.

Each suite draws its own random cases from ``Stream(seed, suite_id, dim, trial)``
and reports one :class:`Check` per measured quantity and dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from distlayer.errors import NoTestableParameters
from distlayer.gaussian import (
    Gaussian,
    GaussianMixture,
    component_distance,
    mahalanobis,
    mahalanobis_pca,
    random_covariance,
    rotate_whitening,
    sample_gmm,
    whitening_basis,
)
from distlayer.layer import DistanceLayer, abs_to_relu, forward, layer_from_gaussian, node_from_component
from distlayer.linalg import random_rotation
from distlayer.rng import Stream
from distlayer.train import Loss, MLPModel, gradient_check
from distlayer.translate import gmm_to_network, recover_prototype, translate_network

SUITES = ("mahalanobis", "rotation", "abs-relu", "roundtrip", "gradcheck")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    # "below": pass iff value < tolerance; "above": pass iff value > tolerance
    sense: str = "below"

    @property
    def passed(self) -> bool:
        if self.sense == "below":
            return bool(self.value < self.tolerance)
        return bool(self.value > self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        op = "<" if self.sense == "below" else ">"
        return f"{status} {self.name} value={self.value:.3e} {op} {self.tolerance:.0e}"


def random_gaussian(dim: int, stream: Stream) -> Gaussian:
    return Gaussian(2.0 * stream.normal(dim), random_covariance(dim, stream, 0.1, 2.0))


def _point_near(g: Gaussian, stream: Stream) -> np.ndarray:
    return g.mean + 3.0 * stream.normal(g.dim)


def run_mahalanobis(dims, trials, seed):
    checks = []
    for d in dims:
        eq14 = agg = node = boundary = 0.0
        for t in range(trials):
            s = Stream(seed, 1, d, t)
            g = random_gaussian(d, s)
            x = _point_near(g, s)
            full = mahalanobis(g, x)
            eq14 = max(eq14, abs(full - mahalanobis_pca(g, x)))
            comps = np.array([component_distance(g, i, x) for i in range(d)])
            agg = max(agg, abs(np.sqrt(np.sum(comps**2)) - full))
            for i in range(d):
                out = forward(layer_from_gaussian(g, [i]), x)[0]
                node = max(node, abs(out - comps[i]))
                w, b = node_from_component(g, i)
                boundary = max(boundary, abs(w @ g.mean + b))
        checks += [
            Check(f"mahalanobis/covariance-vs-pca d={d}", eq14, 1e-8),
            Check(f"mahalanobis/l2-aggregation d={d}", agg, 1e-8),
            Check(f"mahalanobis/abs-node-vs-component d={d}", node, 1e-10),
            Check(f"mahalanobis/mean-on-boundary d={d}", boundary, 1e-10),
        ]
    return checks


def run_rotation(dims, trials, seed, n_samples=100_000):
    checks = []
    for d in dims:
        agg = 0.0
        min_change = np.inf
        s = Stream(seed, 2, d)
        g = random_gaussian(d, s)
        base = whitening_basis(g)
        for t in range(trials):
            st = Stream(seed, 2, d, t)
            x = _point_near(g, st)
            rot = rotate_whitening(base, random_rotation(d, int(st.uniform(1)[0] * 2**31)))
            agg = max(agg, abs(rot.distance(x) - mahalanobis(g, x)))
            min_change = min(min_change, float(np.max(np.abs(rot.apply(x) - base.apply(x)))))
        data = sample_gmm(GaussianMixture([1.0], [g]), n_samples, seed)
        z = base.apply(data.x)
        cov_err = float(np.max(np.abs(np.cov(z, rowvar=False).reshape(d, d) - np.eye(d))))
        checks += [Check(f"rotation/aggregate-invariance d={d}", agg, 1e-8)]
        if d > 1:
            checks += [Check(f"rotation/per-row-change d={d}", min_change, 1e-3, "above")]
        checks += [Check(f"rotation/whitened-covariance d={d}", cov_err, 0.05)]
    return checks


def run_abs_relu(dims, trials, seed, delta=3.0):
    checks = []
    for d in dims:
        affine = 0.0
        out_of_range = 0.0
        for t in range(trials):
            s = Stream(seed, 3, d, t)
            g = random_gaussian(d, s)
            i = int(s.uniform(1)[0] * d)
            w, b = node_from_component(g, i)
            wr, br = abs_to_relu((w, b), delta)
            # points spread across and slightly beyond the band |w.x + b| <= delta
            target = delta * (2.4 * s.uniform(32) - 1.2)
            jitter = s.normal((32, d))
            jitter -= np.outer(jitter @ w, w) / (w @ w)
            x = g.mean + np.outer(target, w) / (w @ w) + jitter
            z = x @ w + b
            relu = np.maximum(0.0, x @ wr + br)
            inside = np.abs(z) <= delta
            affine = max(affine, float(np.max(np.abs(relu[inside] + z[inside] - delta), initial=0.0)))
            lo = np.maximum(0.0, -relu[inside])
            hi = np.maximum(0.0, relu[inside] - 2 * delta)
            out_of_range = max(out_of_range, float(np.max(lo + hi, initial=0.0)))
        checks += [
            Check(f"abs-relu/affine-relation d={d}", affine, 1e-12),
            Check(f"abs-relu/output-range d={d}", out_of_range, 1e-12),
        ]
    return checks


def run_roundtrip(dims, trials, seed):
    checks = []
    for d in dims:
        mean_err = cov_err = fwd_err = proto_err = 0.0
        for t in range(trials):
            s = Stream(seed, 4, d, t)
            k = 1 + int(s.uniform(1)[0] * 4)
            m = GaussianMixture(np.full(k, 1.0 / k), [random_gaussian(d, s) for _ in range(k)])
            layer = gmm_to_network(m)
            report = translate_network(layer, truth=m)
            mean_err = max(mean_err, *report.mean_errors)
            cov_err = max(cov_err, *report.covariance_errors)
            x = 2.0 * s.normal(d)
            outs = forward(layer, x)
            for row, (c, i) in enumerate(layer.provenance):
                fwd_err = max(fwd_err, abs(component_distance(report.mixture.components[c], i, x) - outs[row]))
            for group in report.groups:
                mu = recover_prototype(layer, group.rows).mean
                res = layer.weights[list(group.rows)] @ mu + layer.bias[list(group.rows)]
                proto_err = max(proto_err, float(np.max(np.abs(res))))
        checks += [
            Check(f"roundtrip/mean-max-abs d={d}", mean_err, 1e-8),
            Check(f"roundtrip/covariance-rel-frobenius d={d}", cov_err, 1e-8),
            Check(f"roundtrip/forward-equivalence d={d}", fwd_err, 1e-8),
            Check(f"roundtrip/prototype-on-hyperplanes d={d}", proto_err, 1e-8),
        ]
    return checks


def random_mlp(stream: Stream, activation, dim: int, hidden=(6, 5), classes: int = 3) -> MLPModel:
    widths = (dim,) + tuple(hidden)
    layers = tuple(
        DistanceLayer(stream.normal((widths[j + 1], widths[j])) / np.sqrt(widths[j]), stream.normal(widths[j + 1]),
                      activation)
        for j in range(len(hidden))
    )
    head = DistanceLayer(stream.normal((classes, widths[-1])) / np.sqrt(widths[-1]), stream.normal(classes), "identity")
    return MLPModel(layers, head)


def run_gradcheck(dims, trials, seed, epsilon=1e-5):
    checks = []
    for activation in ("abs", "relu", "identity"):
        for loss in Loss:
            worst = 0.0
            for d in dims:
                for t in range(trials):
                    s = Stream(seed, 5, d, t)
                    m = random_mlp(s, activation, d)
                    x = s.normal((16, d))
                    y = (s.uniform(16) * m.classes).astype(np.int64)
                    try:
                        worst = max(worst, gradient_check(m, x, y, loss, epsilon))
                    except NoTestableParameters:
                        continue
            checks.append(Check(f"gradcheck/{activation}-{loss.value}", worst, 1e-5))
    return checks


RUNNERS = {
    "mahalanobis": run_mahalanobis,
    "rotation": run_rotation,
    "abs-relu": run_abs_relu,
    "roundtrip": run_roundtrip,
    "gradcheck": run_gradcheck,
}


def run(suite: str, dims, trials: int, seed: int):
    names = SUITES if suite == "all" else (suite,)
    checks = []
    for name in names:
        checks += RUNNERS[name](dims, trials, seed)
    return checks
