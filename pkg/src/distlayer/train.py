"""A small MLP over DistanceLayers: forward/backward, the direction
orthogonality penalty, finite-difference gradient checks and plain SGD."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from distlayer.errors import CacheError, DivergenceError, NoTestableParameters, ShapeError, ZeroRowError
from distlayer.gaussian import Dataset
from distlayer.layer import Activation, DistanceLayer, activate
from distlayer.rng import Stream

KINKED = (Activation.ABS, Activation.RELU)
# denominator floor of the relative error in gradient_check
GRADCHECK_FLOOR = 1e-4


class Loss(str, enum.Enum):
    SOFTMAX_CROSS_ENTROPY = "softmax-ce"
    MEAN_SQUARED_ERROR = "mse"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 32
    ortho_coef: float = 0.0
    seed: int = 0
    loss: Loss = Loss.SOFTMAX_CROSS_ENTROPY

    def __post_init__(self):
        object.__setattr__(self, "loss", Loss(self.loss))
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not self.ortho_coef >= 0:
            raise ValueError(f"ortho_coef must be >= 0, got {self.ortho_coef}")


@dataclass(frozen=True, eq=False)
class MLPModel:
    """Hidden DistanceLayers followed by an Identity head producing logits."""

    layers: tuple
    head: DistanceLayer

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if self.head.activation is not Activation.IDENTITY:
            raise ValueError("the output head must use the Identity activation")
        chain = layers + (self.head,)
        for j in range(1, len(chain)):
            if chain[j].dim != chain[j - 1].rows:
                raise ShapeError(f"layer {j} expects {chain[j].dim} inputs but layer {j - 1} emits {chain[j - 1].rows}")

    @property
    def all_layers(self) -> tuple:
        return self.layers + (self.head,)

    @property
    def input_dim(self) -> int:
        return self.all_layers[0].dim

    @property
    def classes(self) -> int:
        return self.head.rows

    def with_params(self, params) -> MLPModel:
        built = [DistanceLayer(w, b, l.activation, l.provenance) for l, (w, b) in zip(self.all_layers, params)]
        return MLPModel(tuple(built[:-1]), built[-1])


class ForwardCache(NamedTuple):
    inputs: tuple
    pre: tuple
    post: tuple


def _params(m: MLPModel):
    return [(np.array(l.weights), np.array(l.bias)) for l in m.all_layers]


def _forward(params, activations, x):
    inputs, pre, post = [], [], []
    a = x
    for (w, b), act in zip(params, activations):
        inputs.append(a)
        z = a @ w.T + b
        a = activate(z, act)
        pre.append(z)
        post.append(a)
    return a, ForwardCache(tuple(inputs), tuple(pre), tuple(post))


def _backward(params, activations, cache, grad_out):
    if len(cache.pre) != len(params) or any(
        z.shape[1] != w.shape[0] or x.shape[1] != w.shape[1] for z, x, (w, _) in zip(cache.pre, cache.inputs, params)
    ):
        raise CacheError("cache does not match the model's layer shapes")
    if grad_out.shape != cache.post[-1].shape:
        raise CacheError(f"gradient shape {grad_out.shape} does not match logits {cache.post[-1].shape}")
    grads = [None] * len(params)
    g = grad_out
    for j in range(len(params) - 1, -1, -1):
        act = activations[j]
        z = cache.pre[j]
        if act is Activation.ABS:
            g = g * np.sign(z)
        elif act is Activation.RELU:
            g = g * (z > 0)
        w, _ = params[j]
        grads[j] = (g.T @ cache.inputs[j], g.sum(axis=0))
        g = g @ w
    return grads


def _as_batch(m: MLPModel, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != m.input_dim:
        raise ShapeError(f"input shape {x.shape} does not match model input width {m.input_dim}")
    return xb, single


def mlp_forward(m: MLPModel, x):
    """Logits and the per-layer cache (inputs, pre- and post-activations).

    ``x`` may be one point or a batch of rows; cached arrays are always 2-D.
    """
    xb, single = _as_batch(m, x)
    logits, cache = _forward(_params(m), [l.activation for l in m.all_layers], xb)
    return (logits[0] if single else logits), cache


def mlp_backward(m: MLPModel, cache: ForwardCache, grad_logits):
    """Reverse-mode gradients ``[(dW, db), ...]`` for hidden layers then head.

    Abs contributes ``sign(z)`` with ``sign(0) = 0``; ReLU contributes
    ``1[z > 0]``.
    """
    g = np.asarray(grad_logits, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    return _backward(_params(m), [l.activation for l in m.all_layers], cache, g)


def loss_and_grad(logits, targets, loss: Loss):
    """Batch-mean loss and its gradient with respect to the logits.

    Cross-entropy takes integer class labels. Squared error is
    ``0.5 * |y_hat - y|^2`` per sample and takes either integer labels
    (one-hot encoded) or a target matrix.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    n, c = logits.shape
    targets = np.asarray(targets)
    if Loss(loss) is Loss.SOFTMAX_CROSS_ENTROPY:
        labels = targets.astype(np.int64).reshape(n)
        shifted = logits - logits.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        value = float(np.mean(logz - shifted[np.arange(n), labels]))
        probs = np.exp(shifted - logz[:, None])
        probs[np.arange(n), labels] -= 1.0
        return value, probs / n
    if targets.ndim == 1 and np.issubdtype(targets.dtype, np.integer):
        y = np.zeros((n, c))
        y[np.arange(n), targets] = 1.0
    else:
        y = np.asarray(targets, dtype=np.float64).reshape(n, c)
    diff = logits - y
    return float(0.5 * np.sum(diff * diff) / n), diff / n


def orthogonality_penalty(layer) -> tuple:
    """``||W_hat W_hat^T - I||_F^2`` over l2-normalized rows, and its gradient
    with respect to the raw weights. Row scales are not penalized."""
    w = np.asarray(layer.weights if isinstance(layer, DistanceLayer) else layer, dtype=np.float64)
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms == 0.0):
        raise ZeroRowError("cannot normalize an all-zero row")
    wh = w / norms[:, None]
    resid = wh @ wh.T - np.eye(w.shape[0])
    value = float(np.sum(resid * resid))
    g_hat = 4.0 * resid @ wh
    # chain through row normalization: (I - w_hat w_hat^T) g / |w|
    radial = np.sum(g_hat * wh, axis=1, keepdims=True)
    grad = (g_hat - radial * wh) / norms[:, None]
    return value, grad


def _objective(params, activations, x, targets, loss, ortho_coef):
    logits, cache = _forward(params, activations, x)
    value, _ = loss_and_grad(logits, targets, loss)
    if ortho_coef:
        value += ortho_coef * sum(orthogonality_penalty(w)[0] for w, _ in params[:-1])
    return value, cache


def _kink_signs(cache, activations):
    return [np.sign(z) for z, act in zip(cache.pre, activations) if act in KINKED]


def gradient_check(m: MLPModel, x, targets, loss: Loss, epsilon: float = 1e-5, ortho_coef: float = 0.0) -> float:
    """Largest relative error between analytic and central-difference
    gradients over all parameters.

    Samples with any Abs/ReLU pre-activation within ``10 * epsilon`` of its
    kink are dropped first; a parameter whose perturbation still flips a kink
    sign is skipped. Relative error is ``|a - n| / max(|a|, |n|, 1e-4)``.

    Raises
    ------
    NoTestableParameters
        If no sample or no parameter survives the exclusions.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in [1e-7, 1e-3], got {epsilon}")
    xb, _ = _as_batch(m, x)
    targets = np.asarray(targets)
    activations = [l.activation for l in m.all_layers]
    params = _params(m)
    _, cache = _forward(params, activations, xb)
    keep = np.ones(len(xb), dtype=bool)
    for z, act in zip(cache.pre, activations):
        if act in KINKED:
            keep &= np.all(np.abs(z) >= 10 * epsilon, axis=1)
    if not keep.any():
        raise NoTestableParameters("every sample lies within a kink neighborhood")
    xb, targets = xb[keep], targets[keep]

    logits, cache = _forward(params, activations, xb)
    _, dlogits = loss_and_grad(logits, targets, loss)
    analytic = _backward(params, activations, cache, dlogits)
    if ortho_coef:
        for j, (w, _) in enumerate(params[:-1]):
            analytic[j] = (analytic[j][0] + ortho_coef * orthogonality_penalty(w)[1], analytic[j][1])
    base_signs = _kink_signs(cache, activations)

    worst = -1.0
    for j in range(len(params)):
        for which in (0, 1):
            arr = params[j][which]
            grad = analytic[j][which]
            for idx in np.ndindex(arr.shape):
                orig = arr[idx]
                arr[idx] = orig + epsilon
                f_plus, c_plus = _objective(params, activations, xb, targets, loss, ortho_coef)
                arr[idx] = orig - epsilon
                f_minus, c_minus = _objective(params, activations, xb, targets, loss, ortho_coef)
                arr[idx] = orig
                flipped = any(
                    not np.array_equal(s0, s) for s0, s in zip(base_signs, _kink_signs(c_plus, activations))
                ) or any(not np.array_equal(s0, s) for s0, s in zip(base_signs, _kink_signs(c_minus, activations)))
                if flipped:
                    continue
                numeric = (f_plus - f_minus) / (2 * epsilon)
                a = grad[idx]
                rel = abs(a - numeric) / max(abs(a), abs(numeric), GRADCHECK_FLOOR)
                worst = max(worst, rel)
    if worst < 0:
        raise NoTestableParameters("every parameter perturbation crosses a kink")
    return worst


class EpochRecord(NamedTuple):
    epoch: int
    loss: float
    penalty: float
    total: float


class TrainResult(NamedTuple):
    model: MLPModel
    history: list


def _evaluate(params, activations, x, targets, cfg):
    logits, _ = _forward(params, activations, x)
    value, _ = loss_and_grad(logits, targets, cfg.loss)
    penalty = float(sum(orthogonality_penalty(w)[0] for w, _ in params[:-1]))
    return value, penalty, value + cfg.ortho_coef * penalty


def train(m: MLPModel, data: Dataset, cfg: TrainConfig) -> TrainResult:
    """Minibatch SGD on ``loss + ortho_coef * sum(penalty of hidden layers)``.

    Epoch ``e`` visits samples in the order of ``Stream(cfg.seed, e)``'s
    permutation. ``history[0]`` holds the untrained model's values, then one
    record per epoch over the full dataset.

    Raises
    ------
    DivergenceError
        When the epoch loss is NaN or infinite.
    """
    x = np.asarray(data.x, dtype=np.float64)
    targets = data.labels
    if x.shape[1] != m.input_dim:
        raise ShapeError(f"data width {x.shape[1]} does not match model input {m.input_dim}")
    if targets.min() < 0 or targets.max() >= m.classes:
        raise ValueError(f"labels must lie in [0, {m.classes})")
    activations = [l.activation for l in m.all_layers]
    params = _params(m)
    history = [EpochRecord(0, *_evaluate(params, activations, x, targets, cfg))]
    n = len(x)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            order = Stream(cfg.seed, epoch).permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                logits, cache = _forward(params, activations, x[idx])
                _, dlogits = loss_and_grad(logits, targets[idx], cfg.loss)
                grads = _backward(params, activations, cache, dlogits)
                for j, ((w, b), (dw, db)) in enumerate(zip(params, grads)):
                    if cfg.ortho_coef and j < len(params) - 1:
                        dw = dw + cfg.ortho_coef * orthogonality_penalty(w)[1]
                    w -= cfg.learning_rate * dw
                    b -= cfg.learning_rate * db
            if not all(np.all(np.isfinite(w)) and np.all(np.isfinite(b)) for w, b in params):
                raise DivergenceError(epoch, math.nan)
            record = EpochRecord(epoch, *_evaluate(params, activations, x, targets, cfg))
            if not math.isfinite(record.total):
                raise DivergenceError(epoch, record.total)
            history.append(record)
    return TrainResult(m.with_params(params), history)
