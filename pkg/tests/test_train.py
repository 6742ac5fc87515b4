import math

import numpy as np
import pytest

from distlayer.errors import CacheError, DivergenceError, NoTestableParameters, ShapeError, ZeroRowError
from distlayer.gaussian import Dataset, Gaussian, GaussianMixture, sample_gmm
from distlayer.layer import DistanceLayer
from distlayer.rng import Stream
from distlayer.suites import random_mlp
from distlayer.train import (
    Loss,
    MLPModel,
    TrainConfig,
    gradient_check,
    loss_and_grad,
    mlp_backward,
    mlp_forward,
    orthogonality_penalty,
    train,
)


def linear_model(w, b):
    return MLPModel((), DistanceLayer(w, b, "identity"))


def blobs(n=200, seed=0):
    m = GaussianMixture([0.5, 0.5], [Gaussian([0, 0], 0.04 * np.eye(2)), Gaussian([4, 4], 0.04 * np.eye(2))])
    return sample_gmm(m, n, seed)


def small_net(seed=0, activation="abs", rows=4):
    s = Stream(seed)
    hidden = DistanceLayer(s.normal((rows, 2)) / np.sqrt(2), s.normal(rows), activation)
    head = DistanceLayer(s.normal((2, rows)) / np.sqrt(rows), np.zeros(2), "identity")
    return MLPModel((hidden,), head)


class TestForward:
    def test_abs_identity_chain(self):
        m = MLPModel((DistanceLayer([[1.0, 0.0]], [-1.0], "abs"),), DistanceLayer([[2.0]], [0.5], "identity"))
        logits, cache = mlp_forward(m, [3.0, 0.0])
        assert logits[0] == 4.5
        assert cache.pre[0].shape == (1, 1) and cache.post[0][0, 0] == 2.0

    def test_batch(self):
        m = small_net()
        x = Stream(1).normal((5, 2))
        logits, _ = mlp_forward(m, x)
        for i in range(5):
            np.testing.assert_allclose(mlp_forward(m, x[i])[0], logits[i], rtol=1e-14, atol=1e-14)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            mlp_forward(small_net(), np.zeros(3))

    def test_head_must_be_identity(self):
        with pytest.raises(ValueError):
            MLPModel((), DistanceLayer(np.eye(2), [0, 0], "relu"))


class TestBackward:
    def test_mse_linear_closed_form(self):
        w, b = Stream(2).normal((3, 4)), Stream(3).normal(3)
        m = linear_model(w, b)
        x = Stream(4).normal(4)
        y = Stream(5).normal(3)
        logits, cache = mlp_forward(m, x)
        _, g = loss_and_grad(logits, y[None, :], Loss.MEAN_SQUARED_ERROR)
        (dw, db), = mlp_backward(m, cache, g)
        np.testing.assert_allclose(dw, np.outer(w @ x + b - y, x), atol=1e-12)
        np.testing.assert_allclose(db, w @ x + b - y, atol=1e-12)

    def test_abs_at_zero_gives_zero_gradient(self):
        m = MLPModel((DistanceLayer([[1.0, 0.0]], [-1.0], "abs"),), DistanceLayer([[1.0]], [0.0], "identity"))
        _, cache = mlp_forward(m, [1.0, 5.0])
        grads = mlp_backward(m, cache, [[1.0]])
        np.testing.assert_array_equal(grads[0][0], 0.0)
        np.testing.assert_array_equal(grads[0][1], 0.0)

    def test_cache_mismatch(self):
        _, cache = mlp_forward(small_net(rows=4), np.zeros(2))
        with pytest.raises(CacheError):
            mlp_backward(small_net(rows=3), cache, np.zeros((1, 2)))
        with pytest.raises(CacheError):
            mlp_backward(small_net(rows=4), cache, np.zeros((1, 5)))


class TestLoss:
    def test_cross_entropy_uniform(self):
        value, g = loss_and_grad(np.zeros((2, 4)), [0, 3], Loss.SOFTMAX_CROSS_ENTROPY)
        assert value == pytest.approx(math.log(4))
        np.testing.assert_allclose(g.sum(axis=1), 0.0, atol=1e-15)

    def test_mse_integer_labels(self):
        value, g = loss_and_grad([[1.0, 0.0]], [1], Loss.MEAN_SQUARED_ERROR)
        assert value == pytest.approx(1.0)
        np.testing.assert_array_equal(g, [[1.0, -1.0]])

    def test_cross_entropy_stable(self):
        value, _ = loss_and_grad([[1000.0, 0.0]], [0], "softmax-ce")
        assert value == pytest.approx(0.0, abs=1e-12)


class TestPenalty:
    def test_identity_zero(self):
        assert orthogonality_penalty(np.eye(3))[0] == 0.0

    def test_parallel_rows(self):
        assert orthogonality_penalty(np.array([[1.0, 0.0], [1.0, 0.0]]))[0] == pytest.approx(2.0)

    def test_single_row(self):
        assert orthogonality_penalty(np.array([[3.0, 4.0]]))[0] == pytest.approx(0.0, abs=1e-15)

    def test_row_scale_invariant(self):
        w = Stream(6).normal((3, 4))
        scaled = w * np.array([[2.0], [0.1], [7.0]])
        assert orthogonality_penalty(w)[0] == pytest.approx(orthogonality_penalty(scaled)[0], rel=1e-12)

    def test_zero_row(self):
        with pytest.raises(ZeroRowError):
            orthogonality_penalty(np.array([[0.0, 0.0], [1.0, 0.0]]))

    def test_gradient_matches_finite_differences(self):
        w = Stream(7).normal((3, 4))
        _, grad = orthogonality_penalty(w)
        eps = 1e-6
        for idx in np.ndindex(w.shape):
            wp, wm = w.copy(), w.copy()
            wp[idx] += eps
            wm[idx] -= eps
            num = (orthogonality_penalty(wp)[0] - orthogonality_penalty(wm)[0]) / (2 * eps)
            assert abs(num - grad[idx]) < 1e-7

    def test_zero_iff_orthogonal(self):
        q, _ = np.linalg.qr(Stream(8).normal((4, 4)))
        assert orthogonality_penalty(q[:3] * [[2.0], [0.5], [3.0]])[0] < 1e-24
        assert orthogonality_penalty(q[:3] + 0.01)[0] > 1e-6


class TestGradientCheck:
    def test_identity_linear(self):
        m = linear_model(Stream(1).normal((3, 4)), Stream(2).normal(3))
        x = Stream(3).normal((8, 4))
        assert gradient_check(m, x, np.array([0, 1, 2, 0, 1, 2, 0, 1]), Loss.MEAN_SQUARED_ERROR, 1e-3) < 1e-9

    @pytest.mark.parametrize("activation", ["abs", "relu", "identity"])
    @pytest.mark.parametrize("loss", list(Loss))
    def test_random_models(self, activation, loss):
        for t in range(5):
            s = Stream(11, t)
            m = random_mlp(s, activation, 3)
            x = s.normal((12, 3))
            y = (s.uniform(12) * 3).astype(np.int64)
            assert gradient_check(m, x, y, loss) < 1e-5

    def test_with_penalty(self):
        s = Stream(12)
        m = random_mlp(s, "abs", 4)
        x = s.normal((10, 4))
        y = (s.uniform(10) * 3).astype(np.int64)
        assert gradient_check(m, x, y, Loss.SOFTMAX_CROSS_ENTROPY, ortho_coef=0.7) < 1e-5

    def test_all_on_kinks(self):
        m = MLPModel((DistanceLayer([[1.0, 0.0]], [0.0], "abs"),), DistanceLayer([[1.0]], [0.0], "identity"))
        x = np.array([[0.0, 1.0], [0.0, -2.0]])
        with pytest.raises(NoTestableParameters):
            gradient_check(m, x, np.array([0, 0]), Loss.MEAN_SQUARED_ERROR)

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            gradient_check(small_net(), np.zeros((1, 2)) + 1, [0], Loss.MEAN_SQUARED_ERROR, epsilon=0.1)


class TestTrain:
    def test_separable_blobs(self):
        data = blobs()
        result = train(small_net(), data, TrainConfig(learning_rate=0.1, epochs=40, batch_size=16))
        assert result.history[-1].loss < 0.1
        assert len(result.history) == 41 and result.history[0].epoch == 0

    def test_zero_learning_rate(self):
        data = blobs()
        m = small_net()
        result = train(m, data, TrainConfig(learning_rate=0.0, epochs=5))
        assert len({r.loss for r in result.history}) == 1
        np.testing.assert_array_equal(result.model.layers[0].weights, m.layers[0].weights)

    def test_deterministic(self):
        data = blobs()
        cfg = TrainConfig(epochs=3, seed=9, ortho_coef=0.1)
        a, b = train(small_net(), data, cfg), train(small_net(), data, cfg)
        assert a.history == b.history
        np.testing.assert_array_equal(a.model.head.weights, b.model.head.weights)

    def test_divergence(self):
        data = Dataset(np.full((8, 2), 1e6), np.zeros(8, dtype=np.int64))
        with pytest.raises(DivergenceError) as info:
            train(small_net(), data, TrainConfig(learning_rate=1e6, epochs=5, loss=Loss.MEAN_SQUARED_ERROR))
        assert info.value.epoch >= 1

    def test_penalty_reduces_overlap(self):
        data = blobs()
        cfg0 = TrainConfig(learning_rate=0.05, epochs=20, ortho_coef=0.0)
        cfg1 = TrainConfig(learning_rate=0.05, epochs=20, ortho_coef=1.0)
        m = small_net(rows=2)
        assert train(m, data, cfg1).history[-1].penalty <= train(m, data, cfg0).history[-1].penalty

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-1)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
