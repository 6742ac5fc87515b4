import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distlayer.errors import InvalidMatrix, InvalidRotation, ShapeError
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
from distlayer.linalg import random_rotation
from distlayer.rng import Stream


def random_gaussian(d, seed):
    s = Stream(seed)
    return Gaussian(2 * s.normal(d), random_covariance(d, s, 0.1, 2.0))


class TestMahalanobis:
    def test_identity_is_euclidean(self):
        assert mahalanobis(Gaussian([0, 0], np.eye(2)), [3, 4]) == pytest.approx(5.0, abs=1e-8)

    def test_diagonal(self, diag49):
        # (2^2/4 + 3^2/9)^(1/2)
        assert mahalanobis(diag49, [3, 4]) == pytest.approx(math.sqrt(2), abs=1e-8)

    def test_correlated(self, corr2):
        inv = np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0
        x = np.array([1.0, 1.0])
        oracle = math.sqrt(x @ inv @ x)
        assert oracle == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
        assert mahalanobis(corr2, x) == pytest.approx(oracle, abs=1e-12)

    def test_shape_error(self, corr2):
        with pytest.raises(ShapeError):
            mahalanobis(corr2, [1.0, 2.0, 3.0])

    def test_batch_matches_pointwise(self, corr2):
        xs = np.array([[1.0, 1.0], [3.0, -2.0], [0.0, 0.0]])
        np.testing.assert_allclose(mahalanobis(corr2, xs), [mahalanobis(corr2, x) for x in xs])

    def test_zero_at_mean(self, diag49):
        assert mahalanobis(diag49, diag49.mean) == 0.0
        assert mahalanobis_pca(diag49, diag49.mean) == 0.0


class TestPcaForm:
    def test_identity(self):
        assert mahalanobis_pca(Gaussian([0, 0], np.eye(2)), [3, 4]) == pytest.approx(5.0, abs=1e-8)

    def test_correlated(self, corr2):
        assert mahalanobis_pca(corr2, [1, 1]) == pytest.approx(mahalanobis(corr2, [1, 1]), abs=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(d=st.integers(1, 8), seed=st.integers(0, 2**31))
    def test_equivalence_and_aggregation(self, d, seed):
        g = random_gaussian(d, seed)
        x = g.mean + 3 * Stream(seed, 1).normal(d)
        full = mahalanobis(g, x)
        assert abs(full - mahalanobis_pca(g, x)) < 1e-8
        parts = [component_distance(g, i, x) for i in range(d)]
        assert abs(math.sqrt(sum(p * p for p in parts)) - full) < 1e-8
        assert abs(mahalanobis(g, 2 * g.mean - x) - full) < 1e-8


class TestComponentDistance:
    def test_axis_aligned(self):
        g = Gaussian([0, 0], np.diag([4.0, 9.0]))
        # eigen-index 0 is the lambda=9 axis
        assert component_distance(g, 0, [2, 3]) == pytest.approx(1.0, abs=1e-8)
        assert component_distance(g, 1, [2, 3]) == pytest.approx(1.0, abs=1e-8)

    def test_at_mean(self, diag49):
        assert component_distance(diag49, 0, [1, 1]) == 0.0
        assert component_distance(diag49, 1, [1, 1]) == 0.0

    def test_correlated(self, corr2):
        # |v0 . x| / sqrt(3) with v0 = (1,1)/sqrt2
        assert component_distance(corr2, 0, [1, 1]) == pytest.approx(abs(2 / math.sqrt(2)) / math.sqrt(3), abs=1e-12)

    def test_index_error(self, corr2):
        with pytest.raises(IndexError):
            component_distance(corr2, 2, [1, 1])


class TestWhitening:
    def test_identity(self):
        b = whitening_basis(Gaussian(np.zeros(3), np.eye(3)))
        np.testing.assert_allclose(np.abs(b.rows), np.eye(3), atol=1e-12)

    def test_diagonal_order(self):
        b = whitening_basis(Gaussian([0, 0], np.diag([4.0, 1.0])))
        np.testing.assert_allclose(b.rows, [[0.5, 0.0], [0.0, 1.0]], atol=1e-9)

    def test_correlated(self, corr2):
        b = whitening_basis(corr2)
        expected = [np.array([1, 1]) / (math.sqrt(2) * math.sqrt(3)), np.array([1, -1]) / math.sqrt(2)]
        np.testing.assert_allclose(b.rows, expected, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(b.rows, axis=1), [1 / math.sqrt(3), 1.0], atol=1e-9)
        assert abs(b.rows[0] @ b.rows[1]) < 1e-12

    def test_rotate_identity(self, corr2):
        b = whitening_basis(corr2)
        assert np.array_equal(rotate_whitening(b, np.eye(2)).rows, b.rows)

    def test_rotate_quarter_turn(self):
        b = whitening_basis(Gaussian([0, 0], np.eye(2)))
        r = np.array([[0.0, -1.0], [1.0, 0.0]])
        rb = rotate_whitening(b, r)
        np.testing.assert_allclose(np.abs(rb.rows), np.abs(b.rows[::-1]), atol=1e-12)
        x = np.array([0.3, -2.0])
        assert rb.distance(x) == pytest.approx(b.distance(x), abs=1e-12)

    def test_rotate_changes_rows_not_distance(self, corr2):
        b = whitening_basis(corr2)
        rb = rotate_whitening(b, random_rotation(2, 3))
        x = np.array([1.0, 1.0])
        assert np.max(np.abs(rb.apply(x) - b.apply(x))) > 1e-3
        assert rb.distance(x) == pytest.approx(math.sqrt(2 / 3), abs=1e-8)

    def test_rotate_rejects_non_orthogonal(self, corr2):
        with pytest.raises(InvalidRotation):
            rotate_whitening(whitening_basis(corr2), [[1.0, 0.1], [0.0, 1.0]])
        with pytest.raises(ShapeError):
            rotate_whitening(whitening_basis(corr2), np.eye(3))

    @settings(max_examples=40, deadline=None)
    @given(d=st.integers(1, 8), seed=st.integers(0, 2**31))
    def test_rotation_invariance(self, d, seed):
        g = random_gaussian(d, seed)
        rb = rotate_whitening(whitening_basis(g), random_rotation(d, seed))
        x = g.mean + 3 * Stream(seed, 2).normal(d)
        assert abs(rb.distance(x) - mahalanobis(g, x)) < 1e-8

    def test_whitened_sample_covariance(self):
        g = random_gaussian(4, 9)
        data = sample_gmm(GaussianMixture([1.0], [g]), 100_000, 1)
        z = whitening_basis(g).apply(data.x)
        assert np.max(np.abs(np.cov(z, rowvar=False) - np.eye(4))) < 0.05


class TestRegularization:
    def test_well_conditioned_covariance_untouched(self, corr2):
        assert corr2.regularized_covariance is corr2.covariance
        np.testing.assert_allclose(corr2.eigen.eigenvalues, [3.0, 1.0], atol=1e-14)

    def test_singular_covariance_floored(self):
        g = Gaussian([0, 0], [[1.0, 1.0], [1.0, 1.0]])
        eps = 1e-9 * 2.0 / 2
        assert g.eigen.eigenvalues[-1] == pytest.approx(eps)
        assert np.isfinite(mahalanobis(g, [1.0, -1.0]))
        assert mahalanobis(g, [1.0, -1.0]) == pytest.approx(mahalanobis_pca(g, [1.0, -1.0]), rel=1e-6)

    def test_floor_is_idempotent(self):
        g = Gaussian([0, 0, 0], np.diag([5.0, 1e-14, 0.0]))
        vals, vecs = g.eigen
        again = Gaussian([0, 0, 0], (vecs * vals) @ vecs.T)
        np.testing.assert_allclose(again.eigen.eigenvalues, vals, rtol=1e-6)

    def test_rejects_bad_covariances(self):
        with pytest.raises(InvalidMatrix):
            Gaussian([0, 0], [[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(InvalidMatrix):
            Gaussian([0, 0], [[1.0, 0.0], [0.0, -1.0]]).eigen
        with pytest.raises(ShapeError):
            Gaussian([0, 0], np.eye(3))


class TestSampling:
    def test_law_of_large_numbers(self):
        data = sample_gmm(GaussianMixture([1.0], [Gaussian([0, 0], np.eye(2))]), 10_000, 1)
        assert np.all(np.abs(data.x.mean(axis=0)) < 0.05)

    def test_degenerate_weights(self):
        m = GaussianMixture([1.0, 0.0], [Gaussian([0, 0], np.eye(2)), Gaussian([5, 5], np.eye(2))])
        assert np.all(sample_gmm(m, 500, 4).labels == 0)

    def test_deterministic(self):
        m = GaussianMixture([0.3, 0.7], [Gaussian([0, 0], np.eye(2)), Gaussian([5, 5], np.diag([2.0, 0.5]))])
        a, b = sample_gmm(m, 300, 9), sample_gmm(m, 300, 9)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.labels, b.labels)

    def test_component_moments(self):
        cov = np.array([[2.0, 0.6], [0.6, 0.5]])
        m = GaussianMixture([0.25, 0.75], [Gaussian([-4, 0], cov), Gaussian([4, 1], np.eye(2))])
        data = sample_gmm(m, 40_000, 2)
        assert abs(np.mean(data.labels == 0) - 0.25) < 0.01
        np.testing.assert_allclose(np.cov(data.x[data.labels == 0], rowvar=False), cov, atol=0.06)

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            GaussianMixture([0.5, 0.6], [Gaussian([0], [[1.0]]), Gaussian([1], [[1.0]])])
