import numpy as np
import pytest

from zsda.adaptation import (
    AlignmentMap,
    GfkKernel,
    gfk_classify,
    gfk_kernel,
    learn_subspace,
    nearest_neighbor,
    sa_classify,
    subspace_alignment,
)
from zsda.errors import ComplementUnavailable, DegenerateVariance, DimensionMismatch, InsufficientSamples
from zsda.grassmann import Subspace, make_subspace, random_subspace

from conftest import line, random_orthogonal, random_pair
from oracles import brute_force_1nn, covariance_pca_projector, geodesic_flow_trapezoid


def blobs(rng, n_per_class, d, classes=2, spread=1.0):
    means = 3.0 * rng.standard_normal((classes, d))
    x = np.vstack([m + spread * rng.standard_normal((n_per_class, d)) for m in means])
    return x, np.repeat(np.arange(classes), n_per_class)


class TestLearnSubspace:
    def test_axis_data(self):
        x = np.array([[-2.0, 0], [-1, 0], [1, 0], [2, 0]])
        np.testing.assert_allclose(learn_subspace(x, 1).basis, [[1.0], [0.0]])

    def test_diagonal_pair(self):
        p = learn_subspace(np.array([[1.0, 1.0], [-1.0, -1.0]]), 1)
        np.testing.assert_allclose(p.basis, np.array([[1.0], [1.0]]) / np.sqrt(2))

    def test_matches_covariance_oracle(self, rng):
        x = rng.standard_normal((100, 10)) @ np.diag(np.linspace(3, 0.5, 10))
        p = learn_subspace(x, 3)
        assert np.linalg.norm(p.projector - covariance_pca_projector(x, 3)) < 1e-8

    def test_columns_ordered_by_variance(self, rng):
        x = rng.standard_normal((200, 6)) @ np.diag([0.5, 4.0, 1.0, 2.0, 0.1, 0.2])
        p = learn_subspace(x, 3)
        var = np.var((x - x.mean(0)) @ p.basis, axis=0)
        assert np.all(np.diff(var) < 0)

    def test_sample_order_invariance(self, rng):
        x = rng.standard_normal((50, 8))
        a = learn_subspace(x, 4)
        b = learn_subspace(x[rng.permutation(50)], 4)
        assert np.linalg.norm(a.projector - b.projector) < 1e-10

    def test_accepts_dataset_like(self, rng):
        class Holder:
            features = rng.standard_normal((20, 5))

        assert learn_subspace(Holder(), 2).basis.shape == (5, 2)

    def test_too_few_samples(self, rng):
        with pytest.raises(InsufficientSamples):
            learn_subspace(rng.standard_normal((3, 6)), 3)

    def test_degenerate(self):
        x = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]])
        with pytest.raises(DegenerateVariance):
            learn_subspace(x, 2)


class TestSubspaceAlignment:
    def test_identity(self, rng):
        p = random_subspace(8, 3, rng)
        np.testing.assert_allclose(subspace_alignment(p, p).m, np.eye(3), atol=1e-14)

    def test_orthogonal(self):
        np.testing.assert_allclose(subspace_alignment(line(0), line(np.pi / 2)).m, [[0.0]], atol=1e-16)

    def test_matches_least_squares(self, rng):
        s, t = random_pair(rng, 8, 3)
        m_ls, *_ = np.linalg.lstsq(s.basis, t.basis, rcond=None)
        np.testing.assert_allclose(subspace_alignment(s, t).m, m_ls, atol=1e-8)

    def test_optimal_under_perturbation(self, rng):
        s, t = random_pair(rng, 8, 3)
        m = subspace_alignment(s, t).m
        best = np.linalg.norm(s.basis @ m - t.basis) ** 2
        for _ in range(50):
            delta = rng.standard_normal((3, 3))
            delta *= 1e-3 / np.linalg.norm(delta)
            assert np.linalg.norm(s.basis @ (m + delta) - t.basis) ** 2 > best

    def test_spectral_norm_bounded(self, rng):
        for _ in range(20):
            s, t = random_pair(rng, 9, 4)
            assert np.linalg.norm(subspace_alignment(s, t).m, 2) <= 1 + 1e-8

    def test_map_must_be_square(self):
        with pytest.raises(DimensionMismatch):
            AlignmentMap(np.ones((2, 3)))


class TestGfk:
    def test_constant_geodesic(self, rng):
        p = random_subspace(10, 3, rng)
        np.testing.assert_allclose(gfk_kernel(p, p).g, p.projector, atol=1e-12)

    def test_needs_complement(self, rng):
        with pytest.raises(ComplementUnavailable):
            gfk_kernel(*random_pair(rng, 3, 2))

    def test_lines_in_plane_allowed(self):
        # 2K == D still leaves a complement of dimension K
        g = gfk_kernel(line(0), line(0.3)).g
        assert np.linalg.norm(g - geodesic_flow_trapezoid(line(0), line(0.3))) < 1e-6

    def test_lines_in_r3_match_quadrature(self):
        s = make_subspace([[1.0], [0.0], [0.0]])
        t = make_subspace([[np.cos(0.3)], [np.sin(0.3)], [0.0]])
        g = gfk_kernel(s, t).g
        assert np.linalg.norm(g - geodesic_flow_trapezoid(s, t)) < 1e-6
        # the flow stays in the x-y plane
        assert abs(g[2, 2]) < 1e-15

    def test_random_pair_matches_quadrature(self, rng):
        s, t = random_pair(rng, 10, 2)
        g = gfk_kernel(s, t).g
        np.testing.assert_allclose(g, g.T, atol=1e-10)
        assert np.linalg.eigvalsh(g).min() >= -1e-8
        assert np.linalg.norm(g - geodesic_flow_trapezoid(s, t)) < 1e-6

    def test_representative_invariance(self, rng):
        s, t = random_pair(rng, 12, 3)
        g = gfk_kernel(s, t).g
        s2 = Subspace(s.basis @ random_orthogonal(rng, 3))
        t2 = Subspace(t.basis @ random_orthogonal(rng, 3))
        assert np.linalg.norm(gfk_kernel(s2, t2).g - g) < 1e-8

    def test_small_angle_branch_is_continuous(self, rng):
        s = random_subspace(8, 2, rng)
        d = np.zeros((8, 2))
        d[:, 0] = np.eye(8)[:, 0] - s.basis @ s.basis[0]
        d /= np.linalg.norm(d)
        for eps in (5e-7, 2e-6, 1e-4):
            t = make_subspace(s.basis + eps * d)
            assert np.linalg.norm(gfk_kernel(s, t).g - geodesic_flow_trapezoid(s, t, steps=200)) < 1e-9

    def test_kernel_must_be_square(self):
        with pytest.raises(DimensionMismatch):
            GfkKernel(np.ones((3, 2)))


class TestClassifiers:
    def test_identity_metric_is_euclidean(self, rng):
        x, y = blobs(rng, 15, 5)
        xt = rng.standard_normal((20, 5)) * 3
        expected = brute_force_1nn(x, y, xt, np.eye(5))
        np.testing.assert_array_equal(gfk_classify(x, y, xt, GfkKernel(np.eye(5))), expected)
        np.testing.assert_array_equal(nearest_neighbor(x, y, xt), expected)

    def test_training_point_gets_its_label(self, rng):
        x = rng.standard_normal((10, 4))
        y = np.arange(10)
        m = rng.standard_normal((4, 4))
        g = GfkKernel(m @ m.T + np.eye(4))
        np.testing.assert_array_equal(gfk_classify(x, y, x[[3, 7]], g), [3, 7])

    def test_blobs_match_brute_force(self, rng):
        x, y = blobs(rng, 20, 10)
        xt, _ = blobs(rng, 10, 10)
        g = gfk_kernel(*random_pair(rng, 10, 2))
        np.testing.assert_array_equal(gfk_classify(x, y, xt, g), brute_force_1nn(x, y, xt, g.g))

    def test_scaled_identity(self, rng):
        x, y = blobs(rng, 10, 6, classes=3)
        xt = rng.standard_normal((30, 6)) * 3
        np.testing.assert_array_equal(gfk_classify(x, y, xt, GfkKernel(4.2 * np.eye(6))), nearest_neighbor(x, y, xt))

    def test_tie_goes_to_lowest_index(self):
        x = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert nearest_neighbor(x, np.array([5, 9]), np.zeros((1, 2)))[0] == 5

    def test_sa_shared_basis_is_pca_space_1nn(self, rng):
        x, y = blobs(rng, 15, 8)
        xt, _ = blobs(rng, 5, 8)
        p = learn_subspace(x, 3)
        expected = nearest_neighbor(x @ p.basis, y, xt @ p.basis)
        np.testing.assert_array_equal(sa_classify(x, y, xt, p, p), expected)

    def test_sa_full_rank_is_isometry(self, rng):
        x, y = blobs(rng, 15, 4)
        xt, _ = blobs(rng, 5, 4)
        s = make_subspace(random_orthogonal(rng, 4))
        np.testing.assert_array_equal(sa_classify(x, y, xt, s, s), nearest_neighbor(x, y, xt))

    def test_dimension_checks(self, rng):
        x, y = blobs(rng, 5, 4)
        with pytest.raises(DimensionMismatch):
            nearest_neighbor(x, y, np.zeros((2, 5)))
        with pytest.raises(DimensionMismatch):
            gfk_classify(x, y, x, GfkKernel(np.eye(5)))
        with pytest.raises(DimensionMismatch):
            nearest_neighbor(x, y[:-1], x)
