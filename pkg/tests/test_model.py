import numpy as np
import pytest
from numpy.testing import assert_allclose

from hullproj import Dataset, SolverConfig, gradient, objective

from conftest import fd_gradient, random_simplex


class TestDataset:
    def test_shape_and_immutability(self):
        ds = Dataset([[1.0, 2.0], [3.0, 4.0]])
        assert (ds.n, ds.d) == (2, 2)
        with pytest.raises(ValueError):
            ds.data[0, 0] = 9.0

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset([[1.0, np.nan]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((0, 3)))


class TestObjective:
    def test_segment_midpoint(self):
        # Residual is (0, 1) by symmetry.
        val = objective([0.5, 0.5], Dataset([[0, 0], [1, 0]]), [0.5, 1.0])
        assert val == pytest.approx(0.5)

    def test_zero_at_vertex(self):
        data = Dataset([[3.0, -1.0, 2.0], [0.0, 1.0, 5.0]])
        assert objective([1.0, 0.0], data, [3.0, -1.0, 2.0]) == 0.0

    def test_identity_case(self):
        # x = (0.5, 0.5), residual (1.5, -0.5); cross-checked by summing
        # squared components directly.
        data = np.eye(2)
        q = np.array([2.0, 0.0])
        alpha = np.array([0.5, 0.5])
        expected = 0.5 * sum((q - alpha @ data) ** 2)
        assert expected == pytest.approx(1.25)
        assert objective(alpha, Dataset(data), q) == pytest.approx(expected)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            objective([1.0], Dataset([[0.0, 1.0]]), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            objective([0.5, 0.5, 0.0], Dataset([[0.0], [1.0]]), [0.5])

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            objective([np.nan, 1.0], Dataset([[0.0], [1.0]]), [0.5])

    def test_translation_invariance(self, rng):
        # Shifting every row and the query together leaves the residual alone.
        for _ in range(20):
            n, d = int(rng.integers(2, 10)), int(rng.integers(1, 6))
            data = rng.standard_normal((n, d))
            q = rng.standard_normal(d)
            alpha = random_simplex(rng, n)
            t = 10.0 * rng.standard_normal(d)
            base = objective(alpha, Dataset(data), q)
            shifted = objective(alpha, Dataset(data + t), q + t)
            assert shifted == pytest.approx(base, rel=1e-10, abs=1e-12)


class TestGradient:
    def test_identity_case_matches_finite_differences(self):
        data = Dataset(np.eye(2))
        q = np.array([2.0, 0.0])
        alpha = np.array([0.5, 0.5])
        fd = fd_gradient(lambda a: objective(a, data, q), alpha)
        g = gradient(alpha, data, q)
        assert_allclose(g, [-1.5, 0.5], atol=1e-12)
        assert_allclose(g, fd, atol=1e-7)

    def test_zero_residual_gives_zero_gradient(self):
        data = Dataset([[0.0, 0.0], [1.0, 0.0]])
        g = gradient([0.5, 0.5], data, [0.5, 0.0])
        assert_allclose(g, 0.0, atol=1e-15)

    def test_segment_vertex(self):
        # g2 = row2 . (x - q) = (1,0) . (-0.5,-1) = -0.5
        g = gradient([1.0, 0.0], Dataset([[0, 0], [1, 0]]), [0.5, 1.0])
        assert_allclose(g, [0.0, -0.5], atol=1e-15)

    def test_random_instances_against_finite_differences(self, rng):
        worst = 0.0
        for _ in range(100):
            n, d = int(rng.integers(2, 21)), int(rng.integers(1, 9))
            data = Dataset(rng.standard_normal((n, d)))
            q = rng.standard_normal(d)
            alpha = random_simplex(rng, n)
            g = gradient(alpha, data, q)
            fd = fd_gradient(lambda a: objective(a, data, q), alpha)
            scale = max(1.0, float(np.abs(g).max()))
            worst = max(worst, float(np.abs(g - fd).max()) / scale)
        assert worst <= 1e-6


def test_simplex_membership_bounds_each_weight(rng):
    # Nonnegativity plus unit sum force every weight below one; the upper
    # bound never needs separate enforcement.
    for _ in range(200):
        alpha = random_simplex(rng, int(rng.integers(1, 30)))
        assert alpha.max() <= 1.0 + 1e-15


class TestSolverConfig:
    def test_defaults_resolve(self):
        cfg = SolverConfig()
        assert cfg.resolved_max_outer(7) == 70
        assert cfg.resolved_max_cg(30) == 30
        assert cfg.resolved_max_cg(500) == 50

    def test_interior_tol_scales_with_instance(self):
        cfg = SolverConfig()
        data = Dataset([[0.0, 0.0], [3.0, 4.0]])
        assert cfg.resolved_interior_tol(data, np.zeros(2)) == pytest.approx(5e-9)

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            SolverConfig(kkt_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(eta=0)
        with pytest.raises(ValueError):
            SolverConfig(solver="newton")
