import numpy as np
import pytest
from numpy.testing import assert_allclose

from hullproj import (Dataset, SolverConfig, cauchy_point, kkt_check, objective,
                      solve, solve_enumerate, subspace_minimize)
from hullproj.simplex import is_feasible

from conftest import random_instance

SEGMENT = Dataset([[0.0, 0.0], [1.0, 0.0]])
SEGMENT_Q = np.array([0.5, 1.0])
TRIANGLE = Dataset([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
TRIANGLE_Q = np.array([2.0, 2.0])


def simulate_cauchy_path(alpha, data, q, h=1e-5):
    """Brute-force reference: follow the bent path in tiny explicit steps.

    The direction comes from the entry gradient re-centred over coordinates
    not yet pinned at zero; a step that would overshoot a bound lands exactly
    on it and pins that coordinate. Stops when the objective stops improving.
    """
    arr = np.asarray(data.data if isinstance(data, Dataset) else data, dtype=float)
    alpha = np.asarray(alpha, dtype=float).copy()
    g = arr @ (alpha @ arr - q)
    free = np.ones(alpha.size, dtype=bool)

    def f_at(a):
        r = q - a @ arr
        return 0.5 * float(r @ r)

    f = f_at(alpha)
    for _ in range(2_000_000):
        p = np.zeros_like(alpha)
        p[free] = g[free].mean() - g[free]
        if np.abs(p).max() < 1e-14:
            break
        step = h
        hitting = None
        shrink = free & (p < 0)
        if shrink.any():
            room = alpha[shrink] / -p[shrink]
            j = np.flatnonzero(shrink)[int(np.argmin(room))]
            if room.min() <= step:
                step = float(room.min())
                hitting = j
        trial = np.maximum(alpha + step * p, 0.0)
        f_trial = f_at(trial)
        if f_trial > f + 1e-15:
            break
        alpha, f = trial, f_trial
        if hitting is not None:
            alpha[hitting] = 0.0
            free[hitting] = False
            if free.sum() <= 1:
                break
    return alpha


class TestCauchyPoint:
    def test_segment_interior_minimizer(self):
        # direction (-1/4, 1/4), 1-D minimizer t*=2 before the breakpoint at 4
        out = cauchy_point([1.0, 0.0], SEGMENT, SEGMENT_Q)
        assert_allclose(out, [0.5, 0.5], atol=1e-12)
        assert objective([1.0, 0.0], SEGMENT, SEGMENT_Q) == pytest.approx(0.625)
        assert objective(out, SEGMENT, SEGMENT_Q) == pytest.approx(0.5)

    def test_stationary_point_unmoved(self):
        out = cauchy_point([0.5, 0.5], SEGMENT, SEGMENT_Q)
        assert_allclose(out, [0.5, 0.5], atol=1e-15)

    def test_square_corner_walk_lands_on_top_edge(self):
        corners = Dataset([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        q = np.array([0.5, 2.0])
        start = np.array([1.0, 0.0, 0.0, 0.0])
        out = cauchy_point(start, corners, q)
        support = np.flatnonzero(out > 1e-12)
        assert list(support) == [2, 3]
        reference = simulate_cauchy_path(start, corners, q)
        assert_allclose(out, reference, atol=2e-4)

    def test_matches_tiny_step_simulation(self, rng):
        for _ in range(15):
            data, q = random_instance(rng, n_hi=8, d_hi=4)
            alpha = np.zeros(data.n)
            alpha[0] = 1.0
            out = cauchy_point(alpha, data, q)
            ref = simulate_cauchy_path(alpha, data, q, h=1e-5)
            assert objective(out, data, q) <= objective(ref, data, q) + 1e-6
            assert_allclose(out, ref, atol=5e-3)

    def test_rejects_infeasible_start(self):
        with pytest.raises(ValueError, match="not feasible"):
            cauchy_point([0.7, 0.7], SEGMENT, SEGMENT_Q)

    def test_never_increases_objective(self, rng):
        for _ in range(100):
            data, q = random_instance(rng, n_hi=20, d_hi=6)
            alpha = rng.dirichlet(np.ones(data.n))
            out = cauchy_point(alpha, data, q)
            assert is_feasible(out, 1e-12)
            assert objective(out, data, q) <= objective(alpha, data, q) + 1e-12


class TestSubspaceMinimize:
    def test_single_free_coordinate_is_noop(self):
        out = subspace_minimize([1.0, 0.0], SEGMENT, SEGMENT_Q)
        assert_allclose(out, [1.0, 0.0])

    def test_optimal_point_unchanged(self):
        out = subspace_minimize([0.5, 0.5], SEGMENT, SEGMENT_Q)
        assert_allclose(out, [0.5, 0.5], atol=1e-15)

    def test_triangle_ratio_test_clips_at_boundary(self):
        # The unconstrained face minimizer is (-1, 1, 1); the ratio test stops
        # at t = 1/6, landing exactly on (0, 0.5, 0.5).
        out = subspace_minimize([0.2, 0.4, 0.4], TRIANGLE, TRIANGLE_Q)
        assert_allclose(out, [0.0, 0.5, 0.5], atol=1e-12)

    def test_strict_decrease_or_unchanged(self, rng):
        for _ in range(50):
            data, q = random_instance(rng, n_hi=15, d_hi=5)
            alpha = rng.dirichlet(np.ones(data.n))
            out = subspace_minimize(alpha, data, q)
            assert is_feasible(out, 1e-12)
            f_in, f_out = objective(alpha, data, q), objective(out, data, q)
            if not np.array_equal(out, alpha):
                assert f_out < f_in


class TestKktCheck:
    def test_segment_optimum_converges(self):
        report = kkt_check([0.5, 0.5], SEGMENT, SEGMENT_Q)
        assert report.converged
        assert report.lambda_hat == pytest.approx(0.0, abs=1e-15)
        assert report.max_residual == pytest.approx(0.0, abs=1e-15)

    def test_segment_vertex_fails_dual_feasibility(self):
        report = kkt_check([1.0, 0.0], SEGMENT, SEGMENT_Q)
        assert not report.converged
        assert report.lambda_hat == pytest.approx(0.0, abs=1e-15)
        assert report.dual_feasibility_residual == pytest.approx(0.5)

    def test_interior_optimum(self):
        data = Dataset([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
        report = kkt_check([0.25, 0.25, 0.5], data, np.array([0.5, 1.0]))
        assert report.converged
        assert report.max_residual <= 1e-12

    def test_empty_support_rejected(self):
        cfg = SolverConfig(support_tol=2.0)
        with pytest.raises(ValueError, match="empty support"):
            kkt_check([0.5, 0.5], SEGMENT, SEGMENT_Q, cfg)


class TestSolve:
    def test_segment_one_iteration(self):
        sol = solve(SEGMENT, SEGMENT_Q, [1.0, 0.0])
        assert_allclose(sol.x_star, [0.5, 0.0], atol=1e-12)
        assert sol.distance == pytest.approx(1.0)
        assert sol.converged
        assert sol.stats.outer_iterations == [1]

    def test_triangle_against_enumeration(self):
        sol = solve(TRIANGLE, TRIANGLE_Q, [1.0, 0.0, 0.0])
        assert_allclose(sol.x_star, [1.0, 1.0], atol=1e-10)
        assert_allclose(sol.alpha, [0.0, 0.5, 0.5], atol=1e-10)
        assert sol.distance == pytest.approx(np.sqrt(2.0))
        oracle = solve_enumerate(TRIANGLE, TRIANGLE_Q)
        assert_allclose(sol.x_star, oracle.x_star, atol=1e-10)

    def test_query_on_dataset_row(self):
        data = Dataset([[0.0, 1.0], [4.0, 5.0], [-2.0, 7.0]])
        sol = solve(data, [4.0, 5.0], [0.0, 1.0, 0.0])
        assert sol.distance <= 1e-12
        assert sol.interior_flag
        assert sol.converged

    def test_rejects_infeasible_start(self):
        with pytest.raises(ValueError, match="not feasible"):
            solve(SEGMENT, SEGMENT_Q, [0.9, 0.3])

    def test_iteration_cap_reports_not_converged(self):
        rng = np.random.default_rng(5)
        data = Dataset(rng.standard_normal((40, 6)))
        q = 2.0 * rng.standard_normal(6)
        alpha0 = np.zeros(40)
        alpha0[0] = 1.0
        sol = solve(data, q, alpha0, SolverConfig(max_outer_iters=1))
        assert not sol.converged
        assert sol.stats.outer_iterations == [1]

    def test_monotone_trace_and_feasible_iterates(self, rng):
        cfg = SolverConfig(debug=True)
        for _ in range(25):
            data, q = random_instance(rng, n_hi=30, d_hi=6)
            alpha0 = np.zeros(data.n)
            alpha0[0] = 1.0
            sol = solve(data, q, alpha0, cfg)
            trace = np.asarray(sol.stats.objective_trace)
            assert np.all(np.diff(trace) <= 1e-12)
            assert sol.converged

    def test_converged_matches_oracle_distance(self, rng):
        for _ in range(30):
            data, q = random_instance(rng, n_hi=10, d_hi=4)
            alpha0 = np.zeros(data.n)
            alpha0[0] = 1.0
            sol = solve(data, q, alpha0)
            assert sol.converged
            oracle = solve_enumerate(data, q)
            assert sol.distance <= oracle.distance + 1e-6
            assert np.linalg.norm(sol.x_star - oracle.x_star) <= 1e-6

    def test_solution_self_consistency(self, rng):
        # combined point reconstructs from the weights, and the reported
        # objective is exactly half the squared distance
        for _ in range(20):
            data, q = random_instance(rng, n_hi=25, d_hi=6)
            alpha0 = np.zeros(data.n)
            alpha0[0] = 1.0
            sol = solve(data, q, alpha0)
            recon = np.linalg.norm(sol.x_star - sol.alpha @ data.data)
            assert recon <= 1e-12 * max(1.0, np.linalg.norm(sol.x_star))
            assert abs(sol.distance ** 2 - 2.0 * sol.objective) \
                <= 1e-10 * max(1.0, sol.distance ** 2)
            assert np.array_equal(sol.support, np.flatnonzero(sol.alpha > 1e-10))

    def test_single_row_and_single_column(self):
        one_row = solve(Dataset([[2.0, 1.0]]), [4.0, 1.0], [1.0])
        assert one_row.converged
        assert_allclose(one_row.x_star, [2.0, 1.0])
        assert one_row.distance == pytest.approx(2.0)
        line = solve(Dataset([[0.0], [1.0], [3.0]]), [2.0], [1.0, 0.0, 0.0])
        assert line.converged
        assert_allclose(line.x_star, [2.0], atol=1e-10)
        assert line.interior_flag

    def test_concurrent_solves_share_dataset(self, rng):
        # immutable inputs: concurrent solves must reproduce the sequential
        # answers exactly
        from concurrent.futures import ThreadPoolExecutor
        data = Dataset(rng.standard_normal((120, 6)))
        queries = [1.5 * rng.standard_normal(6) for _ in range(16)]
        alpha0 = np.zeros(data.n)
        alpha0[0] = 1.0
        sequential = [solve(data, q, alpha0) for q in queries]
        with ThreadPoolExecutor(max_workers=8) as pool:
            parallel = list(pool.map(lambda q: solve(data, q, alpha0), queries))
        for a, b in zip(sequential, parallel):
            assert np.array_equal(a.alpha, b.alpha)
            assert a.distance == b.distance
