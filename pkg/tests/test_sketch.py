import numpy as np
import pytest
from numpy.testing import assert_allclose

from hullproj import (Dataset, SolverConfig, make_partition, solve_full,
                      solve_sketched, sort_by_distance, warm_start_extend)
from hullproj.dataio import generate
from hullproj.simplex import is_feasible


class TestSortByDistance:
    def test_orders_by_distance(self):
        data = Dataset([[3.0], [1.0], [2.0]])
        assert list(sort_by_distance(data, [0.0])) == [1, 2, 0]

    def test_stable_on_ties(self):
        data = Dataset([[1.0, 0.0], [-1.0, 0.0], [0.5, 0.0]])
        order = list(sort_by_distance(data, [0.0, 0.0]))
        assert order == [2, 0, 1]  # the two unit-distance rows keep file order

    def test_single_row(self):
        assert list(sort_by_distance(Dataset([[5.0, 5.0]]), [0.0, 0.0])) == [0]


class TestMakePartition:
    def test_ceiling_first(self):
        plan = make_partition(5, 2, np.arange(5))
        assert list(plan.sizes) == [3, 2]

    def test_even_split(self):
        plan = make_partition(6, 3, np.arange(6))
        assert list(plan.sizes) == [2, 2, 2]

    def test_single_piece(self):
        plan = make_partition(4, 1, np.arange(4))
        assert list(plan.sizes) == [4]
        assert list(plan.boundaries) == [0, 4]

    def test_pieces_cover_disjointly(self):
        plan = make_partition(11, 4, np.arange(11))
        assert plan.boundaries[0] == 0 and plan.boundaries[-1] == 11
        assert np.all(np.diff(plan.boundaries) > 0)

    @pytest.mark.parametrize("eta", [0, -1, 7])
    def test_invalid_eta(self, eta):
        with pytest.raises(ValueError):
            make_partition(6, eta, np.arange(6))

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError, match="permutation"):
            make_partition(3, 1, [0, 0, 2])


class TestWarmStartExtend:
    def test_appends_zeros(self):
        assert_allclose(warm_start_extend([0.5, 0.5], 3), [0.5, 0.5, 0, 0, 0])

    def test_extend_by_zero(self):
        assert_allclose(warm_start_extend([1.0], 0), [1.0])

    def test_feasibility_preserved(self, rng):
        for _ in range(20):
            alpha = rng.dirichlet(np.ones(int(rng.integers(1, 9))))
            out = warm_start_extend(alpha, int(rng.integers(0, 5)))
            assert is_feasible(out, 1e-9)

    def test_rejects_infeasible(self):
        with pytest.raises(ValueError, match="not feasible"):
            warm_start_extend([0.5, 0.2], 1)


class TestSolveSketched:
    def test_eta_one_matches_full_solve(self, rng):
        for _ in range(10):
            n, d = int(rng.integers(4, 30)), int(rng.integers(2, 6))
            data = Dataset(rng.standard_normal((n, d)))
            q = 1.5 * rng.standard_normal(d)
            sk = solve_sketched(data, q, SolverConfig(eta=1))
            fu = solve_full(data, q)
            assert np.linalg.norm(sk.x_star - fu.x_star) <= 1e-10
            # same iterate sequence: identical objective values stage by stage
            assert_allclose(sk.stats.objective_trace, fu.stats.objective_trace,
                            rtol=1e-12, atol=1e-12)
            assert sk.stats.outer_iterations == fu.stats.outer_iterations

    def test_square_query_above_top_edge(self):
        data = generate("square", 420, 2, seed=3)
        sol = solve_sketched(data, [0.5, 2.0], SolverConfig(eta=4))
        assert sol.converged
        on_top = np.isclose(data.data[:, 1], 1.0)
        assert np.all(on_top[sol.support])
        assert_allclose(sol.x_star, [0.5, 1.0], atol=1e-9)

    def test_eta_sweep_agrees(self, rng):
        data = Dataset(rng.standard_normal((200, 10)))
        q = 1.5 * rng.standard_normal(10)
        baseline = solve_sketched(data, q, SolverConfig(eta=1))
        for eta in (2, 8):
            sol = solve_sketched(data, q, SolverConfig(eta=eta))
            assert np.linalg.norm(sol.x_star - baseline.x_star) <= 1e-6

    def test_stage_objectives_monotone(self, rng):
        # Each stage enlarges the hull, so optimal stage values cannot rise.
        for _ in range(10):
            n = int(rng.integers(20, 80))
            data = Dataset(rng.standard_normal((n, 4)))
            q = 2.0 * rng.standard_normal(4)
            sol = solve_sketched(data, q, SolverConfig(eta=5))
            stage_values = sol.stats.extras["stage_objectives"]
            assert len(stage_values) == 5
            assert np.all(np.diff(stage_values) <= 1e-10)

    def test_support_indices_refer_to_original_rows(self, rng):
        data = Dataset(rng.standard_normal((40, 3)))
        q = 1.5 * rng.standard_normal(3)
        sol = solve_sketched(data, q, SolverConfig(eta=4))
        assert_allclose(sol.alpha @ data.data, sol.x_star, atol=1e-12)
        assert np.all(np.diff(sol.support) > 0)
        recombined = sum(sol.alpha[i] * data.data[i] for i in range(data.n))
        assert_allclose(recombined, sol.x_star, atol=1e-12)

    def test_warm_start_feasible_at_each_stage(self, rng):
        data = Dataset(rng.standard_normal((50, 4)))
        q = 1.5 * rng.standard_normal(4)
        sol = solve_sketched(data, q, SolverConfig(eta=7, debug=True))
        assert sol.converged

    def test_eta_exceeding_rows_rejected(self):
        data = Dataset(np.eye(3))
        with pytest.raises(ValueError, match="eta"):
            solve_sketched(data, [1.0, 1.0, 1.0], SolverConfig(eta=5))

    def test_eta_equal_rows(self, rng):
        data = Dataset(rng.standard_normal((12, 3)))
        q = 1.5 * rng.standard_normal(3)
        sol = solve_sketched(data, q, SolverConfig(eta=12))
        ref = solve_full(data, q)
        assert np.linalg.norm(sol.x_star - ref.x_star) <= 1e-8

    def test_early_exit_matches_exact_answer(self, rng):
        # Opt-in screening: once a stage's optimum is certified against every
        # remaining row, later stages are skipped.
        data = generate("square", 400, 2, seed=5)
        q = np.array([0.5, 3.0])
        lazy = solve_sketched(data, q, SolverConfig(eta=8, early_exit=True))
        exact = solve_full(data, q)
        assert np.linalg.norm(lazy.x_star - exact.x_star) <= 1e-8
        assert lazy.converged
        assert "early_exit_stage" in lazy.stats.extras
        assert len(lazy.stats.outer_iterations) < 8
