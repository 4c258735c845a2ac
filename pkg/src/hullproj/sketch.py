"""Staged solver: grow the working set outward from the query, warm-starting.

Rows are sorted by distance to the query and split into ``eta`` pieces. The
gradient-projection solver runs on the accumulated prefix of pieces, each
stage starting from the previous stage's weights padded with zeros, so the
active set carried over keeps most of the new rows out of the expensive face
minimization. The final stage covers the whole dataset, making the staged
answer exact, not approximate.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .gradproj import _kkt_from_grad, _solve_raw
from .model import (HullSolution, SolveStats, SolverConfig, as_dataset, as_query,
                    assemble_solution)
from .simplex import is_feasible

__all__ = [
    "PartitionPlan",
    "make_partition",
    "solve_full",
    "solve_sketched",
    "sort_by_distance",
    "warm_start_extend",
]


@dataclass(frozen=True)
class PartitionPlan:
    """Distance-sorted row order plus piece boundaries into that order."""

    order: np.ndarray
    boundaries: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.boundaries)


def sort_by_distance(data, q) -> np.ndarray:
    """Permutation of row indices by ascending distance to ``q``.

    Ties keep their original relative order (stable sort); squared distances
    are used since the ordering is the same.
    """
    data = as_dataset(data)
    q = as_query(q, data.d)
    diff = data.data - q
    return np.argsort(np.einsum("ij,ij->i", diff, diff), kind="stable")


def make_partition(n: int, eta: int, order) -> PartitionPlan:
    """Split ``order`` into ``eta`` pieces, larger pieces first.

    The first ``n % eta`` pieces get ``ceil(n / eta)`` rows, the rest
    ``floor(n / eta)``; the earliest (closest) pieces are the largest.
    """
    if eta < 1:
        raise ValueError("eta must be at least 1")
    if eta > n:
        raise ValueError(f"eta={eta} exceeds the number of rows n={n}")
    order = np.asarray(order, dtype=np.intp).reshape(-1)
    if order.size != n or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError("order must be a permutation of 0..n-1")
    base, extra = divmod(n, eta)
    sizes = np.full(eta, base, dtype=np.intp)
    sizes[:extra] += 1
    boundaries = np.concatenate([[0], np.cumsum(sizes)])
    return PartitionPlan(order=order, boundaries=boundaries)


def warm_start_extend(alpha_prev, added: int) -> np.ndarray:
    """Pad a feasible weight vector with zeros for newly appended rows."""
    alpha_prev = np.asarray(alpha_prev, dtype=np.float64).reshape(-1)
    if added < 0:
        raise ValueError("added must be nonnegative")
    if not is_feasible(alpha_prev, 1e-9):
        raise ValueError("previous-stage weights are not feasible")
    return np.concatenate([alpha_prev, np.zeros(added)])


def _nearest_start(m: int) -> np.ndarray:
    alpha = np.zeros(m)
    alpha[0] = 1.0
    return alpha


def _hull_certified(x, rows, q, tol) -> bool:
    # Projection test: x is optimal for the enlarged hull iff no remaining row
    # lies on the far side of the supporting hyperplane at x.
    gap = (rows - x) @ (q - x)
    return float(gap.max(initial=-np.inf)) <= tol


def solve_sketched(data, q, cfg: SolverConfig | None = None) -> HullSolution:
    """Run the staged solve and report weights in original row order."""
    cfg = cfg or SolverConfig()
    data = as_dataset(data)
    q = as_query(q, data.d)
    order = sort_by_distance(data, q)
    plan = make_partition(data.n, cfg.eta, order)
    sorted_rows = data.data[order]

    stats = SolveStats()
    alpha = None
    used = 0
    for end in plan.boundaries[1:]:
        end = int(end)
        phi = sorted_rows[:end]
        if alpha is None:
            alpha = _nearest_start(end)
        else:
            alpha = warm_start_extend(alpha, end - used)
        used = end
        _, stage_ok = _solve_raw(phi, q, alpha, cfg, stats)
        if cfg.early_exit and stage_ok and end < data.n:
            x = alpha @ phi
            tol = cfg.kkt_tol * (1.0 + float((q - x) @ (q - x)))
            if _hull_certified(x, sorted_rows[end:], q, tol):
                stats.extras["early_exit_stage"] = len(stats.outer_iterations)
                break

    if used < data.n:
        alpha = warm_start_extend(alpha, data.n - used)
    alpha_orig = np.empty(data.n)
    alpha_orig[order] = alpha

    # Final report against the dataset in its original row order; this also
    # re-verifies optimality over rows an early exit skipped.
    resid = q - alpha_orig @ data.data
    grad = -(data.data @ resid)
    stats.matvec_count += 2
    kkt = _kkt_from_grad(alpha_orig, grad, cfg.support_tol, cfg.kkt_tol)
    return assemble_solution(alpha_orig, data, q, cfg, kkt, stats, kkt.converged)


def solve_full(data, q, cfg: SolverConfig | None = None) -> HullSolution:
    """One-shot gradient-projection solve started at the row nearest ``q``."""
    cfg = cfg or SolverConfig()
    data = as_dataset(data)
    q = as_query(q, data.d)
    alpha = np.zeros(data.n)
    alpha[int(sort_by_distance(data, q)[0])] = 1.0
    stats = SolveStats()
    kkt, converged = _solve_raw(data.data, q, alpha, cfg, stats)
    return assemble_solution(alpha, data, q, cfg, kkt, stats, converged)
