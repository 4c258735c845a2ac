"""Ground-truth solvers for small instances, used to validate everything else.

Two independent routes: exhaustive enumeration of support sets (combinatorial,
exact) and plain projected gradient descent on the simplex (iterative). They
share nothing with the production solvers beyond objective evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .gradproj import _kkt_from_grad
from .model import (Dataset, HullSolution, SolveStats, SolverConfig, as_dataset,
                    as_query, assemble_solution)
from .simplex import project_onto_simplex

__all__ = ["CrossValidationReport", "Instance", "cross_validate",
           "solve_enumerate", "solve_pgd"]

_ENUMERATE_MAX_N = 20


def _finish(alpha, data, q, cfg, stats, converged) -> HullSolution:
    resid = q - alpha @ data.data
    grad = -(data.data @ resid)
    kkt = _kkt_from_grad(alpha, grad, cfg.support_tol, cfg.kkt_tol)
    return assemble_solution(alpha, data, q, cfg, kkt, stats, converged)


def solve_enumerate(data, q, cfg: SolverConfig | None = None) -> HullSolution:
    """Exact solve by enumerating support sets (refuses n > 20).

    For every candidate support the unit-sum-constrained least-squares
    problem is solved through its linear optimality system; candidates with
    negative weights (beyond 1e-12) are discarded and the best survivor is
    returned. Supports larger than d + 1 are skipped: any attainable optimum
    has an affinely independent representation of at most d + 1 points, so
    enumerating those never misses the optimal value. Singular or badly
    solved systems are skipped; some other support attains the optimum.
    """
    cfg = cfg or SolverConfig()
    data = as_dataset(data)
    q = as_query(q, data.d)
    n, d = data.n, data.d
    if n > _ENUMERATE_MAX_N:
        raise ValueError(f"enumeration oracle limited to n <= {_ENUMERATE_MAX_N}, got {n}")
    arr = data.data
    gram = arr @ arr.T
    lin = arr @ q
    qq = float(q @ q)

    best_obj = np.inf
    best_alpha = None
    for size in range(1, min(n, d + 1) + 1):
        for subset in combinations(range(n), size):
            idx = np.asarray(subset, dtype=np.intp)
            system = np.empty((size + 1, size + 1))
            system[:size, :size] = gram[np.ix_(idx, idx)]
            system[:size, size] = 1.0
            system[size, :size] = 1.0
            system[size, size] = 0.0
            rhs = np.empty(size + 1)
            rhs[:size] = lin[idx]
            rhs[size] = 1.0
            try:
                sol = np.linalg.solve(system, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(sol)):
                continue
            if np.abs(system @ sol - rhs).max() > 1e-8 * (1.0 + np.abs(rhs).max()):
                continue
            weights = sol[:size]
            if weights.min() < -1e-12:
                continue
            obj = 0.5 * (qq - 2.0 * float(weights @ rhs[:size])
                         + float(weights @ system[:size, :size] @ weights))
            if obj < best_obj:
                best_obj = obj
                best_alpha = (idx, weights)

    idx, weights = best_alpha
    alpha = np.zeros(n)
    alpha[idx] = np.maximum(weights, 0.0)
    stats = SolveStats()
    stats.extras["enumerated"] = True
    return _finish(alpha, data, q, cfg, stats, converged=True)


def solve_pgd(data, q, steps: int = 10_000, step_size: float | None = None,
              cfg: SolverConfig | None = None) -> HullSolution:
    """Projected gradient descent from uniform weights; returns the best iterate.

    The default step size is ``1 / sigma_1(data)^2`` (the gradient's Lipschitz
    constant), which makes the objective trace nonincreasing; larger values
    are rejected. Stops early at a fixed point of the projection map, which
    is exactly an optimizer.
    """
    cfg = cfg or SolverConfig()
    data = as_dataset(data)
    q = as_query(q, data.d)
    arr = data.data
    lip = float(np.linalg.norm(arr, 2)) ** 2
    if step_size is None:
        step_size = 1.0 / lip if lip > 0 else 1.0
    elif step_size <= 0 or (lip > 0 and step_size > (1.0 + 1e-9) / lip):
        raise ValueError(f"step_size must lie in (0, 1/L] with L={lip:.3g}")

    alpha = np.full(data.n, 1.0 / data.n)
    best = alpha.copy()
    resid = q - alpha @ arr
    best_obj = 0.5 * float(resid @ resid)
    for _ in range(steps):
        grad = -(arr @ resid)
        nxt = project_onto_simplex(alpha - step_size * grad)
        move = float(np.abs(nxt - alpha).max())
        alpha = nxt
        resid = q - alpha @ arr
        obj = 0.5 * float(resid @ resid)
        if obj < best_obj:
            best_obj = obj
            best = alpha.copy()
        if move <= 1e-16:
            break
    stats = SolveStats()
    stats.extras["pgd_steps"] = steps
    return _finish(best, data, q, cfg, stats, converged=True)


@dataclass(frozen=True)
class Instance:
    """A dataset/query pair with a name for reporting and replay."""

    name: str
    data: Dataset
    query: np.ndarray
    seed: int | None = None


@dataclass
class CrossValidationReport:
    passed: bool
    instances: int
    max_x_deviation: float
    max_distance_deviation: float
    failures: list = field(default_factory=list)


def cross_validate(instances, solvers, tol_x: float = 1e-6, tol_dist: float = 1e-8,
                   replay_dir: str | None = None) -> CrossValidationReport:
    """Run every solver on every instance and compare answers pairwise.

    ``solvers`` maps a name to a callable ``(data, query) -> HullSolution``.
    Comparison looks at the combined point and the distance only, never at the
    weights (which need not be unique). Failing instances are serialized for
    replay when ``replay_dir`` is given.
    """
    from . import dataio  # local import: dataio pulls in no solver machinery

    instances = list(instances)
    max_x = 0.0
    max_dist = 0.0
    failures = []
    for inst in instances:
        results = {name: fn(inst.data, inst.query) for name, fn in solvers.items()}
        names = list(results)
        worst_x = 0.0
        worst_dist = 0.0
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                a, b = results[names[i]], results[names[j]]
                worst_x = max(worst_x, float(np.linalg.norm(a.x_star - b.x_star)))
                worst_dist = max(worst_dist, abs(a.distance - b.distance))
        max_x = max(max_x, worst_x)
        max_dist = max(max_dist, worst_dist)
        if worst_x > tol_x or worst_dist > tol_dist:
            entry = {"name": inst.name, "x_deviation": worst_x,
                     "distance_deviation": worst_dist, "replay": None}
            if replay_dir is not None:
                path = dataio.write_replay(inst, replay_dir)
                entry["replay"] = path
            failures.append(entry)
    return CrossValidationReport(
        passed=not failures,
        instances=len(instances),
        max_x_deviation=max_x,
        max_distance_deviation=max_dist,
        failures=failures,
    )
