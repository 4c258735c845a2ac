"""Gradient-projection solver on the unit simplex.

Each outer iteration computes the exact minimizer along the bent sum-zero
steepest-descent path (the Cauchy point, following the bound-constrained
scheme of Nocedal & Wright, sec. 16.7, adapted to the unit-sum constraint)
and then takes an inexact conjugate-gradient step within the face of
currently positive weights. Iterations stop when the first-order optimality
residuals fall below tolerance.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .model import (HullSolution, KktReport, SolveStats, SolverConfig,
                    as_dataset, as_query, as_weights, assemble_solution)
from .simplex import is_feasible

__all__ = ["cauchy_point", "kkt_check", "solve", "subspace_minimize"]

# Extra tight-tolerance rounds appended once the optimality test passes; they
# sharpen the answer on the identified face and drive near-interior queries
# down to the interior tolerance.
_POLISH_ROUNDS = 24
_POLISH_RTOL = 1e-12


def _require_feasible(alpha, feas_tol):
    if not is_feasible(alpha, feas_tol):
        raise ValueError("weight vector is not feasible (needs alpha >= 0, sum(alpha) = 1)")


def cauchy_point(alpha, data, q, feas_tol: float = 1e-12) -> np.ndarray:
    """Exact minimizer of the objective along the projected-gradient path.

    Returns a new feasible weight vector with objective no larger than at
    ``alpha``; coordinates whose bound is reached along the way end exactly
    at zero.
    """
    data = as_dataset(data)
    q = as_query(q, data.d)
    alpha = as_weights(alpha, data.n).copy()
    _require_feasible(alpha, feas_tol)
    arr = data.data
    resid = q - alpha @ arr
    grad = -(arr @ resid)
    kernels.cauchy_walk(alpha, grad, arr, resid, arr.sum(axis=0), grad @ arr)
    return alpha


def _projected_cg(basis, g_free, rtol, max_iters):
    """Inexact CG for ``min 0.5 d H d + g.d`` with ``H = basis basis^T``, sum(d)=0.

    Residuals are projected onto the sum-zero subspace each iteration; stops
    at ``max_iters`` or once the projected residual drops below ``rtol``
    times its entry value. (The unprojected gradient is the wrong yardstick:
    its constant component is the equality multiplier, which no sum-zero step
    can or should remove.) Returns (step, matvec_count).
    """
    m = g_free.shape[0]
    delta = np.zeros(m)
    r = g_free.copy()
    z = r - r.mean()
    rz = float(z @ z)
    target = rtol * np.sqrt(rz)
    matvecs = 0
    if rz == 0.0:
        return delta, matvecs
    p = -z
    for _ in range(max_iters):
        w = p @ basis
        hp = basis @ w
        matvecs += 2
        curv = float(p @ hp)
        if curv <= 1e-30 * max(1.0, rz):
            break
        step = rz / curv
        delta += step * p
        r += step * hp
        z = r - r.mean()
        rz_new = float(z @ z)
        if np.sqrt(rz_new) <= target:
            break
        p = -z + (rz_new / rz) * p
        rz = rz_new
    delta -= delta.mean()
    return delta, matvecs


def _subspace_step(alpha, arr, resid, max_cg, rtol, stats):
    """One inexact face minimization; mutates alpha/resid on accepted steps.

    The face is the set of strictly positive weights. The CG step is scaled
    back by an exact ratio test so no weight goes negative, and is accepted
    only on strict objective decrease. Returns True if alpha changed.
    """
    free = np.flatnonzero(alpha > 0.0)
    if free.size <= 1:
        return False
    stats.cumulative_free_variables += int(free.size)
    basis = arr[free]
    g_free = -(basis @ resid)
    stats.matvec_count += 1
    delta, matvecs = _projected_cg(basis, g_free, rtol, max_cg)
    stats.matvec_count += matvecs
    if not np.any(delta):
        return False
    neg = delta < 0.0
    t = 1.0
    if neg.any():
        t = min(1.0, float(np.min(alpha[free[neg]] / -delta[neg])))
    if t <= 0.0:
        return False
    step_x = (t * delta) @ basis
    stats.matvec_count += 1
    # Exact objective change of the quadratic, free of the cancellation that
    # comparing ||r - s||^2 against ||r||^2 suffers near the optimum.
    decrease = -float(resid @ step_x) + 0.5 * float(step_x @ step_x)
    if decrease >= 0.0:
        return False
    alpha[free] += t * delta
    np.maximum(alpha, 0.0, out=alpha)
    resid -= step_x
    return True


def subspace_minimize(alpha_c, data, q, max_cg_iters: int | None = None,
                      cg_rtol: float = 0.1, feas_tol: float = 1e-12) -> np.ndarray:
    """Approximate minimization over the face of positive weights.

    Solves the unit-sum-constrained least-squares problem restricted to
    ``{i : alpha_c[i] > 0}`` by projected CG (stopping early per ``cg_rtol``),
    then applies the exact ratio test and keeps the step only if it strictly
    decreases the objective. With a single positive weight there is nothing
    to do and ``alpha_c`` is returned unchanged.
    """
    data = as_dataset(data)
    q = as_query(q, data.d)
    alpha = as_weights(alpha_c, data.n).copy()
    _require_feasible(alpha, feas_tol)
    arr = data.data
    resid = q - alpha @ arr
    max_cg = max_cg_iters if max_cg_iters is not None else min(data.d, 50)
    _subspace_step(alpha, arr, resid, max_cg, cg_rtol, SolveStats())
    return alpha


def _kkt_from_grad(alpha, grad, support_tol, kkt_tol) -> KktReport:
    support = alpha > support_tol
    if not support.any():
        raise ValueError("empty support: no weight exceeds the support tolerance")
    lam = float(grad[support].mean())
    stationarity = float(np.abs(grad[support] - lam).max())
    off = ~support
    dual_feas = float(np.maximum(lam - grad[off], 0.0).max()) if off.any() else 0.0
    primal = abs(float(alpha.sum()) - 1.0) + max(-float(alpha.min()), 0.0)
    threshold = kkt_tol * (1.0 + float(np.abs(grad).max()))
    worst = max(stationarity, dual_feas, primal)
    return KktReport(
        lambda_hat=lam,
        stationarity_residual=stationarity,
        dual_feasibility_residual=dual_feas,
        primal_residual=primal,
        converged=worst <= threshold,
    )


def kkt_check(alpha, data, q, cfg: SolverConfig | None = None) -> KktReport:
    """First-order optimality report for a feasible weight vector."""
    cfg = cfg or SolverConfig()
    data = as_dataset(data)
    q = as_query(q, data.d)
    alpha = as_weights(alpha, data.n)
    _require_feasible(alpha, cfg.feas_tol)
    resid = q - alpha @ data.data
    grad = -(data.data @ resid)
    return _kkt_from_grad(alpha, grad, cfg.support_tol, cfg.kkt_tol)


def _solve_raw(arr, q, alpha, cfg, stats):
    """Inner loop on raw arrays; mutates ``alpha``; returns (kkt, converged).

    Appends one entry each to stats.outer_iterations / wall_times /
    stage_converged and extends stats.objective_trace.
    """
    t_start = time.perf_counter()
    n, d = arr.shape
    max_outer = cfg.resolved_max_outer(n)
    max_cg = cfg.resolved_max_cg(d)
    col_sums = arr.sum(axis=0)
    resid = q - alpha @ arr
    stats.matvec_count += 1
    trace = stats.objective_trace
    trace.append(0.5 * float(resid @ resid))

    outer = 0
    exit_reason = "outer_cap"
    stalled = 0
    while outer < max_outer:
        grad = -(arr @ resid)
        stats.matvec_count += 1
        kkt = _kkt_from_grad(alpha, grad, cfg.support_tol, cfg.kkt_tol)
        if cfg.debug:
            assert is_feasible(alpha, 10 * cfg.feas_tol), "iterate left the simplex"
        if kkt.converged:
            exit_reason = "kkt"
            break
        f_here = 0.5 * float(resid @ resid)
        outer += 1
        stats.cauchy_bends += kernels.cauchy_walk(alpha, grad, arr, resid,
                                                  col_sums, grad @ arr)
        stats.matvec_count += 1
        trace.append(0.5 * float(resid @ resid))
        changed = _subspace_step(alpha, arr, resid, max_cg, 0.1, stats)
        f_new = 0.5 * float(resid @ resid)
        trace.append(f_new)
        if cfg.debug:
            assert f_new <= f_here + 1e-12, "objective increased across an iteration"
        # Progress at round-off level for several rounds in a row means the
        # loose iterations are done; hand over to the tight polish phase.
        if (not changed and f_new >= f_here) or f_here - f_new <= 1e-15 * (1.0 + f_here):
            stalled += 1
            if not changed or stalled >= 3:
                exit_reason = "stall"
                break
        else:
            stalled = 0
        if outer % 64 == 0:
            resid[:] = q - alpha @ arr
            stats.matvec_count += 1

    if exit_reason in ("kkt", "stall"):
        outer += _polish(arr, q, alpha, resid, cfg, stats, max_cg, col_sums)

    # Final consistency: recompute the residual exactly and re-evaluate.
    resid = q - alpha @ arr
    grad = -(arr @ resid)
    stats.matvec_count += 2
    kkt = _kkt_from_grad(alpha, grad, cfg.support_tol, cfg.kkt_tol)
    converged = kkt.converged
    stats.outer_iterations.append(outer)
    stats.wall_times.append(time.perf_counter() - t_start)
    stats.stage_converged.append(converged)
    stats.extras.setdefault("exit_reasons", []).append(exit_reason)
    stats.extras.setdefault("stage_objectives", []).append(0.5 * float(resid @ resid))
    return kkt, converged


def _polish(arr, q, alpha, resid, cfg, stats, max_cg, col_sums):
    """Sharpen the solution with tight CG rounds; keep the best iterate seen.

    The optimality test at ``kkt_tol`` leaves more slack in the weights than
    downstream cross-solver comparisons (and the interior-point test) can
    absorb, so the reduced problem is re-solved nearly exactly once the
    loose iterations are done. A round's Cauchy step may transiently recruit
    marginal coordinates and bump the optimality residual; rounds continue
    through that, and the iterate with the smallest residual is restored at
    the end, so polishing never returns worse than its entry point. Returns
    the number of rounds taken.
    """
    trace = stats.objective_trace
    d = arr.shape[1]
    resid[:] = q - alpha @ arr
    grad = -(arr @ resid)
    stats.matvec_count += 2
    kkt = _kkt_from_grad(alpha, grad, cfg.support_tol, cfg.kkt_tol)
    best_residual = kkt.max_residual
    best_alpha = alpha.copy()
    best_resid = resid.copy()
    # The curvature operator has rank at most d, so CG needs no more
    # iterations than that however large the working face is.
    cap = max(4 * max_cg, 4 * (d + 1))
    rounds = 0
    failed = 0
    for _ in range(_POLISH_ROUNDS):
        threshold = cfg.kkt_tol * (1.0 + float(np.abs(grad).max()))
        f_here = 0.5 * float(resid @ resid)
        if kkt.max_residual <= 1e-3 * threshold or f_here <= 1e-60:
            break
        rounds += 1
        stats.cauchy_bends += kernels.cauchy_walk(alpha, grad, arr, resid,
                                                  col_sums, grad @ arr)
        stats.matvec_count += 1
        f_mid = 0.5 * float(resid @ resid)
        _subspace_step(alpha, arr, resid, cap, _POLISH_RTOL, stats)
        f_new = 0.5 * float(resid @ resid)
        resid[:] = q - alpha @ arr
        grad = -(arr @ resid)
        stats.matvec_count += 2
        kkt = _kkt_from_grad(alpha, grad, cfg.support_tol, cfg.kkt_tol)
        if kkt.max_residual < best_residual:
            best_residual = kkt.max_residual
            best_alpha[:] = alpha
            best_resid[:] = resid
            failed = 0
            # Objective values are recorded for improving rounds only; the
            # objective itself decreases across every round, so the recorded
            # subsequence stays nonincreasing.
            trace.append(f_mid)
            trace.append(f_new)
        else:
            failed += 1
            if failed >= 2:
                break
    alpha[:] = best_alpha
    resid[:] = best_resid
    return rounds


def solve(phi, q, alpha0, cfg: SolverConfig | None = None) -> HullSolution:
    """Run gradient projection on dataset ``phi`` from the start point ``alpha0``.

    The result reports per-iteration statistics and an explicit convergence
    flag; hitting the iteration cap yields ``converged=False`` rather than an
    exception so staged callers can continue from the best iterate.
    """
    cfg = cfg or SolverConfig()
    phi = as_dataset(phi)
    q = as_query(q, phi.d)
    alpha = as_weights(alpha0, phi.n).copy()
    _require_feasible(alpha, cfg.feas_tol)
    stats = SolveStats()
    kkt, converged = _solve_raw(phi.data, q, alpha, cfg, stats)
    return assemble_solution(alpha, phi, q, cfg, kkt, stats, converged)
