"""Dual-form solver driven through an SVD of the dataset.

The Lagrangian couples the half-squared residual with one multiplier for the
unit-sum constraint (``lambda1``), one vector of multipliers for the lower
bounds (``lambda2``) and one for the upper bounds (``lambda3``). For fixed
multipliers the inner minimization over the weights has the closed form

    alpha_d = q V S^-1 U^T + (lambda1 * 1 + lambda2 - lambda3)^T U S^-2 U^T

with ``data = U S V^T``; inverses are taken on retained singular values only,
so rank-deficient datasets get the minimal-norm reading (and are flagged).
The dual function is maximized by projected gradient ascent with the same
Cauchy-point-plus-subspace structure as the primal solver, over multipliers
kept nonnegative (``free_lambda1`` lifts the sign constraint on the equality
multiplier, which strong duality generally requires).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .gradproj import _kkt_from_grad
from .model import (HullSolution, SolveStats, SolverConfig, as_dataset, as_query,
                    assemble_solution)
from .simplex import project_onto_simplex

__all__ = [
    "DualMultipliers",
    "SvdFactors",
    "dual_gradient",
    "dual_objective",
    "factorize",
    "recover_alpha",
    "solve_dual",
]


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD of the dataset truncated at ``rank`` retained values."""

    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray
    rank: int

    @property
    def v(self) -> np.ndarray:
        return self.vt.T


@dataclass
class DualMultipliers:
    """Multipliers (scalar for the unit sum, one vector per bound side)."""

    lambda1: float
    lambda2: np.ndarray
    lambda3: np.ndarray

    def validate(self, n: int, nonneg_lambda1: bool = True) -> None:
        self.lambda2 = np.asarray(self.lambda2, dtype=np.float64).reshape(-1)
        self.lambda3 = np.asarray(self.lambda3, dtype=np.float64).reshape(-1)
        if self.lambda2.size != n or self.lambda3.size != n:
            raise ValueError("multiplier vectors must have one entry per dataset row")
        if self.lambda2.min(initial=0.0) < 0 or self.lambda3.min(initial=0.0) < 0:
            raise ValueError("bound multipliers must be nonnegative")
        if nonneg_lambda1 and self.lambda1 < 0:
            raise ValueError("unit-sum multiplier must be nonnegative here")


def factorize(data, rank_tol: float | None = None) -> SvdFactors:
    """Thin SVD with small singular values dropped.

    The default cutoff is ``max(n, d) * eps * sigma_1``, the usual numerical
    rank threshold.
    """
    data = as_dataset(data)
    u, s, vt = np.linalg.svd(data.data, full_matrices=False)
    if rank_tol is None:
        rank_tol = max(data.n, data.d) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > rank_tol))
    return SvdFactors(u=np.ascontiguousarray(u[:, :rank]),
                      singular_values=s[:rank].copy(),
                      vt=np.ascontiguousarray(vt[:rank]),
                      rank=rank)


def _combined_multiplier(lam1: float, lam2, lam3) -> np.ndarray:
    return lam1 + np.asarray(lam2, dtype=np.float64) - np.asarray(lam3, dtype=np.float64)


def _alpha_from_y(y, svd: SvdFactors, base: np.ndarray) -> np.ndarray:
    t = (svd.u.T @ y) / svd.singular_values**2
    return base + svd.u @ t


def _lsq_base(svd: SvdFactors, q) -> np.ndarray:
    # q V S^-1 U^T: minimal-norm weights whose combination reproduces q's
    # row-space component.
    return ((q @ svd.v) / svd.singular_values) @ svd.u.T


def recover_alpha(lam: DualMultipliers, svd: SvdFactors, q) -> np.ndarray:
    """Weights minimizing the Lagrangian at the given multipliers.

    Not primal-feasible in general; at the dual optimum it coincides with the
    optimal weights.
    """
    if svd.rank == 0:
        raise ValueError("zero-rank dataset: dual recovery undefined")
    n = svd.u.shape[0]
    q = as_query(q, svd.vt.shape[1])
    lam.validate(n, nonneg_lambda1=False)
    y = _combined_multiplier(lam.lambda1, lam.lambda2, lam.lambda3)
    return _alpha_from_y(y, svd, _lsq_base(svd, q))


def _lagrangian(alpha, arr, q, lam1, lam2, lam3) -> float:
    r = q - alpha @ arr
    return (0.5 * float(r @ r)
            - (float(alpha.sum()) - 1.0) * lam1
            - float(alpha @ lam2)
            - float((1.0 - alpha) @ lam3))


def dual_objective(lam: DualMultipliers, svd: SvdFactors, data, q) -> float:
    """Dual function value: the Lagrangian at its inner minimizer."""
    data = as_dataset(data)
    q = as_query(q, data.d)
    alpha = recover_alpha(lam, svd, q)
    return _lagrangian(alpha, data.data, q, lam.lambda1, lam.lambda2, lam.lambda3)


def dual_gradient(lam: DualMultipliers, svd: SvdFactors, data, q) -> DualMultipliers:
    """Gradient of the dual function, by the envelope property.

    Components: ``1 - sum(alpha_d)`` for the unit-sum multiplier, ``-alpha_d``
    for the lower-bound block and ``alpha_d - 1`` for the upper-bound block.
    """
    alpha = recover_alpha(lam, svd, q)
    return DualMultipliers(lambda1=1.0 - float(alpha.sum()),
                           lambda2=-alpha,
                           lambda3=alpha - 1.0)


# --- flat-vector machinery for the ascent loop ------------------------------
# Layout: index 0 = lambda1, 1..n = lambda2, n+1..2n = lambda3.

def _grad_flat(alpha) -> np.ndarray:
    return np.concatenate(([1.0 - float(alpha.sum())], -alpha, alpha - 1.0))


def _dy(p, n) -> np.ndarray:
    return p[0] + p[1:n + 1] - p[n + 1:]


def _g_flat(lam_flat, alpha, arr, q, n) -> float:
    return _lagrangian(alpha, arr, q, lam_flat[0], lam_flat[1:n + 1], lam_flat[n + 1:])


def _dual_cauchy(lam, alpha, svd, base, arr, q, bounded, n):
    """Exact maximizer along the bent nonnegative-orthant ascent path.

    Direction components come from the gradient at entry; a component is
    frozen when it hits zero (lowest index first on ties). Returns updated
    (lam, alpha).
    """
    g0 = _grad_flat(alpha)
    p = g0.copy()
    p[bounded & (lam <= 0.0) & (p < 0.0)] = 0.0
    s2 = svd.singular_values**2
    eps = np.finfo(np.float64).eps
    while True:
        if not np.any(p):
            break
        g_now = _grad_flat(alpha)
        slope = float(g_now @ p)
        # Slope at dot-product round-off level means a stationary segment.
        if slope <= 64.0 * eps * float(np.linalg.norm(g_now)) * float(np.linalg.norm(p)):
            break
        dy = _dy(p, n)
        t_u = svd.u.T @ dy
        curv = float((t_u * t_u / s2).sum())
        v = svd.u @ (t_u / s2)
        candidates = bounded & (p < 0.0)
        if candidates.any():
            ratios = np.full(lam.shape, np.inf)
            np.divide(lam, -p, out=ratios, where=candidates)
            j = int(np.argmin(ratios))
            t_bound = float(max(ratios[j], 0.0))
        else:
            j, t_bound = -1, np.inf
        t_star = slope / curv if curv > 0.0 else np.inf
        if np.isfinite(t_star) and t_star <= t_bound:
            lam += t_star * p
            np.maximum(lam, 0.0, out=lam, where=bounded)
            alpha = alpha + t_star * v
            break
        if not np.isfinite(t_bound):
            break
        if t_bound > 0.0:
            lam += t_bound * p
            np.maximum(lam, 0.0, out=lam, where=bounded)
            alpha = alpha + t_bound * v
        lam[j] = 0.0
        p[j] = 0.0
    # Recover exactly to shed path-tracking round-off.
    alpha = _alpha_from_y(_dy(lam, n), svd, base)
    return lam, alpha


def _dual_subspace(lam, alpha, svd, base, arr, q, bounded, n, max_cg, rtol, stats):
    """Inexact CG ascent on multipliers away from their bound."""
    free = (~bounded) | (lam > 0.0)
    m = int(free.sum())
    if m == 0:
        return lam, alpha, False
    s2 = svd.singular_values**2
    b = _grad_flat(alpha)[free]

    def curvature_apply(z):
        full = np.zeros(lam.shape)
        full[free] = z
        dy = _dy(full, n)
        v = svd.u @ ((svd.u.T @ dy) / s2)
        out = np.concatenate(([float(v.sum())], v, -v))
        return out[free]

    delta = np.zeros(m)
    r = -b.copy()
    rz = float(r @ r)
    target = rtol * np.sqrt(rz)
    matvecs = 0
    p = -r
    for _ in range(max_cg):
        if np.sqrt(rz) <= target or rz == 0.0:
            break
        hp = curvature_apply(p)
        matvecs += 1
        curv = float(p @ hp)
        if curv <= 1e-30 * max(1.0, rz):
            break
        step = rz / curv
        delta += step * p
        r += step * hp
        rz_new = float(r @ r)
        if np.sqrt(rz_new) <= target:
            break
        p = -r + (rz_new / rz) * p
        rz = rz_new
    stats.matvec_count += matvecs
    stats.cumulative_free_variables += m
    if not np.any(delta):
        return lam, alpha, False

    full = np.zeros(lam.shape)
    full[free] = delta
    shrink = bounded & (full < 0.0)
    t = 1.0
    if shrink.any():
        t = min(1.0, float(np.min(lam[shrink] / -full[shrink])))
    if t <= 0.0:
        return lam, alpha, False
    lam_new = lam + t * full
    np.maximum(lam_new, 0.0, out=lam_new, where=bounded)
    alpha_new = _alpha_from_y(_dy(lam_new, n), svd, base)
    if (_g_flat(lam_new, alpha_new, arr, q, n)
            <= _g_flat(lam, alpha, arr, q, n)):
        return lam, alpha, False
    return lam_new, alpha_new, True


def solve_dual(data, q, cfg: SolverConfig | None = None) -> HullSolution:
    """Maximize the dual and report the recovered (clamped) primal weights.

    Terminates when the recovered weights are primal-feasible within
    ``feas_tol`` and the duality gap against the clamped weights is below
    ``kkt_tol * (1 + |f|)``; otherwise reports honest non-convergence.
    ``stats.objective_trace`` holds the (nondecreasing) dual values; the raw
    recovered weights and the final gap are kept in ``stats.extras``.
    """
    cfg = cfg or SolverConfig()
    data = as_dataset(data)
    q = as_query(q, data.d)
    n = data.n
    arr = data.data
    t_start = time.perf_counter()

    svd = factorize(data)
    if svd.rank == 0:
        raise ValueError("zero-rank dataset: dual solver not applicable")
    stats = SolveStats()
    rank_deficient = svd.rank < n
    stats.extras["dual_rank_deficient"] = rank_deficient

    base = _lsq_base(svd, q)
    bounded = np.ones(2 * n + 1, dtype=bool)
    if cfg.free_lambda1:
        bounded[0] = False
    lam = np.zeros(2 * n + 1)
    alpha = base.copy()

    max_outer = cfg.resolved_max_outer(n)
    max_cg = cfg.resolved_max_cg(data.d)
    f_uniform = None
    if cfg.debug:
        uniform = np.full(n, 1.0 / n)
        r0 = q - uniform @ arr
        f_uniform = 0.5 * float(r0 @ r0)

    g_trace = stats.objective_trace
    g_cur = _g_flat(lam, alpha, arr, q, n)
    g_trace.append(g_cur)
    converged = False
    gap = np.inf
    stalled = 0
    outer = 0
    for outer in range(1, max_outer + 1):
        feas_violation = max(-float(alpha.min()), 0.0) + abs(float(alpha.sum()) - 1.0)
        alpha_proj = project_onto_simplex(alpha)
        r_proj = q - alpha_proj @ arr
        f_proj = 0.5 * float(r_proj @ r_proj)
        stats.matvec_count += 1
        gap = f_proj - g_cur
        if feas_violation <= cfg.feas_tol and gap <= cfg.kkt_tol * (1.0 + abs(f_proj)):
            converged = True
            break
        lam, alpha = _dual_cauchy(lam, alpha, svd, base, arr, q, bounded, n)
        rtol = 1e-12 if feas_violation <= 1e-6 else 0.1
        lam, alpha, _ = _dual_subspace(lam, alpha, svd, base, arr, q, bounded, n,
                                       4 * max_cg if rtol < 0.1 else max_cg, rtol, stats)
        g_new = _g_flat(lam, alpha, arr, q, n)
        if cfg.debug:
            assert g_new >= g_cur - 1e-12 * (1.0 + abs(g_cur)), "dual value decreased"
            if not rank_deficient:
                assert g_new <= f_uniform + 1e-10, "weak duality violated"
        g_trace.append(g_new)
        if g_new - g_cur <= 1e-16 * (1.0 + abs(g_cur)):
            stalled += 1
            if stalled >= 3:
                break
        else:
            stalled = 0
        g_cur = g_new

    alpha_final = project_onto_simplex(alpha)
    resid = q - alpha_final @ arr
    grad = -(arr @ resid)
    stats.matvec_count += 2
    kkt = _kkt_from_grad(alpha_final, grad, cfg.support_tol, cfg.kkt_tol)
    gap = 0.5 * float(resid @ resid) - g_cur   # gap of the returned point
    stats.outer_iterations.append(outer)
    stats.wall_times.append(time.perf_counter() - t_start)
    stats.stage_converged.append(converged)
    stats.extras["dual_alpha_raw"] = alpha.copy()
    stats.extras["dual_gap"] = gap
    stats.extras["dual_objective"] = g_cur
    return assemble_solution(alpha_final, data, q, cfg, kkt, stats, converged)
