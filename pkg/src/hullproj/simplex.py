"""Feasible-set machinery for the unit simplex ``{a : a >= 0, sum(a) = 1}``.

Provides feasibility tests, sum-zero descent directions on a face,
breakpoint enumeration along such directions, and the exact Euclidean
projection onto the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Breakpoint",
    "breakpoints",
    "is_feasible",
    "project_onto_simplex",
    "projected_direction",
]


@dataclass(frozen=True)
class Breakpoint:
    """Step length at which a coordinate reaches its lower bound."""

    t: float
    index: int


def is_feasible(alpha, feas_tol: float = 1e-12) -> bool:
    """True iff ``min(alpha) >= -feas_tol`` and ``|sum(alpha) - 1| <= feas_tol``."""
    arr = np.asarray(alpha, dtype=np.float64)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        return False
    return float(arr.min()) >= -feas_tol and abs(float(arr.sum()) - 1.0) <= feas_tol


def projected_direction(g, active) -> np.ndarray:
    """Steepest feasible descent direction on the face fixed by ``active``.

    Over the inactive coordinates the negated gradient is re-centred so the
    direction sums to zero (staying on the unit-sum hyperplane); active
    coordinates get a zero component. The result satisfies ``p . g <= 0``.

    Raises
    ------
    ValueError
        If every coordinate is active (no feasible direction exists).
    """
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    active = np.asarray(active, dtype=bool).reshape(-1)
    if g.shape != active.shape:
        raise ValueError("gradient and active mask must have equal length")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains NaN or Inf")
    inactive = ~active
    if not inactive.any():
        raise ValueError("all coordinates active: no sum-zero direction exists")
    p = np.zeros_like(g)
    mean = g[inactive].mean()
    p[inactive] = mean - g[inactive]
    return p


def breakpoints(alpha, p, sum_tol: float = 1e-12) -> list[Breakpoint]:
    """Lower-bound breakpoints along ``alpha + t * p``, sorted by ``t``.

    Only coordinates with ``p[i] < 0`` ever hit a bound: ``p`` sums to zero,
    so following it from a feasible point keeps the unit sum and the upper
    bounds slack; ties are ordered by ascending index.
    """
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if alpha.shape != p.shape:
        raise ValueError("alpha and direction must have equal length")
    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(p))):
        raise ValueError("breakpoint inputs contain NaN or Inf")
    scale = max(1.0, float(np.abs(p).max(initial=0.0)))
    if abs(float(p.sum())) > sum_tol * scale:
        raise ValueError("direction does not sum to zero")
    out = []
    for i in np.flatnonzero(p < 0.0):
        out.append(Breakpoint(t=max(float(alpha[i] / -p[i]), 0.0), index=int(i)))
    out.sort(key=lambda b: (b.t, b.index))
    return out


def project_onto_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold).

    Sorts descending, finds the largest k with
    ``u_k - (sum_{j<=k} u_j - 1) / k > 0`` and clips at that threshold.
    The input is first shifted so its maximum is zero; the projection is
    invariant under shifts along the all-ones direction, and the shift keeps
    the k = 1 term exactly 1.0 in floats, which huge inputs would otherwise
    cancel away entirely.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("projection input contains NaN or Inf")
    shifted = v - v.max()
    u = np.sort(shifted)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    hits = np.flatnonzero(u - css / ks > 0.0)
    k = int(hits[-1])
    theta = css[k] / (k + 1)
    return np.maximum(shifted - theta, 0.0)
