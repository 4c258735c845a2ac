"""Problem data, solver configuration, and objective/gradient evaluation.

Conventions used throughout the package:

* the dataset is an n-by-d matrix whose rows are sample points,
* combination weights ``alpha`` form a row vector, so the combined point is
  ``x = alpha @ data``,
* the objective is the half-squared residual ``0.5 * ||q - alpha @ data||^2``
  (results also report the plain Euclidean ``distance``).

Weight vectors and query points travel as plain float64 numpy arrays; the
validators below normalise and check them at API boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "HullSolution",
    "KktReport",
    "SolveStats",
    "SolverConfig",
    "as_query",
    "as_weights",
    "gradient",
    "objective",
    "residual",
]


class Dataset:
    """Immutable n-by-d matrix of sample points (one row per sample)."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C")
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError(f"dataset must be a 2-D matrix, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"dataset must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"dataset contains a non-finite value at row {bad[0]}, column {bad[1]}")
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def d(self) -> int:
        return self._data.shape[1]

    # aliases matching the row/column vocabulary used in the docs
    rows = n
    dims = d

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.d})"


def as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(data)


def as_query(q, dims: int) -> np.ndarray:
    """Validate a query point against the dataset dimensionality."""
    arr = np.asarray(q, dtype=np.float64).reshape(-1)
    if arr.size != dims:
        raise ValueError(f"query has {arr.size} coordinates, dataset has {dims}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("query contains NaN or Inf")
    return np.ascontiguousarray(arr)


def as_weights(alpha, n: int) -> np.ndarray:
    """Validate a weight vector's shape and finiteness (not feasibility)."""
    arr = np.asarray(alpha, dtype=np.float64).reshape(-1)
    if arr.size != n:
        raise ValueError(f"weight vector has {arr.size} entries, dataset has {n} rows")
    if not np.all(np.isfinite(arr)):
        raise ValueError("weight vector contains NaN or Inf")
    return np.ascontiguousarray(arr)


def residual(alpha, data, q) -> np.ndarray:
    """Return ``q - alpha @ data`` as a length-d vector."""
    data = as_dataset(data)
    q = as_query(q, data.d)
    alpha = as_weights(alpha, data.n)
    return q - alpha @ data.data


def objective(alpha, data, q) -> float:
    """Half squared distance between the query and the combined point.

    Parameters
    ----------
    alpha : array_like, shape (n,)
        Combination weights (row-vector convention).
    data : Dataset or array_like, shape (n, d)
    q : array_like, shape (d,)

    Returns
    -------
    float
        ``0.5 * ||q - alpha @ data||^2``.
    """
    r = residual(alpha, data, q)
    return 0.5 * float(r @ r)


def gradient(alpha, data, q) -> np.ndarray:
    """Gradient of :func:`objective` with respect to the weights.

    Component i equals ``data[i] . (x - q)`` with ``x = alpha @ data``.
    """
    data = as_dataset(data)
    r = residual(alpha, data, q)
    return -(data.data @ r)


@dataclass
class SolverConfig:
    """Tolerances, iteration caps and solver selection.

    ``max_outer_iters``, ``max_cg_iters`` and ``interior_tol`` default to
    None and are resolved against the instance at solve time:
    ``10 * n``, ``min(d, 50)`` and ``1e-9 * max_i ||data[i] - q||``.
    """

    eta: int = 4
    kkt_tol: float = 1e-8
    feas_tol: float = 1e-12
    support_tol: float = 1e-10
    interior_tol: float | None = None
    max_outer_iters: int | None = None
    max_cg_iters: int | None = None
    solver: str = "sketch"
    seed: int = 0
    free_lambda1: bool = False
    early_exit: bool = False
    debug: bool = False

    def __post_init__(self):
        for name in ("kkt_tol", "feas_tol", "support_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.interior_tol is not None and self.interior_tol <= 0:
            raise ValueError("interior_tol must be positive")
        if self.eta < 1:
            raise ValueError("eta must be at least 1")
        if self.solver not in ("sketch", "full", "dual"):
            raise ValueError(f"unknown solver {self.solver!r}")

    def resolved_max_outer(self, n: int) -> int:
        return self.max_outer_iters if self.max_outer_iters is not None else 10 * n

    def resolved_max_cg(self, d: int) -> int:
        return self.max_cg_iters if self.max_cg_iters is not None else min(d, 50)

    def resolved_interior_tol(self, data: Dataset, q: np.ndarray) -> float:
        if self.interior_tol is not None:
            return self.interior_tol
        scale = float(np.sqrt(np.max(np.sum((data.data - q) ** 2, axis=1))))
        return 1e-9 * scale


@dataclass
class KktReport:
    """First-order optimality residuals at a weight vector.

    ``lambda_hat`` estimates the common gradient value over the support;
    stationarity measures its spread there, dual feasibility the amount by
    which off-support gradients undercut it, and the primal residual the
    constraint violation. ``converged`` compares the worst residual against
    ``kkt_tol * (1 + ||g||_inf)``.
    """

    lambda_hat: float
    stationarity_residual: float
    dual_feasibility_residual: float
    primal_residual: float
    converged: bool

    @property
    def max_residual(self) -> float:
        return max(self.stationarity_residual, self.dual_feasibility_residual,
                   self.primal_residual)


@dataclass
class SolveStats:
    """Work counters accumulated during a solve (one list entry per stage)."""

    outer_iterations: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    stage_converged: list = field(default_factory=list)
    cumulative_free_variables: int = 0
    matvec_count: int = 0
    cauchy_bends: int = 0
    objective_trace: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)


@dataclass
class HullSolution:
    """Result of a hull-projection solve."""

    x_star: np.ndarray
    alpha: np.ndarray
    support: np.ndarray
    objective: float
    distance: float
    kkt: KktReport
    stats: SolveStats
    interior_flag: bool
    converged: bool

    def __repr__(self) -> str:
        return (f"HullSolution(distance={self.distance:.6g}, support={len(self.support)},"
                f" converged={self.converged}, interior={self.interior_flag})")


def assemble_solution(alpha, data: Dataset, q, cfg: SolverConfig, kkt: KktReport,
                      stats: SolveStats, converged: bool) -> HullSolution:
    """Build a consistent :class:`HullSolution` from final weights."""
    alpha = np.asarray(alpha, dtype=np.float64)
    x_star = alpha @ data.data
    dist = float(math.sqrt(float((q - x_star) @ (q - x_star))))
    support = np.flatnonzero(alpha > cfg.support_tol)
    interior = dist <= cfg.resolved_interior_tol(data, q)
    return HullSolution(
        x_star=x_star,
        alpha=alpha,
        support=support,
        objective=0.5 * dist * dist,
        distance=dist,
        kkt=kkt,
        stats=stats,
        interior_flag=interior,
        converged=converged,
    )
