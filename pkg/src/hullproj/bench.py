"""Benchmark harness: sweep partition counts (and kernel backends) on one instance.

Answers must agree across every configuration — the sweep hard-fails on
disagreement since a fast wrong answer is worthless; timing numbers are
reported, never gated.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .dataio import generate
from .model import SolverConfig
from .sketch import solve_sketched

__all__ = ["benchmark_query", "format_table", "run_bench"]


def benchmark_query(data, seed: int) -> np.ndarray:
    """A deterministic query placed outside the data cloud."""
    rng = np.random.default_rng(seed + 0x5EED)
    center = data.data.mean(axis=0)
    radius = float(np.sqrt(np.max(np.sum((data.data - center) ** 2, axis=1))))
    direction = rng.standard_normal(data.d)
    direction /= np.linalg.norm(direction)
    return center + 1.5 * radius * direction


def run_bench(kind: str, n: int, d: int, etas, repeats: int = 1, seed: int = 0,
              backends=None, tol_x: float = 1e-6) -> dict:
    """Time the staged solver for each eta (and backend); verify agreement.

    Returns a report dict with one entry per (backend, eta) combination and
    the maximum pairwise deviation of the combined point. Raises ValueError
    if any two runs disagree beyond ``tol_x``.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    etas = [int(e) for e in etas]
    for eta in etas:
        if eta < 1 or eta > n:
            raise ValueError(f"eta={eta} invalid for n={n}")
    if backends is None:
        backends = [kernels.get_backend()]
    for b in backends:
        if b not in kernels.available_backends():
            raise ValueError(f"backend {b!r} not available (have {kernels.available_backends()})")

    data = generate(kind, n, d, seed)
    q = benchmark_query(data, seed)

    entries = []
    x_ref = None
    max_dev = 0.0
    previous_backend = kernels.get_backend()
    try:
        for backend in backends:
            kernels.set_backend(backend)
            for eta in etas:
                cfg = SolverConfig(eta=eta, seed=seed)
                times = []
                sol = None
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    sol = solve_sketched(data, q, cfg)
                    times.append(time.perf_counter() - t0)
                if x_ref is None:
                    x_ref = sol.x_star
                dev = float(np.linalg.norm(sol.x_star - x_ref))
                max_dev = max(max_dev, dev)
                entries.append({
                    "backend": backend,
                    "eta": eta,
                    "wall_time_mean": float(np.mean(times)),
                    "wall_time_min": float(np.min(times)),
                    "wall_time_max": float(np.max(times)),
                    "stage_wall_times": list(sol.stats.wall_times),
                    "outer_iterations": list(sol.stats.outer_iterations),
                    "cumulative_free_variables": sol.stats.cumulative_free_variables,
                    "matvec_count": sol.stats.matvec_count,
                    "cauchy_bends": sol.stats.cauchy_bends,
                    "distance": sol.distance,
                    "converged": sol.converged,
                    "x_deviation": dev,
                })
    finally:
        kernels.set_backend(previous_backend)

    report = {
        "generator": kind, "n": n, "d": d, "seed": seed, "repeats": repeats,
        "entries": entries, "max_x_deviation": max_dev, "agreement_tol": tol_x,
    }
    if max_dev > tol_x:
        raise ValueError(
            f"answers disagree across the sweep: max deviation {max_dev:.3e} > {tol_x:.1e}")
    return report


def format_table(report: dict) -> str:
    header = (f"benchmark {report['generator']} n={report['n']} d={report['d']}"
              f" seed={report['seed']} repeats={report['repeats']}")
    lines = [header,
             f"{'backend':>9} {'eta':>5} {'time[s]':>10} {'min':>10} {'max':>10}"
             f" {'iters':>6} {'freevars':>9} {'matvecs':>8} {'dist':>12}"]
    for e in report["entries"]:
        lines.append(
            f"{e['backend']:>9} {e['eta']:>5} {e['wall_time_mean']:>10.4f}"
            f" {e['wall_time_min']:>10.4f} {e['wall_time_max']:>10.4f}"
            f" {sum(e['outer_iterations']):>6} {e['cumulative_free_variables']:>9}"
            f" {e['matvec_count']:>8} {e['distance']:>12.6g}")
    lines.append(f"max pairwise x deviation: {report['max_x_deviation']:.3e}")
    return "\n".join(lines)
