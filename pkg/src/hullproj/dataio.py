"""Dataset file formats, synthetic generators, and result serialization.

Two on-disk formats:

* ``csv`` — one sample per line, comma-separated, optional single header line
  (detected by a non-numeric first token). Written with 17 significant
  digits so a round trip preserves doubles exactly.
* ``raw`` — magic bytes ``HPRJ1``, then ``n`` and ``d`` as 8-byte
  little-endian unsigned integers, then ``n * d`` little-endian IEEE-754
  doubles in row-major order.
"""

from __future__ import annotations

import io
import json
import os
import struct
import numpy as np

from .model import Dataset, HullSolution, SolverConfig, as_dataset

__all__ = ["build_record", "generate", "load_dataset", "load_replay",
           "save_dataset", "write_replay"]

_MAGIC = b"HPRJ1"
_HEADER = struct.Struct("<5sQQ")


def _first_token_numeric(line: str) -> bool:
    token = line.split(",", 1)[0].strip()
    try:
        float(token)
        return True
    except ValueError:
        return False


def _parse_csv(text: str, path: str) -> np.ndarray:
    lines = text.splitlines()
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if rows and not _first_token_numeric(rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    parsed = []
    width = None
    for lineno, ln in rows:
        cells = ln.split(",")
        try:
            values = [float(c) for c in cells]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ValueError(
                f"{path}:{lineno}: ragged row ({len(values)} cells, expected {width})")
        if not all(np.isfinite(values)):
            raise ValueError(f"{path}:{lineno}: non-finite value")
        parsed.append(values)
    return np.asarray(parsed, dtype=np.float64)


def _parse_raw(blob: bytes, path: str) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: truncated header at byte {len(blob)}")
    magic, n, d = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
    if n < 1 or d < 1:
        raise ValueError(f"{path}: invalid dimensions n={n}, d={d}")
    need = _HEADER.size + 8 * n * d
    if len(blob) != need:
        raise ValueError(
            f"{path}: payload has {len(blob)} bytes, expected {need}"
            f" (truncation at byte {min(len(blob), need)})")
    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return values.reshape(n, d).astype(np.float64)


def load_dataset(path: str, fmt: str = "auto") -> Dataset:
    """Load a dataset file; ``fmt`` is ``csv``, ``raw`` or ``auto`` (sniffed)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if fmt == "auto":
        fmt = "raw" if blob[:len(_MAGIC)] == _MAGIC else "csv"
    if fmt == "raw":
        return Dataset(_parse_raw(blob, path))
    if fmt == "csv":
        # utf-8-sig: a BOM would otherwise read as a non-numeric first token
        # and silently swallow the first row as a header
        return Dataset(_parse_csv(blob.decode("utf-8-sig"), path))
    raise ValueError(f"unknown dataset format {fmt!r}")


def save_dataset(data, path: str, fmt: str = "csv") -> None:
    data = as_dataset(data)
    if fmt == "raw":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, data.n, data.d))
            fh.write(np.ascontiguousarray(data.data, dtype="<f8").tobytes())
        return
    if fmt == "csv":
        buf = io.StringIO()
        for row in data.data:
            buf.write(",".join(format(v, ".17g") for v in row))
            buf.write("\n")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
        return
    raise ValueError(f"unknown dataset format {fmt!r}")


def generate(kind: str, n: int, d: int, seed: int = 0) -> Dataset:
    """Synthetic datasets: ``square``, ``gaussian`` or ``clustered``.

    ``square`` places points on the boundary of the unit square in the first
    two coordinates (zeros elsewhere) and always includes the four corners.
    ``clustered`` draws ``ceil(sqrt(n))`` Gaussian blobs at random centers.
    All kinds are deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        if n < 1 or d < 1:
            raise ValueError("gaussian generator needs n >= 1, d >= 1")
        return Dataset(rng.standard_normal((n, d)))
    if kind == "clustered":
        if n < 1 or d < 1:
            raise ValueError("clustered generator needs n >= 1, d >= 1")
        k = int(np.ceil(np.sqrt(n)))
        centers = 4.0 * rng.standard_normal((k, d))
        labels = np.arange(n) % k
        return Dataset(centers[labels] + 0.5 * rng.standard_normal((n, d)))
    if kind == "square":
        if n < 4:
            raise ValueError("square generator needs n >= 4 (the corners)")
        if d < 2:
            raise ValueError("square generator needs d >= 2")
        pts = np.zeros((n, d))
        pts[:4, :2] = [[0, 0], [1, 0], [0, 1], [1, 1]]
        u = rng.uniform(0.0, 4.0, size=n - 4)
        side = np.floor(u).astype(int)
        pos = u - side
        edge = np.zeros((n - 4, 2))
        edge[side == 0] = np.column_stack([pos[side == 0], np.zeros((side == 0).sum())])
        edge[side == 1] = np.column_stack([np.ones((side == 1).sum()), pos[side == 1]])
        edge[side == 2] = np.column_stack([1.0 - pos[side == 2], np.ones((side == 2).sum())])
        edge[side == 3] = np.column_stack([np.zeros((side == 3).sum()), 1.0 - pos[side == 3]])
        pts[4:, :2] = edge
        return Dataset(pts)
    raise ValueError(f"unknown generator kind {kind!r}")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def build_record(solution: HullSolution, q, cfg: SolverConfig,
                 wall_time: float | None = None) -> dict:
    """Structured result record (JSON-ready) for one query."""
    order = np.argsort(-solution.alpha[solution.support], kind="stable")
    support_pairs = [[int(solution.support[i]), float(solution.alpha[solution.support[i]])]
                     for i in order]
    record = {
        "query": np.asarray(q, dtype=float).tolist(),
        "distance": solution.distance,
        "objective": solution.objective,
        "x_star": solution.x_star.tolist(),
        "support": support_pairs,
        "interior_flag": solution.interior_flag,
        "converged": solution.converged,
        "kkt": {
            "lambda_hat": solution.kkt.lambda_hat,
            "stationarity_residual": solution.kkt.stationarity_residual,
            "dual_feasibility_residual": solution.kkt.dual_feasibility_residual,
            "primal_residual": solution.kkt.primal_residual,
            "converged": solution.kkt.converged,
        },
        "stats": {
            "outer_iterations": list(solution.stats.outer_iterations),
            "wall_times": list(solution.stats.wall_times),
            "stage_converged": list(solution.stats.stage_converged),
            "cumulative_free_variables": solution.stats.cumulative_free_variables,
            "matvec_count": solution.stats.matvec_count,
            "cauchy_bends": solution.stats.cauchy_bends,
        },
        "config": {
            "solver": cfg.solver,
            "eta": cfg.eta,
            "kkt_tol": cfg.kkt_tol,
            "feas_tol": cfg.feas_tol,
            "support_tol": cfg.support_tol,
            "seed": cfg.seed,
        },
    }
    if wall_time is not None:
        record["wall_time"] = wall_time
    return _jsonable(record)


def record_to_json(record: dict) -> str:
    return json.dumps(record, indent=2)


# --- replay files for failed verification instances -------------------------
# One CSV file per instance: the header line carries the metadata (seed and
# query), the body is the dataset. The non-numeric first token makes plain
# load_dataset skip the header, so the file doubles as a normal dataset.

def write_replay(instance, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"replay_{instance.name}.csv")
    qtext = ";".join(format(v, ".17g") for v in np.asarray(instance.query, dtype=float))
    seed = "none" if instance.seed is None else str(instance.seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# replay name={instance.name} seed={seed} query={qtext}\n")
        for row in instance.data.data:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")
    return path


def load_replay(path: str):
    """Read a replay file back into (name, Dataset, query, seed)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        body = fh.read()
    if not header.startswith("# replay"):
        raise ValueError(f"{path}: not a replay file")
    fields = dict(part.split("=", 1) for part in header.split()[2:])
    query = np.array([float(v) for v in fields["query"].split(";")])
    seed = None if fields.get("seed") in (None, "none") else int(fields["seed"])
    data = Dataset(_parse_csv(body, path))
    return fields.get("name", "replay"), data, query, seed
