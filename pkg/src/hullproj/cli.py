"""Command-line interface: ``query``, ``bench``, ``verify`` and ``gen``.

Exit codes: 0 success (query: solver converged), 2 solver did not converge
(a record is still emitted), 1 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, bench, dataio, kernels
from .dual import solve_dual
from .model import Dataset, SolverConfig
from .oracle import Instance, cross_validate, solve_enumerate, solve_pgd
from .sketch import solve_full, solve_sketched


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2 for
    # "solver did not converge", so usage problems map to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_query_arg(text: str, path_format: str):
    if os.path.exists(text) and not _looks_inline(text):
        data = dataio.load_dataset(text, path_format)
        if data.n != 1:
            raise ValueError(f"query file {text} must contain exactly one row, has {data.n}")
        return data.data[0]
    try:
        return np.array([float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()])
    except ValueError:
        raise ValueError(f"query {text!r} is neither a readable file nor a comma-separated vector")


def _looks_inline(text: str) -> bool:
    try:
        [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
        return True
    except ValueError:
        return False


def _build_config(args, solver: str, n_rows: int) -> SolverConfig:
    # Unspecified --partitions adapts to tiny datasets; an explicit value is
    # taken literally and may be rejected downstream.
    eta = args.partitions if args.partitions is not None else min(4, n_rows)
    kwargs = {"solver": solver, "eta": eta, "seed": args.seed}
    if args.tol is not None:
        kwargs["kkt_tol"] = args.tol
    return SolverConfig(**kwargs)


def cmd_query(args) -> int:
    data = dataio.load_dataset(args.data, args.format)
    q = _parse_query_arg(args.query, args.format)
    if args.partitions is not None and args.partitions < 1:
        raise ValueError("--partitions must be at least 1")
    cfg = _build_config(args, args.solver, data.n)
    t0 = time.perf_counter()
    if args.solver == "dual":
        sol = solve_dual(data, q, cfg)
    elif args.solver == "full":
        sol = solve_full(data, q, cfg)
    else:
        if cfg.eta > data.n:
            raise ValueError(f"--partitions {cfg.eta} exceeds the number of rows {data.n}")
        sol = solve_sketched(data, q, cfg)
    record = dataio.build_record(sol, q, cfg, wall_time=time.perf_counter() - t0)
    text = dataio.record_to_json(record)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if sol.converged else 2


def cmd_gen(args) -> int:
    data = dataio.generate(args.kind, args.n, args.d, args.seed)
    dataio.save_dataset(data, args.out, args.format)
    print(f"wrote {args.kind} dataset n={data.n} d={data.d} to {args.out} ({args.format})")
    return 0


def cmd_bench(args) -> int:
    etas = [int(tok) for tok in args.eta_sweep.split(",") if tok.strip()]
    if args.backends == "both":
        backends = list(kernels.available_backends())
    elif args.backends == "active":
        backends = [kernels.get_backend()]
    else:
        backends = [args.backends]
    try:
        report = bench.run_bench(args.generator, args.n, args.d, etas,
                                 repeats=args.repeats, seed=args.seed,
                                 backends=backends)
    except ValueError as exc:
        if "disagree" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return 3
        raise
    print(bench.format_table(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 0


def _fixed_corpus():
    segment = Instance("segment", Dataset([[0.0, 0.0], [1.0, 0.0]]),
                       np.array([0.5, 1.0]))
    triangle = Instance("triangle", Dataset([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]),
                        np.array([2.0, 2.0]))
    square = Instance("square", dataio.generate("square", 12, 2, seed=7),
                      np.array([0.5, 2.0]))
    rng = np.random.default_rng(11)
    rows = rng.standard_normal((8, 3))
    w = rng.dirichlet(np.ones(4))
    interior = Instance("interior", Dataset(rows), w @ rows[:4], seed=11)
    dup_rows = np.vstack([rows[:4], rows[:4]])
    duplicate = Instance("duplicate-rows", Dataset(dup_rows),
                         np.array([4.0, 4.0, 4.0]), seed=11)
    return [segment, triangle, square, interior, duplicate]


def _random_instances(count, max_n, max_d, seed):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(3, max_n + 1))
        d = int(rng.integers(2, max_d + 1))
        data = dataio.Dataset(rng.standard_normal((n, d)))
        q = rng.standard_normal(d) * 1.5
        out.append(Instance(f"rand{k:04d}", data, q, seed=seed))
    return out


def _sketch_solver(eta):
    def run(data, q):
        return solve_sketched(data, q, SolverConfig(eta=min(eta, data.n)))
    return run


def cmd_verify(args) -> int:
    instances = _fixed_corpus() + _random_instances(args.instances, args.max_n,
                                                    args.max_d, args.seed)
    solvers = {
        "enumerate": lambda data, q: solve_enumerate(data, q),
        "full": lambda data, q: solve_full(data, q),
        "sketch-eta1": _sketch_solver(1),
        "sketch-eta2": _sketch_solver(2),
        "sketch-eta4": _sketch_solver(4),
    }
    replay_dir = args.replay_dir or os.path.join(os.getcwd(), "replay")
    report = cross_validate(instances, solvers, tol_x=1e-6, tol_dist=1e-8,
                            replay_dir=replay_dir)
    # The iterative oracle is slower and accurate to ~1e-5; it gets its own
    # pass over the fixed corpus plus a sample of the random instances.
    pgd_instances = instances[:5] + instances[5::10]
    pgd_report = cross_validate(
        pgd_instances,
        {"enumerate": lambda data, q: solve_enumerate(data, q),
         "pgd": lambda data, q: solve_pgd(data, q, steps=20_000)},
        tol_x=1e-5, tol_dist=1e-7, replay_dir=replay_dir)

    ok = report.passed and pgd_report.passed
    print(f"verify: {report.instances} instances, max x deviation {report.max_x_deviation:.3e},"
          f" max distance deviation {report.max_distance_deviation:.3e}")
    print(f"verify[pgd]: {pgd_report.instances} instances, max x deviation"
          f" {pgd_report.max_x_deviation:.3e}")
    for failure in report.failures + pgd_report.failures:
        print(f"FAIL {failure['name']}: x dev {failure['x_deviation']:.3e}"
              f" replay={failure['replay']}", file=sys.stderr)
    print("verify: PASS" if ok else "verify: FAIL")
    return 0 if ok else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="hullproj",
                     description="Closest point on the convex hull of a dataset.")
    parser.add_argument("--version", action="version", version=f"hullproj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_query = sub.add_parser("query", help="project a query point onto the hull")
    p_query.add_argument("--data", required=True, help="dataset file (csv or raw)")
    p_query.add_argument("--query", required=True,
                         help="comma-separated coordinates or a one-row dataset file")
    p_query.add_argument("--solver", choices=("sketch", "full", "dual"), default="sketch")
    p_query.add_argument("--partitions", type=int, default=None, metavar="ETA",
                         help="number of pieces for the staged solver (default min(4, n))")
    p_query.add_argument("--tol", type=float, default=None, help="optimality tolerance")
    p_query.add_argument("--seed", type=int, default=0)
    p_query.add_argument("--out", default=None, help="write the JSON record here")
    p_query.add_argument("--format", choices=("auto", "csv", "raw"), default="auto")
    p_query.set_defaults(func=cmd_query)

    p_bench = sub.add_parser("bench", help="time the staged solver over an eta sweep")
    p_bench.add_argument("--generator", choices=("square", "gaussian", "clustered"),
                         default="clustered")
    p_bench.add_argument("--n", type=int, default=20_000)
    p_bench.add_argument("--d", type=int, default=100)
    p_bench.add_argument("--eta-sweep", default="1,4,16")
    p_bench.add_argument("--repeats", type=int, default=1)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--backends", default="active",
                         choices=("active", "both") + kernels.available_backends())
    p_bench.add_argument("--out", default=None, help="write the JSON report here")
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="cross-check all solvers against the oracles")
    p_verify.add_argument("--instances", type=int, default=200)
    p_verify.add_argument("--max-n", type=int, default=12)
    p_verify.add_argument("--max-d", type=int, default=5)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--replay-dir", default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_gen = sub.add_parser("gen", help="write a synthetic dataset")
    p_gen.add_argument("--kind", choices=("square", "gaussian", "clustered"),
                       required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--format", choices=("csv", "raw"), default="csv")
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
