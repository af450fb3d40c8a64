"""Command line entry point: ``robustsubmin {synthetic,matching,solve}``.

Exit codes: 0 success, 2 configuration or input error, 3 solver error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..constraints import InfeasibleError
from ..core import RobustObjective
from ..formats import FormatError, read_functions
from ..oracle import BudgetExceeded, EnumerationBudget, brute_force_min
from ..solvers import ALGORITHMS, RobustInstance, solve_all
from .config import CONSTRAINT_KINDS, ConfigError, build_constraint, load_matching, load_synthetic
from .matching import matching_csv, run_matching_experiment
from .synthetic import run_synthetic, synthetic_csv
from .tables import to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

SOLVE_COLUMNS = ("algorithm", "status", "value", "iterations", "set", "oracle_value")

log = logging.getLogger("robustsubmin")


class SolverFailure(RuntimeError):
    pass


def _algorithms(text: str | None):
    if text is None:
        return None
    algs = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in algs if a not in ALGORITHMS]
    if bad or not algs:
        raise ConfigError(f"--algorithms takes a comma list from {', '.join(ALGORITHMS)}")
    return algs


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_synthetic(args) -> int:
    cfg = load_synthetic(
        args.config,
        seed=args.seed,
        algorithms=_algorithms(args.algorithms),
        oracle=True if args.oracle else None,
    )
    try:
        rows = run_synthetic(cfg, workers=args.workers)
    except Exception as exc:
        raise SolverFailure(str(exc)) from exc
    _emit(synthetic_csv(rows, args.timing), args.out)
    failed = [r for r in rows if r["status"] == "error"]
    if failed:
        log.error("%d solver runs failed", len(failed))
        return EXIT_SOLVER
    return EXIT_OK


def cmd_matching(args) -> int:
    algs = _algorithms(args.algorithms)
    if algs is not None and len(algs) != 1:
        raise ConfigError("matching takes exactly one algorithm")
    cfg = load_matching(
        args.config,
        seed=args.seed,
        solver=None if algs is None else algs[0],
        oracle=True if args.oracle else None,
    )
    try:
        rows = run_matching_experiment(cfg, workers=args.workers)
    except (FormatError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    except Exception as exc:
        raise SolverFailure(str(exc)) from exc
    _emit(matching_csv(rows, args.timing), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        functions = read_functions(args.functions)
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    spec = {"kind": args.constraint}
    if args.k is not None:
        spec["k"] = args.k
    if args.size is not None:
        spec["size"] = args.size
    if args.graph is not None:
        spec["graph"] = args.graph
    if args.cover is not None:
        spec["cover"] = args.cover
    constraint = build_constraint(spec, functions[0].n)
    try:
        inst = RobustInstance(RobustObjective(tuple(functions)), constraint)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    opt = None
    if args.oracle:
        try:
            _, opt = brute_force_min(inst, EnumerationBudget())
        except BudgetExceeded as exc:
            log.warning("oracle skipped: %s", exc)
    algs = _algorithms(args.algorithms) or ALGORITHMS
    reports = {r.algorithm: r for r in solve_all(inst, seed=0 if args.seed is None else args.seed, algorithms=algs)}
    rows = []
    for a in algs:
        r = reports[a]
        ok = r.error is None
        rows.append(
            {
                "algorithm": a,
                "status": "ok" if ok else "error",
                "value": r.value if ok else None,
                "iterations": r.iterations if ok else None,
                "set": " ".join(map(str, sorted(r.set))) if ok else None,
                "oracle_value": opt,
            }
        )
    _emit(to_csv(SOLVE_COLUMNS, rows), args.out)
    return EXIT_SOLVER if any(r["status"] == "error" for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robustsubmin", description="Robust submodular minimization experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--seed", type=int, help="override the base seed")
        sp.add_argument("--algorithms", help="comma-separated algorithm tags")
        sp.add_argument("--oracle", action="store_true", help="add brute-force optimum columns")
        sp.add_argument("--out", help="CSV output path (default: stdout)")

    s = sub.add_parser("synthetic", help="random clustered instances")
    common(s)
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    s.add_argument("--timing", action="store_true", help="append a runtime column")
    s.set_defaults(func=cmd_synthetic)

    m = sub.add_parser("matching", help="cooperative keypoint matching")
    common(m)
    m.add_argument("--workers", type=int, default=1, help="worker processes")
    m.add_argument("--timing", action="store_true", help="append a runtime column")
    m.set_defaults(func=cmd_matching)

    v = sub.add_parser("solve", help="solve one instance given as files")
    common(v, config=False)
    v.add_argument("--functions", required=True, help="function file")
    v.add_argument("--constraint", required=True, choices=CONSTRAINT_KINDS)
    v.add_argument("--k", type=int, help="cardinality lower bound")
    v.add_argument("--size", type=int, help="complete graph size for tree or matching")
    v.add_argument("--graph", help="graph file")
    v.add_argument("--cover", help="cover file")
    v.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be positive")
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, InfeasibleError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
