"""Random clustered instances and the batch runner for them."""

from __future__ import annotations

import math
from functools import partial

import numpy as np

from ..core import ConcaveOverModular, RobustObjective
from ..oracle import BudgetExceeded, EnumerationBudget, brute_force_min
from ..solvers import RobustInstance, solve_all
from .config import SyntheticConfig
from .tables import fan_out, mean, to_csv

COLUMNS = ("seed", "algorithm", "status", "value", "iterations", "oracle_value", "ratio", "best")
TIMED_COLUMNS = COLUMNS + ("runtime",)
BEST_TOL = 1e-9


def random_clustering(rng: np.random.Generator, n: int, k: int) -> list[np.ndarray]:
    """Uniform random labels in ``0..k-1``; empty groups are dropped."""
    labels = rng.integers(0, k, n)
    return [idx for idx in (np.flatnonzero(labels == j) for j in range(k)) if idx.size]


def synthetic_instance(cfg: SyntheticConfig, seed: int) -> RobustInstance:
    """``f_i(X) = sum_C w_i(X & C) ** p`` over the ``i``-th random clustering."""
    rng = np.random.default_rng(seed)
    constraint = cfg.build_constraint()
    n = constraint.n
    w = rng.random(n)
    fs = []
    for _ in range(cfg.l):
        wi = w if cfg.weights == "shared" else rng.random(n)
        fs.append(ConcaveOverModular(random_clustering(rng, n, cfg.clusters), wi, cfg.exponent))
    return RobustInstance(RobustObjective(tuple(fs)), constraint)


def _ratio(value, opt):
    if opt is None or value is None:
        return None
    if opt > 0:
        return value / opt
    return 1.0 if value <= BEST_TOL else math.inf


def run_seed(cfg: SyntheticConfig, seed: int) -> list[dict]:
    inst = synthetic_instance(cfg, seed)
    opt = None
    if cfg.oracle:
        try:
            _, opt = brute_force_min(inst, EnumerationBudget(max_ground=cfg.oracle_max_ground))
        except BudgetExceeded:
            opt = None
    reports = {r.algorithm: r for r in solve_all(inst, seed=seed, algorithms=cfg.algorithms)}
    rows = []
    for alg in cfg.algorithms:
        r = reports[alg]
        ok = r.error is None and r.set is not None and inst.constraint.is_feasible(r.set)
        value = r.value if ok else None
        rows.append(
            {
                "seed": seed,
                "algorithm": alg,
                "status": "ok" if ok else "error",
                "value": value,
                "iterations": r.iterations if ok else None,
                "oracle_value": opt,
                "ratio": _ratio(value, opt),
                "runtime": r.runtime,
            }
        )
    good = [row["value"] for row in rows if row["value"] is not None]
    top = min(good, default=None)
    for row in rows:
        v = row["value"]
        row["best"] = v is not None and v <= top + BEST_TOL * max(1.0, abs(top))
    return rows


def summarize(cfg: SyntheticConfig, rows: list[dict]) -> list[dict]:
    out = []
    for alg in cfg.algorithms:
        mine = [r for r in rows if r["algorithm"] == alg]
        ok = [r for r in mine if r["status"] == "ok"]
        out.append(
            {
                "seed": "mean",
                "algorithm": alg,
                "status": f"{len(ok)}/{len(mine)}",
                "value": mean(r["value"] for r in ok),
                "iterations": mean(r["iterations"] for r in ok),
                "oracle_value": mean(r["oracle_value"] for r in mine),
                "ratio": mean(r["ratio"] for r in ok),
                "best": sum(r["best"] for r in mine) / len(mine),
                "runtime": sum(r["runtime"] for r in mine) / len(mine),
            }
        )
    return out


def run_synthetic(cfg: SyntheticConfig, *, workers: int = 1) -> list[dict]:
    """Per-seed rows in seed order followed by one summary row per algorithm."""
    per_seed = fan_out(partial(run_seed, cfg), cfg.seeds, workers)
    rows = [row for chunk in per_seed for row in chunk]
    return rows + summarize(cfg, rows)


def synthetic_csv(rows: list[dict], timing: bool = False) -> str:
    return to_csv(TIMED_COLUMNS if timing else COLUMNS, rows)
