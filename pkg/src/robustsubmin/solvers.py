"""Solvers for min over C of max_i f_i(X): AA, MMin, EA and CR."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .constraints import Constraint, CoveringFamily, separate
from .core import (
    RobustObjective,
    SetFunction,
    as_mask,
    average,
    curvature,
    ea_surrogate,
    greedy_order,
    kappa_factor,
    lovasz,
    modular_upper_bound,
)
from .robust_modular import (
    AVG,
    AffineFamily,
    GASchedule,
    default_strategies,
    solve_robust_min,
    strategy_candidates,
)

log = logging.getLogger(__name__)

MMIN_AA = "mmin-aa"
EA_AA = "ea-aa"
MMIN = "mmin"
EA = "ea"
CR = "cr"
ALGORITHMS = (MMIN_AA, EA_AA, MMIN, EA, CR)

BOUNDS = {
    MMIN_AA: "l*K(|X*|, kappa_avg)",
    EA_AA: "O(l*K(sqrt(n) log n, kappa_avg)) for an ellipsoidal provider",
    MMIN: "l*K(|X*|, kappa_wc)",
    EA: "beta*sqrt(l) with beta the provider's approximation",
    CR: "max_W |W| - b_W + 1",
}


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RobustInstance:
    objective: RobustObjective
    constraint: Constraint

    def __post_init__(self):
        if self.objective.n != self.constraint.n:
            raise ValueError(
                f"objective has ground set {self.objective.n}, constraint {self.constraint.n}"
            )

    @property
    def functions(self) -> tuple[SetFunction, ...]:
        return self.objective.functions


@dataclass(frozen=True)
class Step:
    """One trace entry. For MMin, ``surrogate`` is the subproblem value and ``value`` the true
    objective of the new set; for CR both hold g(x) and the best value so far."""

    run: int
    iteration: int
    surrogate: float
    value: float
    accepted: bool


@dataclass(frozen=True)
class SolveReport:
    set: frozenset[int] | None
    value: float
    algorithm: str
    trace: tuple = ()
    iterations: int = 0
    bound: str = ""
    beta: float = 1.0
    feasible: bool = True
    info: dict = field(default_factory=dict)
    error: str | None = None
    runtime: float = 0.0


def _report(inst: RobustInstance, X, algorithm, **kw) -> SolveReport:
    X = frozenset(X)
    feasible = inst.constraint.is_feasible(X)
    if not feasible:
        raise SolverError(f"{algorithm} produced an infeasible set")
    return SolveReport(
        X,
        inst.objective(X),
        algorithm,
        bound=BOUNDS.get(algorithm, ""),
        beta=inst.constraint.beta,
        feasible=feasible,
        **kw,
    )


def table_factor(algorithm: str, inst: RobustInstance, opt_size: int) -> float | None:
    """Worst-case ratio the analysis promises, or None when it is not finite here."""
    l = inst.objective.l
    beta = inst.constraint.beta
    v = max(opt_size, 1)
    if algorithm == MMIN:
        kappa = max(curvature(f) for f in inst.functions)
        return l * beta * kappa_factor(v, kappa)
    if algorithm == MMIN_AA:
        return l * beta * kappa_factor(v, curvature(average(inst.functions)))
    if algorithm == CR:
        return inst.constraint.covering_family().rounding_factor
    return None


def _random_anchor(constraint: Constraint, rng) -> frozenset[int]:
    return constraint.linear_minimize(rng.random(constraint.n))


def _mm_loop(functions, constraint, variant, strategies, max_iter, rel_tol, restarts, seed, schedule):
    """Shared MMin driver. Returns (best set, best value, trace, accepted steps)."""
    objective = RobustObjective(tuple(functions))
    rng = np.random.default_rng(seed)
    anchors = [frozenset()] + [_random_anchor(constraint, rng) for _ in range(restarts)]
    best_set, best_val = None, math.inf
    trace, accepted_total = [], 0
    for run, anchor in enumerate(anchors):
        X = anchor
        # the empty anchor is usually infeasible, so it never counts as a candidate
        cur = math.inf if run == 0 else objective(X)
        if run > 0:
            # restart anchors are feasible candidates in their own right (iteration 0)
            trace.append(Step(run, 0, cur, cur, True))
            if cur < best_val:
                best_set, best_val = X, cur
        for t in range(max_iter):
            v = (1 if t % 2 == 0 else 2) if variant == "alternate" else int(variant)
            bounds = [modular_upper_bound(f, X, v) for f in functions]
            sol = solve_robust_min(AffineFamily.from_bounds(bounds), constraint, strategies, schedule)
            val = objective(sol.set)
            ok = math.isinf(cur) or val < cur - rel_tol * abs(cur)
            trace.append(Step(run, t + 1, sol.value, val, ok))
            if not ok:
                break
            X, cur = sol.set, val
            accepted_total += 1
            if cur < best_val:
                best_set, best_val = X, cur
    return best_set, best_val, tuple(trace), accepted_total


def mmin(
    inst: RobustInstance,
    variant=1,
    strategies=None,
    *,
    max_iter: int = 50,
    rel_tol: float = 1e-6,
    restarts: int = 1,
    seed: int = 0,
    schedule: GASchedule = GASchedule(),
) -> SolveReport:
    """Majorization-minimization on the max of supergradient bounds.

    Each round replaces every ``f_i`` by its modular upper bound tight at the
    current set and solves the resulting min-max problem. A new set is
    accepted only if the true objective drops by more than ``rel_tol``.
    ``variant`` is 1, 2 or ``"alternate"``.
    """
    if variant not in (1, 2, "alternate"):
        raise ValueError("variant must be 1, 2 or 'alternate'")
    strategies = tuple(strategies or default_strategies(inst.constraint))
    X, _, trace, accepted = _mm_loop(
        inst.functions, inst.constraint, variant, strategies, max_iter, rel_tol, restarts, seed, schedule
    )
    return _report(inst, X, MMIN, trace=trace, iterations=accepted, info={"strategies": strategies})


def solve_aa(
    inst: RobustInstance,
    inner: str = "mmin",
    *,
    provider: str | None = None,
    max_iter: int = 50,
    rel_tol: float = 1e-6,
    restarts: int = 1,
    seed: int = 0,
) -> SolveReport:
    """Minimise the average ``f_avg`` instead of the max (MMin-AA or EA-AA)."""
    f_avg = average(inst.functions)
    if inner == "mmin":
        X, avg_val, trace, accepted = _mm_loop(
            [f_avg], inst.constraint, 1, (AVG,), max_iter, rel_tol, restarts, seed, GASchedule()
        )
        return _report(inst, X, MMIN_AA, trace=trace, iterations=accepted, info={"f_avg": avg_val})
    if inner == "ea":
        lower, _ = ea_surrogate(f_avg, provider)
        X = inst.constraint.linear_minimize(lower.weights)
        return _report(inst, X, EA_AA, iterations=1, info={"f_avg": f_avg(X), "sqrt_w": lower(X)})
    raise ValueError("inner must be 'mmin' or 'ea'")


def ea(
    inst: RobustInstance,
    provider: str | None = None,
    strategies=None,
    *,
    schedule: GASchedule = GASchedule(),
) -> SolveReport:
    """Ellipsoidal reduction: minimise ``max_i w_i(X)`` with ``sqrt(w_i) <= f_i``.

    Candidates from each min-max strategy are ranked by the curvature-mixed
    surrogates; the winner is reported under the true objective.
    """
    strategies = tuple(strategies or default_strategies(inst.constraint))
    pairs = [ea_surrogate(f, provider) for f in inst.functions]
    fam = AffineFamily.modular(np.stack([lower.weights for lower, _ in pairs]))
    cands = strategy_candidates(fam, inst.constraint, strategies, schedule)
    rows = []
    for s in strategies:
        X = cands[s]
        mask = as_mask(X, inst.objective.n)
        combined = max(c._value(mask) for _, c in pairs)
        rows.append((combined, strategies.index(s), s, X))
    rows.sort(key=lambda r: (r[0], r[1]))
    trace = tuple(
        {"strategy": s, "max_w": fam(X), "combined": comb, "value": inst.objective(X)}
        for comb, _, s, X in rows
    )
    return _report(inst, rows[0][3], EA, trace=trace, iterations=1, info={"strategy": rows[0][2]})


@dataclass(frozen=True)
class CROptions:
    step: str = "sqrt"
    step_scale: float = 1.0
    max_iter: int = 500
    projection_tol: float = 1e-7
    tol: float = 1e-6
    patience: int = 100
    max_sweeps: int = 100
    max_cut_rounds: int = 200

    def __post_init__(self):
        if self.step not in ("sqrt", "fixed"):
            raise ValueError("step must be 'sqrt' or 'fixed'")
        if min(self.step_scale, self.projection_tol, self.tol) <= 0:
            raise ValueError("step scale and tolerances must be positive")
        if min(self.max_iter, self.patience, self.max_sweeps, self.max_cut_rounds) < 1:
            raise ValueError("iteration caps must be positive")

def _project_halfspace_box(y, W, b):
    """Exact projection onto ``{x in [0,1]^n : x(W) >= b}``."""
    x = np.minimum(np.maximum(y, 0.0), 1.0)
    if x[W].sum() >= b:
        return x
    yw = y[W]
    # sum_j clip(y_j + lam, 0, 1) is piecewise linear in lam; find its breakpoint interval
    cand = np.concatenate(([0.0], np.unique(np.concatenate((-yw, 1.0 - yw)))))
    cand = cand[cand >= 0.0]
    sums = np.clip(yw[None, :] + cand[:, None], 0.0, 1.0).sum(axis=1)
    j = int(np.searchsorted(sums, b))
    lam = cand[j - 1] + (b - sums[j - 1]) * (cand[j] - cand[j - 1]) / (sums[j] - sums[j - 1])
    x[W] = np.clip(yw + lam, 0.0, 1.0)
    return x


class _Projector:
    """Projection onto the covering polytope by Dykstra's method.

    Members of implicit families are collected lazily from the separation
    oracle and kept for later calls.
    """

    def __init__(self, family: CoveringFamily, opts: CROptions):
        self.family = family
        self.opts = opts
        self.cuts = list(family.members) if family.explicit else list(family.seeds)
        self.failures = 0

    def _max_violation(self, x):
        return max((b - float(x[W].sum()) for W, b in self.cuts), default=0.0)

    def _dykstra(self, z):
        x = np.clip(z, 0.0, 1.0)
        if not self.cuts:
            return x
        incr = [np.zeros_like(z) for _ in self.cuts]
        x = z.copy()
        for _ in range(self.opts.max_sweeps):
            prev = x
            for k, (W, b) in enumerate(self.cuts):
                y = x + incr[k]
                x = _project_halfspace_box(y, W, b)
                incr[k] = y - x
            if np.abs(x - prev).max() < self.opts.projection_tol:
                break
        return x

    def _repair(self, x):
        tol = 0.1 * self.opts.projection_tol
        for _ in range(10 * self.opts.max_sweeps):
            if self._max_violation(x) <= tol:
                break
            for W, b in self.cuts:
                x = _project_halfspace_box(x, W, b)
        return x

    def __call__(self, z):
        for _ in range(self.opts.max_cut_rounds):
            x = self._repair(self._dykstra(z))
            member = separate(self.family, x, self.opts.projection_tol)
            if member is None:
                return x
            self.cuts.append(member)
        self.failures += 1
        log.warning("projection did not reach feasibility within the cut budget")
        return x


def max_lovasz(functions, x) -> tuple[int, float, np.ndarray]:
    """Worst index, value and subgradient of ``max_i f_i^(x)`` (ties to the lowest index)."""
    best = None
    for i, f in enumerate(functions):
        val, h = lovasz(f, x)
        if best is None or val > best[1]:
            best = (i, val, h)
    return best


def chain_threshold(x, constraint: Constraint) -> tuple[int, float, np.ndarray]:
    """Smallest prefix ``k`` of the descending order of ``x`` that contains a feasible set.

    Returns ``(k, theta, order)`` with ``theta`` the smallest coordinate in
    the prefix.
    """
    x = np.asarray(x, dtype=float)
    order = greedy_order(x)
    n = x.size

    def ok(k):
        mask = np.zeros(n, dtype=bool)
        mask[order[:k]] = True
        return constraint.contains_feasible(mask)

    if not ok(n):
        raise SolverError("no prefix of the chain contains a feasible set")
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    theta = float(x[order[lo - 1]]) if lo > 0 else 1.0
    return lo, theta, order


def round_chain(x, constraint: Constraint) -> frozenset[int]:
    """Threshold rounding followed by a shrink to a smallest feasible subset of the prefix."""
    k, _, order = chain_threshold(x, constraint)
    return constraint.linear_minimize(np.ones(constraint.n), within=order[:k])


def cr(inst: RobustInstance, opts: CROptions = CROptions()) -> SolveReport:
    """Continuous relaxation: projected subgradient on ``max_i f_i^(x)``, then chain rounding."""
    fs = inst.functions
    c = inst.constraint
    family = c.covering_family()
    project = _Projector(family, opts)

    start = c.linear_minimize(np.mean([f.singleton_gains for f in fs], axis=0))
    x = np.zeros(c.n)
    x[list(start)] = 1.0
    x = project(x)
    _, val, h = max_lovasz(fs, x)
    best_x, best_val = x, val
    g0 = float(np.linalg.norm(h)) or 1.0
    trace, stall, it = [], 0, 0
    for it in range(1, opts.max_iter + 1):
        if not np.any(h):
            break
        eta = opts.step_scale / g0 / (math.sqrt(it) if opts.step == "sqrt" else 1.0)
        x = project(x - eta * h)
        _, val, h = max_lovasz(fs, x)
        if val < best_val - opts.tol * max(1.0, abs(best_val)):
            stall = 0
        else:
            stall += 1
        if val < best_val:
            best_x, best_val = x, val
        trace.append(Step(0, it, val, best_val, val <= best_val))
        if stall >= opts.patience:
            break

    k, theta, _ = chain_threshold(best_x, c)
    X = round_chain(best_x, c)
    info = {
        "continuous_value": best_val,
        "x": best_x,
        "theta": theta,
        "prefix": k,
        "projection_failures": project.failures,
        "rounding_factor": family.rounding_factor,
    }
    return _report(inst, X, CR, trace=tuple(trace), iterations=it, info=info)


def run_algorithm(inst: RobustInstance, name: str, *, seed: int = 0, cr_options: CROptions = CROptions()) -> SolveReport:
    """Run one algorithm by its tag with default settings."""
    if name == MMIN_AA:
        return solve_aa(inst, "mmin", seed=seed)
    if name == EA_AA:
        return solve_aa(inst, "ea")
    if name == MMIN:
        return mmin(inst, seed=seed)
    if name == EA:
        return ea(inst)
    if name == CR:
        return cr(inst, cr_options)
    raise ValueError(f"unknown algorithm {name!r}")


def solve_all(
    inst: RobustInstance,
    *,
    seed: int = 0,
    algorithms=ALGORITHMS,
    cr_options: CROptions = CROptions(),
) -> list[SolveReport]:
    """Run every algorithm, record failures, sort by true objective value."""
    out = []
    for name in algorithms:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}")
        start = time.perf_counter()
        try:
            report = run_algorithm(inst, name, seed=seed, cr_options=cr_options)
        except Exception as exc:  # one failing algorithm must not sink the batch
            log.warning("%s failed: %s", name, exc)
            report = SolveReport(None, math.inf, name, feasible=False, error=f"{type(exc).__name__}: {exc}")
        out.append(replace(report, runtime=time.perf_counter() - start))
    return sorted(out, key=lambda r: (r.value, ALGORITHMS.index(r.algorithm)))
