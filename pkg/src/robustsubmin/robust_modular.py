"""Min-max over affine surrogates: average, max, power-mean and quadratic strategies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .constraints import Constraint, PerfectBipartiteMatching
from .core import ModularBound, ModularFunction, SetLike, as_mask

AVG = "avg"
MAX = "max"
QUADRATIC = "quadratic"
STRATEGIES = (AVG, MAX, QUADRATIC)


@dataclass(frozen=True, eq=False)
class AffineFamily:
    """Surrogates ``a_i + c_i(X)`` with nonnegative constants and weights."""

    constants: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        a = np.array(self.constants, dtype=float)
        C = np.atleast_2d(np.array(self.weights, dtype=float))
        if a.shape != (C.shape[0],):
            raise ValueError("one constant per surrogate")
        if np.any(a < -1e-9) or np.any(C < -1e-9):
            raise ValueError("affine family must be nonnegative")
        a, C = np.clip(a, 0.0, None), np.clip(C, 0.0, None)
        a.setflags(write=False)
        C.setflags(write=False)
        object.__setattr__(self, "constants", a)
        object.__setattr__(self, "weights", C)

    @classmethod
    def from_bounds(cls, bounds: list[ModularBound]) -> "AffineFamily":
        return cls(
            [b.surrogate.constant for b in bounds],
            np.stack([b.surrogate.weights for b in bounds]),
        )

    @classmethod
    def modular(cls, weights) -> "AffineFamily":
        C = np.atleast_2d(np.asarray(weights, dtype=float))
        return cls(np.zeros(C.shape[0]), C)

    @property
    def l(self) -> int:
        return self.weights.shape[0]

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    def values(self, S: SetLike) -> np.ndarray:
        x = as_mask(S, self.n)
        return self.constants + self.weights[:, x].sum(axis=1)

    def __call__(self, S: SetLike) -> float:
        return float(self.values(S).max())


def avg_surrogate(fam: AffineFamily) -> ModularFunction:
    return ModularFunction(fam.weights.mean(axis=0), float(fam.constants.mean()))


def max_surrogate(fam: AffineFamily) -> ModularFunction:
    return ModularFunction(fam.weights.max(axis=0), float(fam.constants.max()))


def power_mean_value(fam: AffineFamily, a: int, S: SetLike) -> float:
    """``(sum_i f_i(X)^a)^(1/a)``, rescaled by the max to avoid overflow."""
    if a < 1:
        raise ValueError("power a must be >= 1")
    v = fam.values(S)
    top = float(v.max())
    if top <= 0:
        return 0.0
    return top * float(np.sum((v / top) ** a)) ** (1.0 / a)


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """``x^T Q x + q^T x + const`` over edge indicator vectors."""

    Q: np.ndarray
    q: np.ndarray
    const: float = 0.0

    @classmethod
    def from_family(cls, fam: AffineFamily) -> "QuadraticObjective":
        """Expansion of ``sum_i (a_i + c_i(X))^2``."""
        C, a = fam.weights, fam.constants
        return cls(C.T @ C, 2.0 * (a @ C), float(a @ a))

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x + self.q @ x + self.const)

    def gradient(self, x) -> np.ndarray:
        return (self.Q + self.Q.T) @ x + self.q


@dataclass(frozen=True)
class GASchedule:
    beta0: float = 0.5
    rate: float = 1.075
    beta_max: float = 10.0
    relax_iters: int = 30
    sinkhorn_iters: int = 30
    tol: float = 1e-4


def _sinkhorn(M, support, iters, tol):
    for _ in range(iters):
        M = M / np.maximum(M.sum(axis=1, keepdims=True), 1e-300)
        M = M / np.maximum(M.sum(axis=0, keepdims=True), 1e-300)
        M = M * support
        if np.abs(M.sum(axis=1) - 1).max() < tol:
            break
    return M


def graduated_assignment(
    objective: QuadraticObjective,
    constraint: PerfectBipartiteMatching,
    schedule: GASchedule = GASchedule(),
) -> frozenset[int]:
    """Annealed soft-assign heuristic for quadratic matching objectives.

    The soft match matrix is refreshed as ``exp(-beta * grad)`` and pushed
    towards double stochasticity by alternating row/column normalisation.
    Gradients are divided by their largest magnitude at the uniform start so
    the fixed beta schedule is independent of the objective's scale. The final
    matrix is discretised twice with the Hungarian method (maximum weight on
    ``M``, and minimum linearised cost at ``M``); the better matching wins.
    """
    if not isinstance(constraint, PerfectBipartiteMatching):
        raise ValueError("graduated assignment needs a bipartite matching constraint")
    E = constraint.edge_index_matrix()
    support = (E >= 0).astype(float)
    k = E.shape[0]
    idx = np.where(E >= 0, E, 0)

    def grad_matrix(M):
        x = np.zeros(constraint.n)
        x[E[E >= 0]] = M[E >= 0]
        return objective.gradient(x)[idx] * support

    M = _sinkhorn(support / k, support, schedule.sinkhorn_iters, schedule.tol)
    scale = np.abs(grad_matrix(M)).max()
    scale = scale if scale > 0 else 1.0
    beta = schedule.beta0
    while beta <= schedule.beta_max:
        for _ in range(schedule.relax_iters):
            G = grad_matrix(M) / scale
            G = np.where(support > 0, G, np.inf)
            M_new = np.exp(-beta * (G - G[support > 0].min())) * support
            M_new = _sinkhorn(M_new, support, schedule.sinkhorn_iters, schedule.tol)
            done = np.abs(M_new - M).max() < schedule.tol
            M = M_new
            if done:
                break
        beta *= schedule.rate

    big = 1e9
    candidates = []
    rows, cols = linear_sum_assignment(np.where(support > 0, -M, big))
    candidates.append(E[rows, cols])
    G = grad_matrix(M)
    rows, cols = linear_sum_assignment(np.where(support > 0, G, big * (1 + np.abs(G).max())))
    candidates.append(E[rows, cols])
    best = None
    for c in candidates:
        if np.any(c < 0):
            continue
        x = np.zeros(constraint.n)
        x[c] = 1.0
        val = objective(x)
        if best is None or val < best[0] - 1e-12:
            best = (val, c)
    if best is None:
        raise RuntimeError("graduated assignment failed to produce a perfect matching")
    return frozenset(int(i) for i in best[1])


@dataclass(frozen=True)
class MinMaxSolution:
    set: frozenset[int]
    value: float
    strategy: str
    beta: float
    candidates: dict[str, frozenset[int]] = field(default_factory=dict)
    values: dict[str, float] = field(default_factory=dict)


def strategy_candidates(
    fam: AffineFamily,
    constraint: Constraint,
    strategies=(AVG, MAX),
    schedule: GASchedule = GASchedule(),
) -> dict[str, frozenset[int]]:
    out = {}
    for s in strategies:
        if s == AVG:
            out[s] = constraint.linear_minimize(avg_surrogate(fam).weights)
        elif s == MAX:
            out[s] = constraint.linear_minimize(max_surrogate(fam).weights)
        elif s == QUADRATIC:
            if not isinstance(constraint, PerfectBipartiteMatching):
                raise ValueError("the quadratic strategy is only available for matchings")
            out[s] = graduated_assignment(QuadraticObjective.from_family(fam), constraint, schedule)
        else:
            raise ValueError(f"unknown strategy {s!r}")
    return out


def solve_robust_min(
    fam: AffineFamily,
    constraint: Constraint,
    strategies=(AVG, MAX),
    schedule: GASchedule = GASchedule(),
) -> MinMaxSolution:
    """Best candidate under ``max_i (a_i + c_i(X))`` among the chosen strategies."""
    strategies = tuple(strategies)
    if not strategies:
        raise ValueError("need at least one strategy")
    cands = strategy_candidates(fam, constraint, strategies, schedule)
    values = {s: fam(X) for s, X in cands.items()}
    best = min(strategies, key=lambda s: (values[s], strategies.index(s)))
    return MinMaxSolution(cands[best], values[best], best, constraint.beta, cands, values)


def default_strategies(constraint: Constraint) -> tuple[str, ...]:
    if isinstance(constraint, PerfectBipartiteMatching):
        return (AVG, MAX, QUADRATIC)
    return (AVG, MAX)
