"""Brute-force ground truth for small instances."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .constraints import CardinalityAtLeast, Constraint, PerfectBipartiteMatching, SpanningTree
from .solvers import RobustInstance

TIE_TOL = 1e-12


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EnumerationBudget:
    """Limits for enumeration.

    ``max_ground`` caps the ground set when every subset has to be filtered;
    structured enumerations (matchings, trees, cardinality) are limited by
    ``max_sets`` instead.
    """

    max_ground: int = 16
    max_sets: int = 10**7
    timeout: float | None = None

    def __post_init__(self):
        if self.max_ground < 1 or self.max_sets < 1:
            raise ValueError("budget limits must be positive")
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")


def _check_count(count: int, budget: EnumerationBudget):
    if count > budget.max_sets:
        raise BudgetExceeded(f"{count} candidate sets exceed the budget of {budget.max_sets}")


def _candidates(c: Constraint, budget: EnumerationBudget) -> Iterator[tuple[int, ...]]:
    n = c.n
    if isinstance(c, PerfectBipartiteMatching):
        k = len(c.left)
        _check_count(math.factorial(k), budget)
        E = c.edge_index_matrix()
        for perm in itertools.permutations(range(k)):
            idx = E[np.arange(k), perm]
            if np.all(idx >= 0):
                yield tuple(sorted(int(i) for i in idx))
        return
    if isinstance(c, SpanningTree):
        r = c.graph.n_vertices - 1
        _check_count(math.comb(n, r), budget)
        yield from itertools.combinations(range(n), r)
        return
    if isinstance(c, CardinalityAtLeast):
        _check_count(sum(math.comb(n, j) for j in range(c.k, n + 1)), budget)
        for j in range(c.k, n + 1):
            yield from itertools.combinations(range(n), j)
        return
    if n > budget.max_ground:
        raise BudgetExceeded(f"ground set of {n} exceeds the budget of {budget.max_ground}")
    _check_count(2**n, budget)
    for j in range(n + 1):
        yield from itertools.combinations(range(n), j)


def enumerate_feasible(c: Constraint, budget: EnumerationBudget = EnumerationBudget()) -> Iterator[frozenset[int]]:
    """Yield every feasible set of ``c`` once. Raises `BudgetExceeded` rather than truncating."""
    deadline = None if budget.timeout is None else time.monotonic() + budget.timeout
    for count, S in enumerate(_candidates(c, budget)):
        if deadline is not None and count % 1024 == 0 and time.monotonic() > deadline:
            raise BudgetExceeded(f"enumeration exceeded {budget.timeout} s")
        if c.is_feasible(S):
            yield frozenset(S)


def brute_force_min(inst: RobustInstance, budget: EnumerationBudget = EnumerationBudget()) -> tuple[frozenset[int], float]:
    """Global minimiser of ``max_i f_i`` over the constraint.

    Values within `TIE_TOL` count as ties and go to the lexicographically
    smallest sorted tuple.
    """
    best_key, best_set, best_val = None, None, math.inf
    for S in enumerate_feasible(inst.constraint, budget):
        val = inst.objective(S)
        key = tuple(sorted(S))
        if val < best_val - TIE_TOL or (abs(val - best_val) <= TIE_TOL and key < best_key):
            best_key, best_set, best_val = key, S, val
    if best_set is None:
        raise ValueError("constraint has no feasible set")
    return best_set, best_val
