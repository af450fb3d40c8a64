import math

import numpy as np
import pytest
from conftest import com_instance

from robustsubmin.constraints import (
    CardinalityAtLeast,
    PerfectBipartiteMatching,
    SpanningTree,
    StCut,
    StPath,
    complete_bipartite,
    complete_graph,
)
from robustsubmin.core import ModularFunction, RobustObjective
from robustsubmin.harness.config import SyntheticConfig
from robustsubmin.harness.synthetic import synthetic_instance
from robustsubmin.oracle import BudgetExceeded, EnumerationBudget, brute_force_min, enumerate_feasible
from robustsubmin.solvers import ALGORITHMS, RobustInstance, solve_all
from test_constraints import random_connected_graph

# generated once with this oracle and pinned
GOLDEN_SEED42 = ({1, 4, 6}, 1.4023366760742813)


def count(c, **kw):
    return sum(1 for _ in enumerate_feasible(c, EnumerationBudget(**kw)))


class TestEnumerate:
    def test_matchings(self):
        assert count(PerfectBipartiteMatching(complete_bipartite(3))) == 6
        assert count(PerfectBipartiteMatching(complete_bipartite(4))) == 24

    def test_triangle_trees(self):
        assert count(SpanningTree(complete_graph(3))) == 3

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_cayley(self, k):
        assert count(SpanningTree(complete_graph(k))) == k ** (k - 2)

    def test_cardinality(self):
        assert count(CardinalityAtLeast(4, 2)) == 11

    def test_each_once_and_feasible(self, rng):
        for c in (StPath(random_connected_graph(rng, 6, 3, st=True)), StCut(random_connected_graph(rng, 6, 3, st=True))):
            sets = list(enumerate_feasible(c))
            assert len(sets) == len(set(sets))
            assert all(c.is_feasible(S) for S in sets)
            brute = sum(1 for m in range(1 << c.n) if c.is_feasible({i for i in range(c.n) if m >> i & 1}))
            assert len(sets) == brute

    def test_ground_budget(self):
        with pytest.raises(BudgetExceeded):
            list(enumerate_feasible(StPath(random_connected_graph(np.random.default_rng(0), 10, 8, st=True)), EnumerationBudget(max_ground=10)))

    def test_set_budget(self):
        with pytest.raises(BudgetExceeded):
            list(enumerate_feasible(CardinalityAtLeast(10, 2), EnumerationBudget(max_sets=5)))

    def test_budget_validated(self):
        with pytest.raises(ValueError):
            EnumerationBudget(max_ground=0)


class TestBruteForce:
    def test_modular_matches_linear(self, rng):
        c = SpanningTree(complete_graph(5))
        w = rng.random(c.n)
        inst = RobustInstance(RobustObjective((ModularFunction(w),)), c)
        X, v = brute_force_min(inst)
        assert v == pytest.approx(w[list(c.linear_minimize(w))].sum())

    def test_tie_lexicographic(self):
        inst = RobustInstance(
            RobustObjective((ModularFunction([1.0, 0.0]), ModularFunction([0.0, 1.0]))), CardinalityAtLeast(2, 1)
        )
        assert brute_force_min(inst) == ({0}, 1.0)

    def test_seed42_golden(self):
        cfg = SyntheticConfig(n=8, l=2, clusters=3, constraint={"kind": "cardinality", "k": 3}).validate()
        X, v = brute_force_min(synthetic_instance(cfg, 42))
        assert X == GOLDEN_SEED42[0]
        assert v == pytest.approx(GOLDEN_SEED42[1], abs=1e-12)

    def test_below_every_algorithm(self):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            inst = com_instance(rng, PerfectBipartiteMatching(complete_bipartite(3)), l=3, shared=False)
            _, opt = brute_force_min(inst)
            for r in solve_all(inst, algorithms=ALGORITHMS):
                assert opt <= r.value + 1e-12

    def test_timeout(self):
        inst = com_instance(np.random.default_rng(0), CardinalityAtLeast(16, 1), l=2)
        with pytest.raises(BudgetExceeded):
            brute_force_min(inst, EnumerationBudget(timeout=1e-6))
