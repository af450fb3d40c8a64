"""Constraint families with linear-minimisation, membership and closure oracles."""

from __future__ import annotations

from abc import ABC, abstractmethod
from functools import cached_property

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..core import SetLike, as_mask
from .covering import (
    CoveringFamily,
    cut_path_oracle,
    hall_oracle,
    path_cut_oracle,
    spanning_tree_oracle,
    vertex_stars,
)
from .graphs import (
    FlowNetwork,
    Graph,
    components,
    has_perfect_matching,
    kruskal,
    reachable,
    shortest_path,
)

CUT_SCALE = 10**6
EXACT_COVER_LIMIT = 20


class InfeasibleError(ValueError):
    """No feasible set exists (for the constraint or a restriction of it)."""


class Constraint(ABC):
    """A family ``C`` of feasible subsets of ``{0..n-1}``.

    Subclasses implement `_minimize`, `_feasible`, `_contains` and
    `covering_family`. ``beta`` is the approximation factor of the linear
    oracle (1 means exact).
    """

    n: int
    beta: float = 1.0
    kind: str = "constraint"

    def _validate(self):
        if self._minimize(np.ones(self.n), np.ones(self.n, dtype=bool)) is None:
            raise InfeasibleError(f"{self.kind}: no feasible set exists")

    def linear_minimize(self, costs, within: SetLike | None = None) -> frozenset[int]:
        """A feasible set minimising ``sum(costs[S])``, optionally inside ``within``."""
        costs = np.asarray(costs, dtype=float)
        if costs.shape != (self.n,) or not np.all(np.isfinite(costs)):
            raise ValueError(f"costs must be a finite vector of length {self.n}")
        if np.any(costs < -1e-12):
            raise ValueError("costs must be nonnegative")
        costs = np.clip(costs, 0.0, None)
        allowed = np.ones(self.n, dtype=bool) if within is None else as_mask(within, self.n)
        out = self._minimize(costs, allowed)
        if out is None:
            raise InfeasibleError(f"{self.kind}: no feasible set inside the given elements")
        return frozenset(int(i) for i in out)

    def is_feasible(self, S: SetLike) -> bool:
        return bool(self._feasible(as_mask(S, self.n)))

    def contains_feasible(self, S: SetLike) -> bool:
        """True iff some subset of ``S`` is feasible."""
        return bool(self._contains(as_mask(S, self.n)))

    @abstractmethod
    def _minimize(self, costs: np.ndarray, allowed: np.ndarray): ...

    @abstractmethod
    def _feasible(self, mask: np.ndarray) -> bool: ...

    @abstractmethod
    def _contains(self, mask: np.ndarray) -> bool: ...

    @abstractmethod
    def covering_family(self) -> CoveringFamily: ...


class CardinalityAtLeast(Constraint):
    kind = "cardinality"

    def __init__(self, n: int, k: int):
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        self.n, self.k = n, k
        self._validate()

    def _minimize(self, costs, allowed):
        idx = np.flatnonzero(allowed)
        if idx.size < self.k:
            return None
        order = idx[np.lexsort((idx, costs[idx]))]
        return order[: self.k]

    def _feasible(self, mask):
        return mask.sum() >= self.k

    _contains = _feasible

    @cached_property
    def _family(self):
        return CoveringFamily.from_members(self.n, [(range(self.n), self.k)])

    def covering_family(self):
        return self._family


class _GraphConstraint(Constraint):
    def __init__(self, graph: Graph):
        self.graph = graph
        self.n = graph.m


class SpanningTree(_GraphConstraint):
    kind = "spanning-tree"

    def __init__(self, graph: Graph):
        super().__init__(graph)
        self._validate()

    def _minimize(self, costs, allowed):
        return kruskal(self.graph, costs, allowed)

    def _feasible(self, mask):
        g = self.graph
        return mask.sum() == g.n_vertices - 1 and self._contains(mask)

    def _contains(self, mask):
        return np.unique(components(self.graph.n_vertices, self.graph.edges, mask)).size == 1

    @cached_property
    def _family(self):
        g = self.graph
        # the singleton partition (W = E, b = n - 1) is the loosest member
        return CoveringFamily(
            self.n,
            float(g.m - g.n_vertices + 2),
            oracle=spanning_tree_oracle(g),
            seeds=vertex_stars(g, range(g.n_vertices)),
        )

    def covering_family(self):
        return self._family


class PerfectBipartiteMatching(_GraphConstraint):
    kind = "matching"

    def __init__(self, graph: Graph):
        if graph.left is None:
            raise ValueError("matching constraint needs a bipartite graph")
        if len(graph.left) != len(graph.right):
            raise ValueError("perfect matching needs equal sides")
        super().__init__(graph)
        self.left = sorted(graph.left)
        self.right = sorted(graph.right)
        self._row = {u: r for r, u in enumerate(self.left)}
        self._col = {v: c for c, v in enumerate(self.right)}
        self._validate()

    def edge_index_matrix(self) -> np.ndarray:
        """Edge index for each (left row, right column) pair, -1 where absent."""
        k = len(self.left)
        out = np.full((k, k), -1, dtype=np.int64)
        for i in range(self.n):
            u, v = self.graph.oriented(i)
            out[self._row[u], self._col[v]] = i
        return out

    def _minimize(self, costs, allowed):
        k = len(self.left)
        big = float(costs.sum() + 1.0) * (k + 1)
        C = np.full((k, k), big)
        E = np.full((k, k), -1, dtype=np.int64)
        for i in np.flatnonzero(allowed):
            u, v = self.graph.oriented(i)
            r, c = self._row[u], self._col[v]
            if E[r, c] < 0 or costs[i] < C[r, c]:
                C[r, c], E[r, c] = costs[i], i
        rows, cols = linear_sum_assignment(C)
        chosen = E[rows, cols]
        if np.any(chosen < 0):
            return None
        return chosen

    def _feasible(self, mask):
        if mask.sum() != len(self.left):
            return False
        covered = set()
        for i in np.flatnonzero(mask):
            covered.update(self.graph.edges[i])
        return len(covered) == self.graph.n_vertices

    def _contains(self, mask):
        return has_perfect_matching(self.graph, mask)

    @cached_property
    def _family(self):
        g = self.graph
        return CoveringFamily(
            self.n,
            float(g.m - len(self.left) + 1),
            oracle=hall_oracle(g),
            seeds=vertex_stars(g, range(g.n_vertices)),
        )

    def covering_family(self):
        return self._family


class StPath(_GraphConstraint):
    kind = "st-path"

    def __init__(self, graph: Graph):
        if graph.s is None:
            raise ValueError("s-t path constraint needs s and t")
        super().__init__(graph)
        self._validate()

    def _minimize(self, costs, allowed):
        found = shortest_path(self.graph, costs, self.graph.s, self.graph.t, allowed)
        return None if found is None else found[0]

    def _feasible(self, mask):
        g = self.graph
        deg = np.zeros(g.n_vertices, dtype=np.int64)
        for i in np.flatnonzero(mask):
            u, v = g.edges[i]
            deg[u] += 1
            deg[v] += 1
        if deg[g.s] != 1 or deg[g.t] != 1:
            return False
        inner = np.delete(deg, [g.s, g.t])
        if np.any((inner != 0) & (inner != 2)):
            return False
        # degree pattern plus connectivity of the used vertices rules out extra cycles
        seen = reachable(g, g.s, mask)
        return bool(np.all(seen[deg > 0]))

    def _contains(self, mask):
        return bool(reachable(self.graph, self.graph.s, mask)[self.graph.t])

    @cached_property
    def _family(self):
        g = self.graph
        return CoveringFamily(self.n, float(g.m), oracle=path_cut_oracle(g), seeds=vertex_stars(g, (g.s, g.t)))

    def covering_family(self):
        return self._family


class StCut(_GraphConstraint):
    """Edge sets whose removal disconnects ``t`` from ``s``."""

    kind = "st-cut"

    def __init__(self, graph: Graph):
        if graph.s is None:
            raise ValueError("s-t cut constraint needs s and t")
        super().__init__(graph)
        self._validate()

    def _minimize(self, costs, allowed):
        g = self.graph
        scaled = [int(round(c * CUT_SCALE)) for c in costs]
        inf = sum(scaled) + 1
        net = FlowNetwork(g.n_vertices)
        for i, (u, v) in enumerate(g.edges):
            cap = scaled[i] if allowed[i] else inf
            net.add_edge(u, v, cap, cap)
        if net.max_flow(g.s, g.t) >= inf:
            return None
        side = net.source_side(g.s)
        return [i for i, (u, v) in enumerate(g.edges) if side[u] != side[v]]

    def _feasible(self, mask):
        return not reachable(self.graph, self.graph.s, ~mask)[self.graph.t]

    _contains = _feasible

    @cached_property
    def _family(self):
        g = self.graph
        return CoveringFamily(self.n, float(g.n_vertices - 1), oracle=cut_path_oracle(g))

    def covering_family(self):
        return self._family


def harmonic(k: int) -> float:
    return sum(1.0 / i for i in range(1, k + 1))


class SetCover(Constraint):
    """Choose covering sets (the ground set) so each universe element ``u`` is hit ``c_u`` times.

    Linear minimisation is exact branch-and-bound up to `EXACT_COVER_LIMIT`
    sets and the greedy ``H(max |S_i|)``-approximation above; ``beta``
    records which one applies.
    """

    kind = "set-cover"

    def __init__(self, universe: int, sets, requirements=None):
        self.universe = int(universe)
        self.sets = tuple(tuple(sorted(set(int(u) for u in s))) for s in sets)
        for s in self.sets:
            if s and (s[0] < 0 or s[-1] >= self.universe):
                raise ValueError("covering set refers to an element outside the universe")
        self.n = len(self.sets)
        req = np.ones(self.universe, dtype=np.int64) if requirements is None else np.asarray(requirements, dtype=np.int64)
        if req.shape != (self.universe,) or np.any(req < 0):
            raise ValueError("requirements must be nonnegative, one per universe element")
        self.requirements = req
        self._cover = np.zeros((self.universe, self.n), dtype=np.int64)
        for i, s in enumerate(self.sets):
            self._cover[list(s), i] = 1
        self.exact = self.n <= EXACT_COVER_LIMIT
        self.beta = 1.0 if self.exact else harmonic(max((len(s) for s in self.sets), default=1))
        self._validate()

    def _feasible(self, mask):
        return bool(np.all(self._cover[:, mask].sum(axis=1) >= self.requirements))

    _contains = _feasible

    def _minimize(self, costs, allowed):
        if not self._feasible(allowed):
            return None
        if self.exact:
            return self._branch_and_bound(costs, allowed)
        return self._greedy(costs, allowed)

    def _greedy(self, costs, allowed):
        deficit = self.requirements.copy()
        chosen = np.zeros(self.n, dtype=bool)
        while np.any(deficit > 0):
            useful = (self._cover * (deficit > 0)[:, None]).sum(axis=0)
            cand = np.flatnonzero(allowed & ~chosen & (useful > 0))
            ratio = costs[cand] / useful[cand]
            pick = cand[np.lexsort((cand, ratio))[0]]
            chosen[pick] = True
            deficit = deficit - self._cover[:, pick]
        return np.flatnonzero(chosen)

    def _branch_and_bound(self, costs, allowed):
        cover = self._cover
        start = self._greedy(costs, allowed)
        best = [float(costs[start].sum()), start]

        def recurse(deficit, chosen, banned, cost):
            if cost >= best[0]:
                return
            need = np.flatnonzero(deficit > 0)
            if need.size == 0:
                best[0], best[1] = cost, np.flatnonzero(chosen)
                return
            free = allowed & ~chosen & ~banned
            # branch on the needy element with the fewest candidate sets
            counts = cover[need][:, free].sum(axis=1)
            slack = counts - deficit[need]
            if np.any(slack < 0):
                return
            u = need[np.argmin(counts)]
            cands = np.flatnonzero(free & (cover[u] > 0))
            cands = cands[np.lexsort((cands, costs[cands]))]
            banned = banned.copy()
            for i in cands:
                chosen[i] = True
                recurse(deficit - cover[:, i], chosen, banned, cost + costs[i])
                chosen[i] = False
                banned[i] = True

        recurse(self.requirements.copy(), np.zeros(self.n, dtype=bool), np.zeros(self.n, dtype=bool), 0.0)
        return best[1]

    @cached_property
    def _family(self):
        members = [(np.flatnonzero(self._cover[u]), self.requirements[u]) for u in range(self.universe) if self.requirements[u] > 0]
        return CoveringFamily.from_members(self.n, members)

    def covering_family(self):
        return self._family


class VertexCover(SetCover):
    """Vertex sets touching every edge; the ground set is the vertices."""

    kind = "vertex-cover"

    def __init__(self, graph: Graph):
        self.graph = graph
        inc = graph.incident()
        super().__init__(graph.m, [inc[v] for v in range(graph.n_vertices)])


class EdgeCover(SetCover):
    """Edge sets touching every vertex; the ground set is the edges."""

    kind = "edge-cover"

    def __init__(self, graph: Graph):
        self.graph = graph
        super().__init__(graph.n_vertices, list(graph.edges))
