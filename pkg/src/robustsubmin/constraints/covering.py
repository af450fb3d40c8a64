"""Covering descriptions ``{x in [0,1]^n : x(W) >= b_W for W in family}``.

Small families are listed explicitly. Exponential ones (s-t paths, s-t
cuts, spanning trees, bipartite perfect matchings) are represented by a
separation oracle that returns the most violated member it finds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graphs import FlowNetwork, Graph, shortest_path

SEPARATION_TOL = 1e-7
FLOW_EPS = 1e-12

Member = tuple[np.ndarray, float]


@dataclass(frozen=True, eq=False)
class CoveringFamily:
    """Either an explicit member list or a separation oracle.

    ``rounding_factor`` is ``max_W |W| - b_W + 1`` over the family, the
    worst-case loss of threshold rounding. ``seeds`` are known valid members
    of an implicit family that callers may use as a warm start.
    """

    n: int
    rounding_factor: float
    members: tuple[Member, ...] | None = None
    oracle: Callable[[np.ndarray, float], Member | None] | None = None
    seeds: tuple[Member, ...] = ()

    @property
    def explicit(self) -> bool:
        return self.members is not None

    @classmethod
    def from_members(cls, n: int, members) -> "CoveringFamily":
        ms = []
        for W, b in members:
            W = np.array(sorted(set(int(i) for i in W)), dtype=np.int64)
            if b > W.size:
                raise ValueError("b_W must not exceed |W|")
            ms.append((W, float(b)))
        factor = max((W.size - b + 1 for W, b in ms), default=1.0)
        return cls(n, float(factor), members=tuple(ms))


def vertex_stars(graph: Graph, vertices) -> tuple[Member, ...]:
    """Members ``x(delta(v)) >= 1`` for the given vertices."""
    inc = graph.incident()
    return tuple((np.array(sorted(inc[v]), dtype=np.int64), 1.0) for v in vertices)


def separate(family: CoveringFamily, x, tol: float = SEPARATION_TOL) -> Member | None:
    """A member with ``x(W) < b_W - tol`` or None when ``x`` satisfies the family."""
    x = np.asarray(x, dtype=float)
    if family.members is not None:
        best, worst = None, tol
        for W, b in family.members:
            deficit = b - float(x[W].sum())
            if deficit > worst:
                best, worst = (W, b), deficit
        return best
    return family.oracle(x, tol)


def path_cut_oracle(graph: Graph) -> Callable:
    """Separation for s-t paths: every s-t cut must carry x-mass at least 1."""

    def oracle(x, tol):
        net = FlowNetwork(graph.n_vertices, eps=FLOW_EPS)
        for (u, v), c in zip(graph.edges, x):
            c = max(float(c), 0.0)
            net.add_edge(u, v, c, c)
        flow = net.max_flow(graph.s, graph.t)
        if flow >= 1.0 - tol:
            return None
        side = net.source_side(graph.s)
        W = np.array([i for i, (u, v) in enumerate(graph.edges) if side[u] != side[v]], dtype=np.int64)
        return W, 1.0

    return oracle


def cut_path_oracle(graph: Graph) -> Callable:
    """Separation for s-t cuts: every s-t path must carry x-mass at least 1."""
    allowed = np.ones(graph.m, dtype=bool)

    def oracle(x, tol):
        found = shortest_path(graph, np.clip(x, 0.0, None), graph.s, graph.t, allowed)
        if found is None:
            return None
        path, length = found
        if length >= 1.0 - tol:
            return None
        return np.array(sorted(path), dtype=np.int64), 1.0

    return oracle


def hall_oracle(graph: Graph) -> Callable:
    """Separation for the up-closure of bipartite perfect matchings.

    ``x`` dominates a fractional perfect matching iff the unit-capacity flow
    network s -> L -> R -> t with edge capacities ``x`` carries ``|L|``. A
    deficient cut with left part ``A`` and right part ``B`` on the source side
    gives the violated member ``W = E(A, R - B)``, ``b = |A| - |B|``.
    """
    left = sorted(graph.left)
    right = sorted(graph.right)
    node = {v: i + 1 for i, v in enumerate(left + right)}
    src, snk = 0, len(node) + 1

    def oracle(x, tol):
        net = FlowNetwork(len(node) + 2, eps=FLOW_EPS)
        for u in left:
            net.add_edge(src, node[u], 1.0)
        for v in right:
            net.add_edge(node[v], snk, 1.0)
        for i in range(graph.m):
            u, v = graph.oriented(i)
            net.add_edge(node[u], node[v], max(float(x[i]), 0.0))
        flow = net.max_flow(src, snk)
        if flow >= len(left) - tol:
            return None
        side = net.source_side(src)
        A = {u for u in left if side[node[u]]}
        B = {v for v in right if side[node[v]]}
        W = [i for i in range(graph.m) if graph.oriented(i)[0] in A and graph.oriented(i)[1] not in B]
        return np.array(W, dtype=np.int64), float(len(A) - len(B))

    return oracle


def spanning_tree_oracle(graph: Graph) -> Callable:
    """Separation for the dominant of the spanning-tree polytope.

    The members are the partition inequalities ``x(delta(P)) >= |P| - 1``.
    The most violated one maximises ``sum_parts (x(E(part)) + 1)``, a
    Dilworth truncation of a supermodular function; it is found greedily
    vertex by vertex, each step a minimum cut.
    """
    n = graph.n_vertices

    def oracle(x, tol):
        x = np.clip(np.asarray(x, dtype=float), 0.0, None)
        y = np.zeros(n)
        tight = []
        for i in range(n):
            A = _densest_containing(graph, x, y, i)
            inside = float(sum(x[e] for e, (u, v) in enumerate(graph.edges) if A[u] and A[v]))
            # f(A) = -(x(E(A)) + 1); y_i = f(A) - y(A - i)
            y[i] = -(inside + 1.0) - float(y[A].sum() - y[i])
            tight.append(A)
        parts = _merge_overlapping(tight, n)
        label = np.empty(n, dtype=np.int64)
        for k, part in enumerate(parts):
            label[list(part)] = k
        W = np.array([e for e, (u, v) in enumerate(graph.edges) if label[u] != label[v]], dtype=np.int64)
        b = float(len(parts) - 1)
        if float(x[W].sum()) >= b - tol:
            return None
        return W, b

    return oracle


def _densest_containing(graph: Graph, x, y, i) -> np.ndarray:
    """Maximise ``x(E(A)) + y(A - i)`` over ``A`` with ``i in A subset {0..i}``."""
    nodes = i + 1
    deg = np.zeros(nodes)
    net = FlowNetwork(nodes + 1, eps=FLOW_EPS)
    sink = nodes
    for e, (u, v) in enumerate(graph.edges):
        if u < nodes and v < nodes and x[e] > 0:
            net.add_edge(u, v, x[e] / 2.0, x[e] / 2.0)
            deg[u] += x[e]
            deg[v] += x[e]
    # minimise cut(A)/2 + sum_{u in A - i} a_u with a_u = -deg_u/2 - y_u
    for u in range(i):
        a = -deg[u] / 2.0 - y[u]
        if a > 0:
            net.add_edge(u, sink, a)
        elif a < 0:
            net.add_edge(i, u, -a)
    net.max_flow(i, sink)
    side = net.source_side(i)
    A = np.zeros(graph.n_vertices, dtype=bool)
    A[:nodes] = side[:nodes]
    return A


def _merge_overlapping(sets, n) -> list[set[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for A in sets:
        idx = np.flatnonzero(A)
        for j in idx[1:]:
            parent[find(j)] = find(idx[0])
    groups: dict[int, set[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), set()).add(v)
    return sorted(groups.values(), key=min)
