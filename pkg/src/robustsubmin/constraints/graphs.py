"""Undirected graphs and the combinatorial routines the constraint oracles use."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import DisjointSet


@dataclass(frozen=True)
class Graph:
    """Undirected graph; edge ``i`` is ``edges[i] = (u, v)``.

    ``left`` marks the left side of a bipartition when one is given.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    s: int | None = None
    t: int | None = None
    left: frozenset[int] | None = None

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        for u, v in edges:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) has an endpoint out of range")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
        if (self.s is None) != (self.t is None):
            raise ValueError("s and t must be given together")
        if self.s is not None:
            if self.s == self.t:
                raise ValueError("s and t must differ")
            if not (0 <= self.s < self.n_vertices and 0 <= self.t < self.n_vertices):
                raise ValueError("s or t out of range")
        if self.left is not None:
            left = frozenset(int(v) for v in self.left)
            object.__setattr__(self, "left", left)
            for u, v in edges:
                if (u in left) == (v in left):
                    raise ValueError(f"edge ({u}, {v}) does not cross the bipartition")

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def right(self) -> frozenset[int]:
        return frozenset(range(self.n_vertices)) - (self.left or frozenset())

    def oriented(self, i: int) -> tuple[int, int]:
        """Edge ``i`` as ``(left endpoint, right endpoint)``."""
        u, v = self.edges[i]
        return (u, v) if u in self.left else (v, u)

    def incident(self) -> list[list[int]]:
        inc = [[] for _ in range(self.n_vertices)]
        for i, (u, v) in enumerate(self.edges):
            inc[u].append(i)
            inc[v].append(i)
        return inc


def complete_bipartite(k: int) -> Graph:
    """``K_{k,k}`` with left vertices ``0..k-1``; edge ``u*k + v`` joins ``u`` and ``k+v``."""
    edges = tuple((u, k + v) for u in range(k) for v in range(k))
    return Graph(2 * k, edges, left=frozenset(range(k)))


def complete_graph(k: int) -> Graph:
    return Graph(k, tuple((u, v) for u in range(k) for v in range(u + 1, k)))


def components(n_vertices: int, edges, mask=None) -> np.ndarray:
    """Connected-component label per vertex using the edges selected by ``mask``."""
    ds = DisjointSet(range(n_vertices))
    for i, (u, v) in enumerate(edges):
        if mask is None or mask[i]:
            ds.merge(u, v)
    roots = {}
    return np.array([roots.setdefault(ds[v], len(roots)) for v in range(n_vertices)])


def reachable(graph: Graph, source: int, mask) -> np.ndarray:
    seen = np.zeros(graph.n_vertices, dtype=bool)
    seen[source] = True
    inc = graph.incident()
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for i in inc[u]:
            if mask[i]:
                a, b = graph.edges[i]
                w = b if a == u else a
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
    return seen


def kruskal(graph: Graph, costs, allowed) -> list[int] | None:
    """Minimum spanning tree over allowed edges, or None if they do not span."""
    ds = DisjointSet(range(graph.n_vertices))
    order = sorted(np.flatnonzero(allowed), key=lambda i: (costs[i], i))
    tree = []
    for i in order:
        u, v = graph.edges[i]
        if ds.merge(u, v):
            tree.append(int(i))
    return tree if len(tree) == graph.n_vertices - 1 else None


def shortest_path(graph: Graph, costs, s: int, t: int, allowed) -> tuple[list[int], float] | None:
    """Dijkstra over allowed edges; returns (edge indices, length) or None."""
    inc = graph.incident()
    dist = [float("inf")] * graph.n_vertices
    via = [-1] * graph.n_vertices
    dist[s] = 0.0
    heap = [(0.0, s)]
    done = [False] * graph.n_vertices
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == t:
            break
        for i in inc[u]:
            if not allowed[i]:
                continue
            a, b = graph.edges[i]
            w = b if a == u else a
            nd = d + costs[i]
            if nd < dist[w]:
                dist[w] = nd
                via[w] = i
                heapq.heappush(heap, (nd, w))
    if not done[t]:
        return None
    path, u = [], t
    while u != s:
        i = via[u]
        path.append(i)
        a, b = graph.edges[i]
        u = a if b == u else b
    return path[::-1], dist[t]


class FlowNetwork:
    """Directed max-flow (Dinic). Works with Python ints or floats."""

    def __init__(self, n: int, eps: float = 0.0):
        self.n = n
        self.eps = eps
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.head: list[int] = []
        self.cap: list = []

    def add_edge(self, u: int, v: int, cap, rev_cap=0) -> int:
        k = len(self.head)
        self.adj[u].append(k)
        self.head.append(v)
        self.cap.append(cap)
        self.adj[v].append(k + 1)
        self.head.append(u)
        self.cap.append(rev_cap)
        return k

    def _levels(self, s):
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for k in self.adj[u]:
                if self.cap[k] > self.eps and level[self.head[k]] < 0:
                    level[self.head[k]] = level[u] + 1
                    queue.append(self.head[k])
        return level

    def max_flow(self, s: int, t: int):
        total = 0
        while True:
            level = self._levels(s)
            if level[t] < 0:
                return total
            it = [0] * self.n
            while True:
                pushed = self._push(s, t, float("inf"), level, it)
                if not pushed or pushed <= self.eps:
                    break
                total += pushed

    def _push(self, s, t, limit, level, it):
        # iterative DFS along the level graph
        stack = [s]
        path = []
        while stack:
            u = stack[-1]
            if u == t:
                f = limit
                for k in path:
                    f = min(f, self.cap[k])
                for k in path:
                    self.cap[k] -= f
                    self.cap[k ^ 1] += f
                return f
            advanced = False
            while it[u] < len(self.adj[u]):
                k = self.adj[u][it[u]]
                v = self.head[k]
                if self.cap[k] > self.eps and level[v] == level[u] + 1:
                    stack.append(v)
                    path.append(k)
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                stack.pop()
                level[u] = -1
                if path:
                    path.pop()
                    it[stack[-1]] += 1
        return 0

    def source_side(self, s: int) -> np.ndarray:
        """Vertices reachable from ``s`` in the residual network (call after max_flow)."""
        seen = np.zeros(self.n, dtype=bool)
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for k in self.adj[u]:
                v = self.head[k]
                if self.cap[k] > self.eps and not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen


def has_perfect_matching(graph: Graph, mask) -> bool:
    """Augmenting-path test for a perfect matching inside the selected edges."""
    left = sorted(graph.left)
    right = graph.right
    if len(left) != len(right):
        return False
    nbrs = {u: [] for u in left}
    for i in np.flatnonzero(mask):
        u, v = graph.oriented(i)
        nbrs[u].append(v)
    match_r: dict[int, int] = {}

    def augment(u, seen):
        for v in nbrs[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_r or augment(match_r[v], seen):
                match_r[v] = u
                return True
        return False

    return all(augment(u, set()) for u in left)
