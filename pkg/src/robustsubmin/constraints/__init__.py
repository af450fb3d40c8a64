from .covering import CoveringFamily, separate
from .families import (
    CardinalityAtLeast,
    Constraint,
    EdgeCover,
    InfeasibleError,
    PerfectBipartiteMatching,
    SetCover,
    SpanningTree,
    StCut,
    StPath,
    VertexCover,
)
from .graphs import Graph, complete_bipartite, complete_graph

__all__ = [
    "CardinalityAtLeast",
    "Constraint",
    "CoveringFamily",
    "EdgeCover",
    "Graph",
    "InfeasibleError",
    "PerfectBipartiteMatching",
    "SetCover",
    "SpanningTree",
    "StCut",
    "StPath",
    "VertexCover",
    "complete_bipartite",
    "complete_graph",
    "separate",
]
