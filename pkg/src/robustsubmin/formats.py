"""Plain-text formats for functions, graphs, covers and keypoints.

All formats are whitespace separated, use 0-based indices, and ignore
blank lines and lines starting with ``#``. The exact
grammars are listed in the README.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .constraints import Graph
from .core import ConcaveOverModular, ModularFunction, SetFunction


class FormatError(ValueError):
    """Malformed input file; the message carries the file name and line number."""


def _lines(path) -> list[tuple[int, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                out.append((no, line))
    return out


def _fail(path, no, msg):
    raise FormatError(f"{path}:{no}: {msg}")


def _floats(path, no, tokens) -> list[float]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        _fail(path, no, f"expected numbers, got {' '.join(tokens)!r}")
    if not all(math.isfinite(v) for v in vals):
        _fail(path, no, "numbers must be finite")
    return vals


def _ints(path, no, tokens) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        _fail(path, no, f"expected integers, got {' '.join(tokens)!r}")


def _fmt(v: float) -> str:
    return repr(float(v))


# function files


def read_functions(path) -> list[SetFunction]:
    """Parse ``function modular`` / ``function com`` blocks, each closed by ``end``."""
    funcs = []
    block = None
    for no, line in _lines(path):
        tok = line.split()
        head = tok[0]
        if block is None:
            if head != "function" or len(tok) != 2 or tok[1] not in ("modular", "com"):
                _fail(path, no, "expected 'function modular' or 'function com'")
            block = {"kind": tok[1], "line": no, "clusters": []}
            continue
        if head == "end":
            funcs.append(_build_function(path, block))
            block = None
        elif head == "weights":
            if "weights" in block:
                _fail(path, no, "duplicate weights line")
            block["weights"] = _floats(path, no, tok[1:])
        elif (head, block["kind"]) in (("constant", "modular"), ("exponent", "com")):
            if len(tok) != 2:
                _fail(path, no, f"{head} takes one value")
            block[head] = _floats(path, no, tok[1:])[0]
        elif head == "cluster" and block["kind"] == "com":
            block["clusters"].append(_ints(path, no, tok[1:]))
        else:
            _fail(path, no, f"unexpected {head!r} in a {block['kind']} block")
    if block is not None:
        _fail(path, block["line"], "function block is missing 'end'")
    if not funcs:
        raise FormatError(f"{path}: no functions defined")
    if len({f.n for f in funcs}) != 1:
        raise FormatError(f"{path}: functions disagree on the ground-set size")
    return funcs


def _build_function(path, block) -> SetFunction:
    no = block["line"]
    if "weights" not in block:
        _fail(path, no, "function block has no weights line")
    try:
        if block["kind"] == "modular":
            return ModularFunction(np.array(block["weights"]), block.get("constant", 0.0))
        if not block["clusters"]:
            _fail(path, no, "com block needs at least one cluster line")
        return ConcaveOverModular(
            [np.array(c, dtype=np.int64) for c in block["clusters"]],
            np.array(block["weights"]),
            block.get("exponent", 0.5),
        )
    except (ValueError, IndexError) as exc:
        if isinstance(exc, FormatError):
            raise
        _fail(path, no, str(exc))


def write_functions(path, functions) -> None:
    out = []
    for f in functions:
        if isinstance(f, ModularFunction):
            out.append("function modular")
            out.append("weights " + " ".join(_fmt(w) for w in f.weights))
            if f.constant:
                out.append(f"constant {_fmt(f.constant)}")
        elif isinstance(f, ConcaveOverModular):
            out.append("function com")
            out.append(f"exponent {_fmt(f.exponent)}")
            out.append("weights " + " ".join(_fmt(w) for w in f.weights))
            for c in f.clusters:
                out.append("cluster " + " ".join(str(int(i)) for i in c))
        else:
            raise TypeError(f"cannot serialise {type(f).__name__}")
        out.append("end")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# graph files


def read_graph(path) -> Graph:
    """Header ``n m``, ``n m b``, ``n m s t`` or ``n m s t b``; then ``m`` lines ``u v``.

    ``b`` is the size of the left side of a bipartition, made of vertices
    ``0..b-1``.
    """
    lines = _lines(path)
    if not lines:
        raise FormatError(f"{path}: empty graph file")
    no, header = lines[0]
    head = _ints(path, no, header.split())
    if len(head) not in (2, 3, 4, 5):
        _fail(path, no, "header must be 'n m [s t] [bipartition-size]'")
    n, m = head[0], head[1]
    s = t = b = None
    if len(head) == 3:
        b = head[2]
    elif len(head) >= 4:
        s, t = head[2], head[3]
        if len(head) == 5:
            b = head[4]
    if n < 1 or m < 0:
        _fail(path, no, "need n >= 1 and m >= 0")
    if b is not None and not 0 < b < n:
        _fail(path, no, "bipartition size must be between 1 and n-1")
    body = lines[1:]
    if len(body) != m:
        raise FormatError(f"{path}: header announces {m} edges, found {len(body)}")
    edges = []
    for no, line in body:
        uv = _ints(path, no, line.split())
        if len(uv) != 2:
            _fail(path, no, "edge line must be 'u v'")
        edges.append(tuple(uv))
    try:
        return Graph(n, tuple(edges), s=s, t=t, left=None if b is None else frozenset(range(b)))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_graph(path, graph: Graph) -> None:
    head = [graph.n_vertices, graph.m]
    if graph.s is not None:
        head += [graph.s, graph.t]
    if graph.left is not None:
        if graph.left != frozenset(range(len(graph.left))):
            raise ValueError("the file format needs the left side to be vertices 0..b-1")
        head.append(len(graph.left))
    out = [" ".join(map(str, head))] + [f"{u} {v}" for u, v in graph.edges]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# cover files


def read_cover(path) -> tuple[int, list[list[int]]]:
    """First line: universe size. Then one covering set per line; ``-`` is the empty set."""
    lines = _lines(path)
    if not lines:
        raise FormatError(f"{path}: empty cover file")
    no, first = lines[0]
    head = _ints(path, no, first.split())
    if len(head) != 1 or head[0] < 0:
        _fail(path, no, "first line must be the universe size")
    universe = head[0]
    sets = []
    for no, line in lines[1:]:
        elems = [] if line == "-" else _ints(path, no, line.split())
        bad = [u for u in elems if not 0 <= u < universe]
        if bad:
            _fail(path, no, f"element {bad[0]} outside the universe")
        sets.append(elems)
    return universe, sets


def write_cover(path, universe: int, sets) -> None:
    out = [str(universe)] + [" ".join(str(int(u)) for u in s) or "-" for s in sets]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# keypoint files


def read_keypoints(path) -> np.ndarray:
    """``x y`` per line; returns an ``(N, 2)`` array in file order."""
    pts = []
    for no, line in _lines(path):
        tok = line.split()
        if len(tok) != 2:
            _fail(path, no, "keypoint line must be 'x y'")
        pts.append(_floats(path, no, tok))
    if not pts:
        raise FormatError(f"{path}: no keypoints")
    return np.array(pts, dtype=float)


def write_keypoints(path, points) -> None:
    pts = np.asarray(points, dtype=float)
    out = [f"{_fmt(x)} {_fmt(y)}" for x, y in pts]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
