"""JSON experiment configs and constraint specs.

Unknown keys are rejected so that typos surface as config errors instead of
silently falling back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..constraints import (
    CardinalityAtLeast,
    Constraint,
    EdgeCover,
    PerfectBipartiteMatching,
    SetCover,
    SpanningTree,
    StCut,
    StPath,
    VertexCover,
    complete_bipartite,
    complete_graph,
)
from ..formats import FormatError, read_cover, read_graph
from ..solvers import ALGORITHMS


class ConfigError(ValueError):
    pass


GRAPH_KINDS = {
    "tree": SpanningTree,
    "matching": PerfectBipartiteMatching,
    "path": StPath,
    "cut": StCut,
    "vertex-cover": VertexCover,
    "edge-cover": EdgeCover,
}
CONSTRAINT_KINDS = ("cardinality", "set-cover") + tuple(GRAPH_KINDS)


def build_constraint(spec: dict, n: int | None = None, base: Path | None = None) -> Constraint:
    """Constraint from a spec such as ``{"kind": "cardinality", "k": 10}``.

    Cardinality needs the ground-set size ``n``. Trees and matchings accept
    ``size`` for complete graphs; every graph kind accepts ``graph`` (a
    graph file) and set covers take ``cover`` (a cover file).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("constraint must be an object with a 'kind'")
    kind = spec["kind"]
    allowed = {"kind"} | {
        "cardinality": {"k"},
        "set-cover": {"cover"},
        "tree": {"size", "graph"},
        "matching": {"size", "graph"},
    }.get(kind, {"graph"})
    extra = set(spec) - allowed
    if kind not in CONSTRAINT_KINDS:
        raise ConfigError(f"unknown constraint kind {kind!r}; expected one of {', '.join(CONSTRAINT_KINDS)}")
    if extra:
        raise ConfigError(f"unexpected keys for {kind}: {', '.join(sorted(extra))}")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() or base is None else base / p

    try:
        if kind == "cardinality":
            if n is None:
                raise ConfigError("cardinality needs the ground-set size n")
            return CardinalityAtLeast(n, _int(spec, "k"))
        if kind == "set-cover":
            universe, sets = read_cover(resolve(_required(spec, "cover")))
            return SetCover(universe, sets)
        if "graph" in spec:
            if "size" in spec:
                raise ConfigError("give either 'size' or 'graph', not both")
            graph = read_graph(resolve(spec["graph"]))
        elif kind in ("tree", "matching"):
            size = _int(spec, "size")
            if size < 1:
                raise ConfigError("size must be positive")
            graph = complete_graph(size) if kind == "tree" else complete_bipartite(size)
        else:
            raise ConfigError(f"{kind} needs a 'graph' file")
        return GRAPH_KINDS[kind](graph)
    except ConfigError:
        raise
    except (FormatError, OSError, ValueError) as exc:
        raise ConfigError(f"constraint: {exc}") from None


def _required(d, key):
    if key not in d:
        raise ConfigError(f"missing required key {key!r}")
    return d[key]


def _int(d, key):
    v = _required(d, key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key!r} must be an integer")
    return v


def _load_json(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data, path.parent


def _from_dict(cls, data: dict):
    names = {f.name for f in fields(cls)}
    extra = set(data) - names
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
    kwargs = dict(data)
    for f in fields(cls):
        if f.name in kwargs and isinstance(kwargs[f.name], list):
            kwargs[f.name] = tuple(kwargs[f.name])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _check_algorithms(algs):
    bad = [a for a in algs if a not in ALGORITHMS]
    if bad or not algs:
        raise ConfigError(f"algorithms must be a nonempty subset of {', '.join(ALGORITHMS)}")


def _check_number(name, v, lo, hi=None, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
        raise ConfigError(f"{name!r} must be {'an integer' if integer else 'a number'}")
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(f"{name!r} out of range")


@dataclass(frozen=True)
class SyntheticConfig:
    """Random instances: ``l`` clusterings of the ground set into ``clusters`` groups."""

    n: int | None = None
    l: int = 10
    clusters: int = 5
    exponent: float = 0.5
    weights: str = "shared"
    constraint: dict = field(default_factory=lambda: {"kind": "cardinality", "k": 10})
    seed: int = 0
    runs: int = 20
    algorithms: tuple[str, ...] = ALGORITHMS
    oracle: bool = False
    oracle_max_ground: int = 16
    base_dir: str = "."

    def validate(self) -> "SyntheticConfig":
        _check_number("l", self.l, 1, integer=True)
        _check_number("clusters", self.clusters, 1, integer=True)
        _check_number("exponent", self.exponent, 1e-12, 1.0)
        _check_number("seed", self.seed, 0, integer=True)
        _check_number("runs", self.runs, 1, integer=True)
        _check_number("oracle_max_ground", self.oracle_max_ground, 1, integer=True)
        if self.weights not in ("shared", "independent"):
            raise ConfigError("'weights' must be 'shared' or 'independent'")
        if not isinstance(self.oracle, bool):
            raise ConfigError("'oracle' must be true or false")
        _check_algorithms(self.algorithms)
        if not isinstance(self.constraint, dict):
            raise ConfigError("'constraint' must be an object")
        if self.constraint.get("kind") == "cardinality" and self.n is None:
            return replace(self, n=50).validate()
        if self.n is not None:
            _check_number("n", self.n, 1, integer=True)
        c = self.build_constraint()
        if self.n is not None and self.n != c.n:
            raise ConfigError(f"n={self.n} disagrees with the constraint's ground set of {c.n}")
        return self if self.n is not None else replace(self, n=c.n)

    def build_constraint(self) -> Constraint:
        return build_constraint(self.constraint, self.n, Path(self.base_dir))

    @property
    def seeds(self) -> list[int]:
        return list(range(self.seed, self.seed + self.runs))


@dataclass(frozen=True)
class MatchExperimentConfig:
    """Cooperative matching on synthetic perturbed frames or keypoint files.

    With ``frames`` empty, ``num_frames`` frames of ``points`` keypoints are
    generated; otherwise the listed keypoint files are used in order and
    point ``i`` of every file is assumed to correspond (``ground_truth``).
    """

    l: int = 10
    clusters: int = 3
    exponent: float = 0.5
    cost: str = "euclidean"
    solver: str = "mmin"
    seed: int = 0
    points: int = 7
    blobs: int = 3
    spread: float = 1.0
    separation: float = 10.0
    num_frames: int = 6
    noise: float = 0.4
    max_separation: int | None = None
    frames: tuple[str, ...] = ()
    ground_truth: bool = True
    oracle: bool = False
    base_dir: str = "."

    def validate(self) -> "MatchExperimentConfig":
        _check_number("l", self.l, 1, integer=True)
        _check_number("clusters", self.clusters, 1, integer=True)
        _check_number("exponent", self.exponent, 1e-12, 1.0)
        _check_number("seed", self.seed, 0, integer=True)
        _check_number("points", self.points, 1, integer=True)
        _check_number("blobs", self.blobs, 1, integer=True)
        _check_number("spread", self.spread, 0.0)
        _check_number("separation", self.separation, 0.0)
        _check_number("num_frames", self.num_frames, 2, integer=True)
        _check_number("noise", self.noise, 0.0)
        if self.max_separation is not None:
            _check_number("max_separation", self.max_separation, 1, integer=True)
        if self.cost not in ("euclidean", "sqeuclidean"):
            raise ConfigError("'cost' must be 'euclidean' or 'sqeuclidean'")
        if self.solver not in ALGORITHMS:
            raise ConfigError(f"'solver' must be one of {', '.join(ALGORITHMS)}")
        for key in ("ground_truth", "oracle"):
            if not isinstance(getattr(self, key), bool):
                raise ConfigError(f"{key!r} must be true or false")
        if self.frames and len(self.frames) < 2:
            raise ConfigError("need at least two frame files")
        if not self.frames and self.clusters > 2 * self.points:
            raise ConfigError("more clusters than keypoints in a frame pair")
        return self

    def frame_paths(self) -> list[Path]:
        base = Path(self.base_dir)
        return [p if p.is_absolute() else base / p for p in map(Path, self.frames)]


def load_synthetic(path, **overrides) -> SyntheticConfig:
    data, base = _load_json(path)
    data.setdefault("base_dir", str(base))
    cfg = _from_dict(SyntheticConfig, data)
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None}).validate()


def load_matching(path, **overrides) -> MatchExperimentConfig:
    data, base = _load_json(path)
    data.setdefault("base_dir", str(base))
    cfg = _from_dict(MatchExperimentConfig, data)
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None}).validate()
