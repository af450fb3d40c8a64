"""Cooperative keypoint matching with one or several k-means clusterings."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.spatial.distance import cdist

from ..constraints import PerfectBipartiteMatching, complete_bipartite
from ..core import ConcaveOverModular, RobustObjective
from ..formats import read_keypoints
from ..oracle import BudgetExceeded, brute_force_min
from ..solvers import RobustInstance, run_algorithm
from .config import MatchExperimentConfig
from .tables import fan_out, mean, to_csv

COLUMNS = ("pair", "separation", "method", "accuracy", "objective", "robust_objective", "oracle_robust_objective")
TIMED_COLUMNS = COLUMNS + ("runtime",)
METHODS = ("modular", "single", "robust")


@dataclass(frozen=True, eq=False)
class KeypointSet:
    points: np.ndarray
    frame: int | str = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise ValueError("keypoints must be a nonempty (N, 2) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("keypoint coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def ingest_keypoints(path, frame: int | str | None = None) -> KeypointSet:
    return KeypointSet(read_keypoints(path), str(path) if frame is None else frame)


def kmeans(points, k: int, seed: int, max_iter: int = 100) -> np.ndarray:
    """Lloyd's algorithm from ``k`` distinct random points; returns a label per point.

    An empty cluster is re-seeded with the point farthest from its centre
    (taken from a cluster that keeps at least one member), so every label
    in ``0..k-1`` is used.
    """
    pts = np.asarray(points, dtype=float)
    N = pts.shape[0]
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= {N} points, got k={k}")
    rng = np.random.default_rng(seed)
    centers = pts[rng.choice(N, size=k, replace=False)].copy()
    labels = None
    for _ in range(max_iter):
        d = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d.argmin(axis=1)
        for j in range(k):
            if np.any(new == j):
                continue
            sizes = np.bincount(new, minlength=k)
            dist = np.where(sizes[new] > 1, d[np.arange(N), new], -1.0)
            i = int(np.argmax(dist))
            new[i] = j
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.stack([pts[labels == j].mean(axis=0) for j in range(k)])
    return labels


def edge_costs(kp1: KeypointSet, kp2: KeypointSet, cost: str = "euclidean") -> np.ndarray:
    """Cost of edge ``u*k + v`` (left point ``u`` to right point ``v``)."""
    return cdist(kp1.points, kp2.points, "euclidean" if cost == "euclidean" else "sqeuclidean").ravel()


def build_cooperative_objectives(
    kp1: KeypointSet,
    kp2: KeypointSet,
    cfg: MatchExperimentConfig,
    seeds=None,
) -> RobustInstance:
    """One square-root-over-clusters function per k-means clustering of both frames.

    Edges are grouped by the pair (cluster of left endpoint, cluster of
    right endpoint). ``seeds`` defaults to ``cfg.l`` consecutive seeds
    starting at ``cfg.seed``.
    """
    k = len(kp1)
    if len(kp2) != k:
        raise ValueError(f"frames differ in size ({k} vs {len(kp2)})")
    seeds = list(range(cfg.seed, cfg.seed + cfg.l)) if seeds is None else list(seeds)
    w = edge_costs(kp1, kp2, cfg.cost)
    union = np.vstack([kp1.points, kp2.points])
    nc = min(cfg.clusters, 2 * k)
    fs = []
    for s in seeds:
        lab = kmeans(union, nc, s)
        group = (lab[:k, None] * nc + lab[None, k:]).ravel()
        clusters = [np.flatnonzero(group == g) for g in np.unique(group)]
        fs.append(ConcaveOverModular(clusters, w, cfg.exponent))
    return RobustInstance(RobustObjective(tuple(fs)), PerfectBipartiteMatching(complete_bipartite(k)))


def synthetic_frames(cfg: MatchExperimentConfig) -> list[np.ndarray]:
    """Blob-structured keypoints drifting by Gaussian steps of size ``noise`` per frame."""
    rng = np.random.default_rng(cfg.seed)
    centres = rng.normal(0.0, cfg.separation, size=(cfg.blobs, 2))
    base = centres[np.arange(cfg.points) % cfg.blobs] + rng.normal(0.0, cfg.spread, size=(cfg.points, 2))
    frames = [base]
    for _ in range(cfg.num_frames - 1):
        frames.append(frames[-1] + rng.normal(0.0, cfg.noise, size=base.shape))
    return frames


def _pairs(num_frames: int, max_sep: int | None) -> list[tuple[int, int]]:
    top = num_frames - 1 if max_sep is None else max_sep
    return [(a, b) for a in range(num_frames) for b in range(a + 1, num_frames) if b - a <= top]


def accuracy(chosen, truth, k: int) -> float:
    """Fraction of left points matched to their true partner; edge ``u*k + v``."""
    match = np.full(k, -1)
    for e in chosen:
        match[e // k] = e % k
    return float(np.mean(match == truth))


def run_pair(cfg: MatchExperimentConfig, job) -> list[dict]:
    (a, b), left, right, truth = job
    kp1, kp2 = KeypointSet(left, a), KeypointSet(right, b)
    k = len(kp1)
    robust = build_cooperative_objectives(kp1, kp2, cfg)
    single = RobustInstance(RobustObjective(robust.functions[:1]), robust.constraint)
    opt = None
    if cfg.oracle:
        try:
            _, opt = brute_force_min(robust)
        except BudgetExceeded:
            opt = None
    rows = []
    for method in METHODS:
        if method == "modular":
            w = edge_costs(kp1, kp2, cfg.cost)
            chosen = robust.constraint.linear_minimize(w)
            objective = float(w[list(chosen)].sum())
            runtime = 0.0
        else:
            inst = single if method == "single" else robust
            report = run_algorithm(inst, cfg.solver, seed=cfg.seed)
            chosen, objective, runtime = report.set, report.value, report.runtime
        if not robust.constraint.is_feasible(chosen):
            raise RuntimeError(f"{method} returned an infeasible matching")
        rows.append(
            {
                "pair": f"{a}-{b}",
                "separation": b - a,
                "method": method,
                "accuracy": None if truth is None else accuracy(chosen, truth, k),
                "objective": objective,
                "robust_objective": robust.objective(chosen),
                "oracle_robust_objective": opt,
                "runtime": runtime,
            }
        )
    return rows


def _jobs(cfg: MatchExperimentConfig):
    if cfg.frames:
        frames = [ingest_keypoints(p).points for p in cfg.frame_paths()]
        sizes = {f.shape[0] for f in frames}
        if len(sizes) != 1:
            raise ValueError("all keypoint files must have the same number of points")
        truth = np.arange(frames[0].shape[0]) if cfg.ground_truth else None
        return [((a, b), frames[a], frames[b], truth) for a, b in _pairs(len(frames), cfg.max_separation)]
    frames = synthetic_frames(cfg)
    jobs = []
    for a, b in _pairs(len(frames), cfg.max_separation):
        # shuffle the right frame so index order carries no hint
        perm = np.random.default_rng([cfg.seed, a, b]).permutation(cfg.points)
        jobs.append(((a, b), frames[a], frames[b][perm], np.argsort(perm)))
    return jobs


def summarize(rows: list[dict]) -> list[dict]:
    out = []
    groups = sorted({r["separation"] for r in rows}) + ["all"]
    for sep in groups:
        for method in METHODS:
            mine = [r for r in rows if r["method"] == method and (sep == "all" or r["separation"] == sep)]
            out.append(
                {
                    "pair": "mean",
                    "separation": sep,
                    "method": method,
                    "accuracy": mean(r["accuracy"] for r in mine),
                    "objective": mean(r["objective"] for r in mine),
                    "robust_objective": mean(r["robust_objective"] for r in mine),
                    "oracle_robust_objective": mean(r["oracle_robust_objective"] for r in mine),
                    "runtime": mean(r["runtime"] for r in mine),
                }
            )
    return out


def run_matching_experiment(cfg: MatchExperimentConfig, *, workers: int = 1) -> list[dict]:
    """Rows per (frame pair, method) followed by means per separation and overall."""
    chunks = fan_out(partial(run_pair, cfg), _jobs(cfg), workers)
    rows = [row for chunk in chunks for row in chunk]
    return rows + summarize(rows)


def matching_csv(rows: list[dict], timing: bool = False) -> str:
    return to_csv(TIMED_COLUMNS if timing else COLUMNS, rows)
