"""Experiment harness: synthetic instances, cooperative matching and the CLI."""

from .config import ConfigError, MatchExperimentConfig, SyntheticConfig, build_constraint, load_matching, load_synthetic
from .matching import (
    KeypointSet,
    build_cooperative_objectives,
    ingest_keypoints,
    kmeans,
    run_matching_experiment,
    synthetic_frames,
)
from .synthetic import run_synthetic, synthetic_instance

__all__ = [
    "ConfigError",
    "KeypointSet",
    "MatchExperimentConfig",
    "SyntheticConfig",
    "build_constraint",
    "build_cooperative_objectives",
    "ingest_keypoints",
    "kmeans",
    "load_matching",
    "load_synthetic",
    "run_matching_experiment",
    "run_synthetic",
    "synthetic_frames",
    "synthetic_instance",
]
