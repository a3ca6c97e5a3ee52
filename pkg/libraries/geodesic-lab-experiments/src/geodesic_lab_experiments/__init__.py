"""geodesic-lab-experiments: configuration, runners, artifacts and the command line."""

from .config import (
    EXPERIMENTS,
    EXPERIMENT_DEFAULTS,
    PRESETS,
    ExperimentConfig,
    parse_config,
    load_config,
    load_preset,
)

from .artifacts import ArtifactWriter, canonical_json, stable_hash, library_versions

from .runners import ExperimentContext, experiment_runners

from .run import RunResult, run_experiment

__all__ = [
    "EXPERIMENTS",
    "EXPERIMENT_DEFAULTS",
    "PRESETS",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "load_preset",
    "ArtifactWriter",
    "canonical_json",
    "stable_hash",
    "library_versions",
    "ExperimentContext",
    "experiment_runners",
    "RunResult",
    "run_experiment",
]
