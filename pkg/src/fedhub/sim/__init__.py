from .config import ExperimentConfig, load_config
from .harness import (
    LocalHub,
    RoundMetrics,
    run_config,
    run_experiment_fork_source,
    run_experiment_scratch_vs_fork,
)

__all__ = [
    "ExperimentConfig",
    "LocalHub",
    "RoundMetrics",
    "load_config",
    "run_config",
    "run_experiment_fork_source",
    "run_experiment_scratch_vs_fork",
]
