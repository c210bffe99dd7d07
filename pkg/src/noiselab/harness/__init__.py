"""Configuration, seeded noise, and experiment orchestration."""

from ..rng import sample_gaussian
from .config import DEFAULTS, ExperimentConfig
from .experiments import (
    ExperimentReport,
    run_optimization_experiment,
    run_selection_experiment,
    summarize_optimization,
    summarize_selection,
)

__all__ = [
    "DEFAULTS",
    "ExperimentConfig",
    "ExperimentReport",
    "run_optimization_experiment",
    "run_selection_experiment",
    "sample_gaussian",
    "summarize_optimization",
    "summarize_selection",
]
