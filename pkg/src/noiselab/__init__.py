"""Noise selection and noise optimization for diffusion samplers, on an analytic testbed."""

__version__ = "0.1.0"

from .errors import NoiseLabError
from .metrics import QualityScores, rank_correlation, sample_quality, winning_rate
from .optimization import PRESETS, OptimizationTrace, cosine_loss, cosine_loss_grad, optimize_noise
from .rng import sample_gaussian
from .sampler import Pipeline, Trajectory, denoise, invert
from .schedule import (
    DiffusionSchedule,
    EdmSchedule,
    build_ddim_schedule,
    build_ddpm_schedule,
    build_edm_schedule,
)
from .selection import select_noise
from .stability import StabilityRecord, round_trip, stability_score
from .testbed import (
    MixtureCondition,
    NoisePredictor,
    ZeroPredictor,
    diffused_log_density,
    load_conditions,
    predict_denoised,
    predict_noise,
)

__all__ = [
    "DiffusionSchedule",
    "EdmSchedule",
    "MixtureCondition",
    "NoiseLabError",
    "NoisePredictor",
    "OptimizationTrace",
    "PRESETS",
    "Pipeline",
    "QualityScores",
    "StabilityRecord",
    "Trajectory",
    "ZeroPredictor",
    "build_ddim_schedule",
    "build_ddpm_schedule",
    "build_edm_schedule",
    "cosine_loss",
    "cosine_loss_grad",
    "denoise",
    "diffused_log_density",
    "invert",
    "load_conditions",
    "optimize_noise",
    "predict_denoised",
    "predict_noise",
    "rank_correlation",
    "round_trip",
    "sample_gaussian",
    "sample_quality",
    "select_noise",
    "stability_score",
    "winning_rate",
]
