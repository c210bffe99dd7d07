"""Round-trip transform ε → x₀ → ε′ and the cosine inversion-stability score."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConsistencyError, DegenerateInputError, ShapeError
from .metrics import QualityScores, sample_quality
from .sampler import Pipeline

CLAMP_TOL = 1e-12


def flatten(v) -> np.ndarray:
    """Row-major flatten; multi-axis noises (e.g. C×H×W) become one vector."""
    return np.asarray(v, dtype=np.float64).reshape(-1)


def cosine(a, b) -> float:
    a, b = flatten(a), flatten(b)
    if a.shape != b.shape:
        raise ShapeError(f"cosine of vectors with different sizes {a.size} and {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine similarity of a zero-norm vector")
    c = float(a @ b / (na * nb))
    if math.isnan(c):
        return c  # non-finite input; callers decide whether that is fatal
    if abs(c) > 1.0 + CLAMP_TOL:
        raise ConsistencyError(f"cosine {c!r} outside [-1, 1] beyond rounding tolerance")
    return max(-1.0, min(1.0, c))


def stability_score(eps, eps_prime) -> float:
    return cosine(eps, eps_prime)


def round_trip(eps, pipeline: Pipeline) -> tuple[np.ndarray, np.ndarray]:
    """Return (x₀, ε′) with x₀ = denoise(ε) and ε′ = invert(x₀)."""
    if pipeline.stochastic:
        raise ConfigurationError("stochastic", "round trips require the deterministic sampler")
    eps = np.asarray(eps, dtype=np.float64)
    if not np.all(np.isfinite(eps)):
        raise DegenerateInputError("noise contains non-finite entries")
    x0 = pipeline.denoise(eps).end
    eps_prime = pipeline.invert(x0).end / pipeline.noise_scale
    return x0, eps_prime


@dataclass(frozen=True, eq=False)
class StabilityRecord:
    seed: int
    epsilon: np.ndarray
    epsilon_prime: np.ndarray
    score: float
    x0: np.ndarray
    quality: QualityScores | None = None

    @property
    def norm_eps(self) -> float:
        return float(np.linalg.norm(self.epsilon))

    @property
    def norm_eps_prime(self) -> float:
        return float(np.linalg.norm(self.epsilon_prime))


def stability_record(seed: int, eps, pipeline: Pipeline) -> StabilityRecord:
    x0, eps_prime = round_trip(eps, pipeline)
    cond = getattr(pipeline.predictor, "condition", None)
    quality = sample_quality(x0, cond) if cond is not None else None
    return StabilityRecord(seed, np.asarray(eps, dtype=np.float64), eps_prime, stability_score(eps, eps_prime), x0, quality)
