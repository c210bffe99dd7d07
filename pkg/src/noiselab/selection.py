"""Noise selection: score K seeded noises and keep the most (or least) stable one."""

from __future__ import annotations

from functools import partial
from typing import Literal, Sequence

import numpy as np

from .errors import ConfigurationError, NoiseLabError, SeedError
from .parallel import ordered_map
from .rng import sample_gaussian
from .sampler import Pipeline
from .stability import StabilityRecord, stability_record

Objective = Literal["max", "min"]

# scores closer than this are rounding noise of the cosine and count as tied
TIE_TOL = 1e-12


def pick(scores: Sequence[float], objective: Objective = "max", tie_tol: float = TIE_TOL) -> int:
    """Index of the best score; ties (within ``tie_tol``) resolve to the lowest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ConfigurationError("K", "nothing to select from")
    if objective == "max":
        best = scores.max()
        return int(np.flatnonzero(scores >= best - tie_tol)[0])
    if objective == "min":
        best = scores.min()
        return int(np.flatnonzero(scores <= best + tie_tol)[0])
    raise ConfigurationError("objective", f"must be 'max' or 'min', got {objective!r}")


def _seed_record(seed: int, pipeline: Pipeline) -> StabilityRecord:
    eps = sample_gaussian(seed, pipeline.predictor.dim)
    try:
        return stability_record(seed, eps, pipeline)
    except NoiseLabError as exc:
        cond = getattr(pipeline.predictor, "condition", None)
        raise SeedError(seed, exc, getattr(cond, "name", None)) from exc


def score_seeds(pipeline: Pipeline, seeds: Sequence[int], jobs: int = 1) -> list[StabilityRecord]:
    return ordered_map(partial(_seed_record, pipeline=pipeline), list(seeds), jobs)


def select_noise(
    pipeline: Pipeline,
    K: int = 100,
    objective: Objective = "max",
    jobs: int = 1,
) -> tuple[StabilityRecord, list[StabilityRecord]]:
    """Evaluate seeds 0 … K−1 and return the chosen record plus all records by seed.

    Any failing seed aborts the whole selection.
    """
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise ConfigurationError("K", f"must be an integer >= 1, got {K!r}")
    pick([0.0], objective)  # validate before doing any work
    records = score_seeds(pipeline, range(K), jobs)
    return records[pick([r.score for r in records], objective)], records
