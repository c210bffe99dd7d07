"""Sample-quality scores on the analytic testbed, and paired-comparison statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DomainError, ShapeError
from .testbed import MixtureCondition


@dataclass(frozen=True)
class QualityScores:
    loglik: float
    mode_dist: float
    mahalanobis: float

    def as_dict(self) -> dict:
        return {"loglik": self.loglik, "mode_dist": self.mode_dist, "mahalanobis": self.mahalanobis}


def sample_quality(x0, c: MixtureCondition) -> QualityScores:
    """Log-likelihood under the data mixture plus distances to the nearest mode.

    The nearest component is chosen by Euclidean distance to its mean (ties
    go to the lowest index); the Mahalanobis distance uses that component's
    covariance.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (c.dim,):
        raise ShapeError(f"{c.name}: expected a vector of length {c.dim}, got shape {x0.shape}")
    dists = np.linalg.norm(c.means - x0, axis=1)
    k = int(np.argmin(dists))
    diff = x0 - c.means[k]
    maha = float(np.sqrt(diff @ np.linalg.solve(c.covariances[k], diff)))
    return QualityScores(loglik=float(c.log_density(x0)), mode_dist=float(dists[k]), mahalanobis=maha)


def winning_rate(pairs: Iterable[tuple[float, float]]) -> float:
    """Fraction of pairs where the first score beats the second; ties count one half."""
    pairs = list(pairs)
    if not pairs:
        raise DomainError("winning_rate needs at least one pair")
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a, b in pairs)
    return wins / len(pairs)


def rank_correlation(a: Sequence[float], b: Sequence[float]) -> tuple[float, int]:
    """Spearman's rho with average ranks for ties."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError(f"rank_correlation: length mismatch ({a.shape} vs {b.shape})")
    n = len(a)
    if n < 3:
        raise DomainError(f"rank_correlation: need at least 3 observations, got {n}")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DomainError("rank_correlation: constant input has no ranking")
    ra, rb = rankdata(a), rankdata(b)
    ra -= ra.mean()
    rb -= rb.mean()
    rho = float(ra @ rb / math.sqrt((ra @ ra) * (rb @ rb)))
    return max(-1.0, min(1.0, rho)), n
