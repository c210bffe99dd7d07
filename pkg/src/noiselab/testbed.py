"""Analytic noise predictor for Gaussian-mixture data.

For data x₀ ~ Σ_k w_k N(μ_k, Σ_k) the variance-preserving marginal at step t
is again a mixture,

    p_t(x) = Σ_k w_k N(x; √ᾱ_t μ_k, ᾱ_t Σ_k + (1 − ᾱ_t) I),

so the optimal noise prediction ε̂(x, t) = −√(1 − ᾱ_t) ∇ log p_t(x) and the
EDM posterior mean E[x₀ | x₀ + σ ε = x] have closed forms. Each covariance
is eigendecomposed once at construction; every later evaluation is a
rotation plus a diagonal solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError, DomainError, ShapeError
from .rng import sample_gaussian
from .schedule import DiffusionSchedule

_LOG_2PI = math.log(2.0 * math.pi)


def _logsumexp(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise log-sum-exp over the last axis and the normalised weights."""
    m = a.max(axis=-1, keepdims=True)
    e = np.exp(a - m)
    tot = e.sum(axis=-1, keepdims=True)
    return (np.log(tot) + m)[..., 0], e / tot


@dataclass(frozen=True, eq=False)
class MixtureCondition:
    """A named Gaussian mixture; the desk-scale stand-in for a prompt."""

    name: str
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    _evals: np.ndarray = field(init=False, repr=False)
    _evecs: np.ndarray = field(init=False, repr=False)
    _isotropic: bool = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        cov = np.asarray(self.covariances, dtype=np.float64)
        K, d = mu.shape
        if cov.shape != (K, d, d):
            raise ShapeError(f"{self.name}: covariances must have shape {(K, d, d)}, got {cov.shape}")
        if w.shape != (K,):
            raise ShapeError(f"{self.name}: need {K} weights, got {w.shape[0]}")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError("weights", f"{self.name}: weights must be positive and sum to 1")
        if not np.allclose(cov, np.swapaxes(cov, 1, 2), rtol=0, atol=1e-12):
            raise ConfigurationError("covariances", f"{self.name}: covariances must be symmetric")
        evals, evecs = np.linalg.eigh(cov)
        if np.any(evals <= 0):
            raise ConfigurationError("covariances", f"{self.name}: covariances must be positive-definite")
        iso = all(np.array_equal(c, c[0, 0] * np.eye(d)) for c in cov)
        if iso:
            evals = np.array([np.full(d, c[0, 0]) for c in cov])
            evecs = np.broadcast_to(np.eye(d), (K, d, d))
        for name, arr in (("weights", w), ("means", mu), ("covariances", cov), ("_evals", evals), ("_evecs", evecs)):
            arr = np.array(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_isotropic", iso)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @classmethod
    def isotropic(cls, name: str, weights, means, std) -> "MixtureCondition":
        mu = np.atleast_2d(np.asarray(means, dtype=np.float64))
        K, d = mu.shape
        std = np.broadcast_to(np.asarray(std, dtype=np.float64), (K,))
        cov = np.array([s * s * np.eye(d) for s in std])
        return cls(name, np.asarray(weights, dtype=np.float64), mu, cov)

    @classmethod
    def standard_normal(cls, dim: int, name: str = "standard_normal") -> "MixtureCondition":
        return cls.isotropic(name, [1.0], np.zeros((1, dim)), 1.0)

    def to_dict(self) -> dict:
        out = {"name": self.name, "dim": self.dim, "weights": self.weights.tolist(), "means": self.means.tolist()}
        if self._isotropic:
            out["std"] = np.sqrt(self.covariances[:, 0, 0]).tolist()
        else:
            out["covariances"] = self.covariances.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureCondition":
        name = d["name"]
        dim = int(d["dim"])
        weights = np.asarray(d["weights"], dtype=np.float64)
        weights = weights / weights.sum() if d.get("normalize_weights", False) else weights
        K = len(weights)
        if "means" in d:
            means = np.asarray(d["means"], dtype=np.float64)
        elif "random_means" in d:
            spec = d["random_means"]
            seed, scale = int(spec["seed"]), float(spec.get("scale", 1.0))
            means = np.array([scale * sample_gaussian(seed, dim, stream=k) / math.sqrt(dim) for k in range(K)])
        else:
            raise ConfigurationError("means", f"{name}: give 'means' or 'random_means'")
        if means.shape != (K, dim):
            raise ShapeError(f"{name}: means must have shape {(K, dim)}, got {means.shape}")
        if "covariances" in d:
            return cls(name, weights, means, np.asarray(d["covariances"], dtype=np.float64))
        return cls.isotropic(name, weights, means, d.get("std", 1.0))

    # -- closed-form machinery -------------------------------------------------

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ShapeError(f"{self.name}: expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def _components(self, x: np.ndarray, scale: float, noise_var: float):
        """Per-component log N, rotated offsets and eigenvalues of scale²Σ_k + noise_var·I."""
        x2 = np.atleast_2d(x)
        diff = x2[:, None, :] - scale * self.means[None, :, :]  # (n, K, d)
        ev = scale * scale * self._evals + noise_var  # (K, d)
        if self._isotropic:
            y = diff
        else:
            y = np.einsum("nkd,kde->nke", diff, self._evecs)
        mahal = np.sum(y * y / ev, axis=-1)
        logdet = np.sum(np.log(ev), axis=-1)
        logn = -0.5 * (self.dim * _LOG_2PI + logdet + mahal)
        return logn, y, ev

    def _rotate_back(self, y: np.ndarray) -> np.ndarray:
        if self._isotropic:
            return y
        return np.einsum("nke,kde->nkd", y, self._evecs)

    def log_density(self, x, scale: float = 1.0, noise_var: float = 0.0) -> np.ndarray | float:
        x = self._check(x)
        logn, _, _ = self._components(x, scale, noise_var)
        out, _ = _logsumexp(logn + np.log(self.weights))
        return float(out[0]) if x.ndim == 1 else out

    def score(self, x, scale: float = 1.0, noise_var: float = 0.0) -> np.ndarray:
        """∇ log of Σ_k w_k N(x; scale·μ_k, scale²Σ_k + noise_var·I)."""
        x = self._check(x)
        logn, y, ev = self._components(x, scale, noise_var)
        _, r = _logsumexp(logn + np.log(self.weights))  # (n, K)
        grads = -self._rotate_back(y / ev)  # (n, K, d)
        out = np.einsum("nk,nkd->nd", r, grads)
        return out[0] if x.ndim == 1 else out

    def score_jacobian(self, x, scale: float = 1.0, noise_var: float = 0.0) -> np.ndarray:
        """Hessian of the log density at a single point x of shape (d,).

        Σ_k r_k (−P_k) + Σ_k r_k g_k g_kᵀ − s sᵀ with P_k the component
        precision, g_k the component score and s the mixture score.
        """
        x = self._check(x)
        if x.ndim != 1:
            raise ShapeError("score_jacobian takes a single point")
        logn, y, ev = self._components(x, scale, noise_var)
        _, r = _logsumexp(logn[0] + np.log(self.weights))
        g = -self._rotate_back(y / ev)[0]  # (K, d)
        s = r @ g
        if self._isotropic:
            prec = np.einsum("k,kd->d", r, 1.0 / ev)
            H = -np.diag(prec)
        else:
            Q = self._evecs
            P = np.einsum("kde,ke,kfe->kdf", Q, 1.0 / ev, Q)
            H = -np.einsum("k,kdf->df", r, P)
        H += np.einsum("k,kd,kf->df", r, g, g) - np.outer(s, s)
        return H

    def posterior_mean(self, x, sigma: float) -> np.ndarray:
        """E[x₀ | x₀ + σ·ε = x]."""
        x = self._check(x)
        logn, y, ev = self._components(x, 1.0, sigma * sigma)
        _, r = _logsumexp(logn + np.log(self.weights))
        shrunk = self._rotate_back(y * (self._evals / ev))  # Σ_k C_k⁻¹ (x − μ_k)
        comp = self.means[None, :, :] + shrunk
        out = np.einsum("nk,nkd->nd", r, comp)
        return out[0] if x.ndim == 1 else out


def diffused_log_density(x, t: int, c: MixtureCondition, sched: DiffusionSchedule):
    """log p_t(x) for the VP-diffused mixture (t = 0 gives the data density)."""
    ab = sched.abar(t)
    return c.log_density(x, math.sqrt(ab), 1.0 - ab)


def predict_noise(x, t: int, c: MixtureCondition, sched: DiffusionSchedule) -> np.ndarray:
    if t < 1:
        raise DomainError(f"noise prediction needs t >= 1, got t={t}")
    ab = sched.abar(t)
    return -math.sqrt(1.0 - ab) * c.score(x, math.sqrt(ab), 1.0 - ab)


def predict_denoised(x, sigma: float, c: MixtureCondition) -> np.ndarray:
    if not sigma > 0:
        raise DomainError(f"denoiser needs sigma > 0, got {sigma}")
    return c.posterior_mean(x, float(sigma))


@dataclass(frozen=True, eq=False)
class NoisePredictor:
    """The model u_θ bound to one condition. Stateless and picklable."""

    condition: MixtureCondition
    schedule: DiffusionSchedule | None = None

    @property
    def dim(self) -> int:
        return self.condition.dim

    def noise(self, x, t: int) -> np.ndarray:
        return predict_noise(x, t, self.condition, self.schedule)

    def denoised(self, x, sigma: float) -> np.ndarray:
        return predict_denoised(x, sigma, self.condition)

    def noise_jacobian(self, x, t: int) -> np.ndarray:
        if t < 1:
            raise DomainError(f"noise prediction needs t >= 1, got t={t}")
        ab = self.schedule.abar(t)
        return -math.sqrt(1.0 - ab) * self.condition.score_jacobian(x, math.sqrt(ab), 1.0 - ab)

    def denoised_jacobian(self, x, sigma: float) -> np.ndarray:
        # Tweedie: D(x) = x + σ² ∇ log p_σ(x)
        s2 = float(sigma) ** 2
        return np.eye(self.dim) + s2 * self.condition.score_jacobian(x, 1.0, s2)


@dataclass(frozen=True)
class ZeroPredictor:
    """ε̂ ≡ 0. In EDM form this is the identity denoiser D(x) = x − σ·0."""

    dim: int

    def noise(self, x, t: int) -> np.ndarray:
        if t < 1:
            raise DomainError(f"noise prediction needs t >= 1, got t={t}")
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def denoised(self, x, sigma: float) -> np.ndarray:
        return np.array(x, dtype=np.float64)

    def noise_jacobian(self, x, t: int) -> np.ndarray:
        return np.zeros((self.dim, self.dim))

    def denoised_jacobian(self, x, sigma: float) -> np.ndarray:
        return np.eye(self.dim)


def default_suite_path() -> Path:
    return Path(str(resources.files("noiselab") / "data" / "conditions.yaml"))


def load_conditions(path: str | Path | None = None) -> dict[str, MixtureCondition]:
    """Read a condition suite (YAML with a top-level ``conditions`` list), keyed by name."""
    path = Path(path) if path is not None else default_suite_path()
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    entries = doc["conditions"] if isinstance(doc, dict) else doc
    out: dict[str, MixtureCondition] = {}
    for entry in entries:
        cond = MixtureCondition.from_dict(entry)
        if cond.name in out:
            raise ConfigurationError("conditions", f"duplicate condition name {cond.name!r}")
        out[cond.name] = cond
    return out
