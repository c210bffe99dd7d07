"""Coefficient tables for the two sampler families.

``DiffusionSchedule`` holds the discrete DDPM/DDIM variance schedule
(β_t, α_t = 1 − β_t, ᾱ_t = ∏ α_s) with the convention ᾱ_0 = 1, so that
``alpha_bar`` has ``T + 1`` entries and ``beta``/``alpha`` have ``T``
(entry ``t - 1`` belongs to step ``t``).

``EdmSchedule`` holds a decreasing list of noise levels σ_0 > … > σ_{n-1}
followed by a terminal 0, plus the per-level preconditioning coefficients
(c_skip, c_out, c_in, c_noise) of the EDM parameterisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ConfigurationError, DomainError

ScheduleKind = Literal["linear", "cosine"]


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    # ancestral posterior std per step; only used by the stochastic sampler
    sigma: np.ndarray | None = None
    timesteps: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("beta", "alpha", "alpha_bar"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.sigma is None:
            ab = self.alpha_bar
            var = (1.0 - ab[:-1]) / (1.0 - ab[1:]) * self.beta
            sigma = np.sqrt(var)
            sigma.setflags(write=False)
            object.__setattr__(self, "sigma", sigma)
        self.validate()

    @property
    def T(self) -> int:
        return len(self.beta)

    def abar(self, t: int) -> float:
        if not 0 <= t <= self.T:
            raise DomainError(f"step index {t} outside [0, {self.T}]")
        return float(self.alpha_bar[t])

    def validate(self) -> None:
        b, a, ab = self.beta, self.alpha, self.alpha_bar
        if b.ndim != 1 or len(b) < 1:
            raise ConfigurationError("T", "schedule needs at least one step")
        if len(a) != len(b) or len(ab) != len(b) + 1:
            raise ConfigurationError("alpha_bar", "table lengths disagree (need len(alpha_bar) = T + 1)")
        if not np.all((b > 0) & (b < 1)):
            raise ConfigurationError("beta", "every beta_t must lie in (0, 1)")
        if not np.allclose(a, 1.0 - b, rtol=0, atol=1e-15):
            raise ConfigurationError("alpha", "alpha_t must equal 1 - beta_t")
        if ab[0] != 1.0:
            raise ConfigurationError("alpha_bar", "alpha_bar_0 must be 1")
        if not np.allclose(ab[1:], a * ab[:-1], rtol=1e-12, atol=0):
            raise ConfigurationError("alpha_bar", "alpha_bar_t must equal alpha_t * alpha_bar_{t-1}")
        if not np.all(np.diff(ab) < 0):
            raise ConfigurationError("alpha_bar", "alpha_bar must be strictly decreasing")

    def to_dict(self) -> dict:
        out = {"family": "ddim", "beta": self.beta.tolist(), "alpha_bar": self.alpha_bar.tolist()}
        if self.timesteps is not None:
            out["timesteps"] = list(self.timesteps)
        return out

    @classmethod
    def from_betas(cls, beta, timesteps=None) -> "DiffusionSchedule":
        beta = np.asarray(beta, dtype=np.float64)
        alpha = 1.0 - beta
        alpha_bar = np.concatenate([[1.0], np.cumprod(alpha)])
        return cls(beta=beta, alpha=alpha, alpha_bar=alpha_bar, timesteps=timesteps)

    @classmethod
    def from_alpha_bar(cls, alpha_bar, timesteps=None) -> "DiffusionSchedule":
        """Keep a given ᾱ table verbatim (avoids 1 − (1 − ᾱ) cancellation)."""
        ab = np.asarray(alpha_bar, dtype=np.float64)
        alpha = ab[1:] / ab[:-1]
        return cls(beta=1.0 - alpha, alpha=alpha, alpha_bar=ab, timesteps=timesteps)

    @classmethod
    def from_dict(cls, d: dict) -> "DiffusionSchedule":
        ts = d.get("timesteps")
        ts = tuple(ts) if ts is not None else None
        if "alpha_bar" in d:
            return cls.from_alpha_bar(d["alpha_bar"], timesteps=ts)
        return cls.from_betas(d["beta"], timesteps=ts)


def build_ddpm_schedule(
    T: int,
    beta_start: float = 1e-4,
    beta_end: float = 0.02,
    kind: ScheduleKind = "linear",
) -> DiffusionSchedule:
    """Build a T-step variance schedule.

    ``linear`` spaces β_t evenly from ``beta_start`` to ``beta_end``.
    ``cosine`` uses the squared-cosine ᾱ curve (offset s = 0.008) and clips
    each β_t into ``[beta_start, beta_end]``.
    """
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ConfigurationError("T", f"must be an integer >= 1, got {T!r}")
    if not 0 < beta_start < 1:
        raise ConfigurationError("beta_start", f"must lie in (0, 1), got {beta_start}")
    if not 0 < beta_end < 1:
        raise ConfigurationError("beta_end", f"must lie in (0, 1), got {beta_end}")
    if beta_start > beta_end:
        raise ConfigurationError("beta_start", f"must not exceed beta_end ({beta_start} > {beta_end})")

    if kind == "linear":
        beta = np.linspace(beta_start, beta_end, int(T), dtype=np.float64)
    elif kind == "cosine":
        s = 0.008
        steps = np.arange(int(T) + 1, dtype=np.float64) / T
        f = np.cos((steps + s) / (1 + s) * math.pi / 2) ** 2
        beta = np.clip(1.0 - f[1:] / f[:-1], beta_start, beta_end)
    else:
        raise ConfigurationError("kind", f"unknown schedule kind {kind!r}")
    return DiffusionSchedule.from_betas(beta)


def subsample_schedule(train: DiffusionSchedule, T: int) -> DiffusionSchedule:
    """Restrict a long training schedule to T evenly spaced ("trailing") timesteps.

    The returned schedule has per-step β_t = 1 − ᾱ_{τ_t}/ᾱ_{τ_{t−1}} so its
    ᾱ table equals the training ᾱ at τ_t = round(t·N/T).
    """
    N = train.T
    if not isinstance(T, (int, np.integer)) or not 1 <= T <= N:
        raise ConfigurationError("T", f"must be an integer in [1, {N}], got {T!r}")
    taus = np.round(np.arange(T + 1) * N / T).astype(int)
    return DiffusionSchedule.from_alpha_bar(train.alpha_bar[taus], timesteps=tuple(int(x) for x in taus[1:]))


def build_ddim_schedule(
    T: int,
    train_steps: int = 1000,
    beta_start: float = 1e-4,
    beta_end: float = 0.02,
    kind: ScheduleKind = "linear",
) -> DiffusionSchedule:
    """The default sampling schedule: a ``train_steps`` DDPM schedule subsampled to T steps."""
    return subsample_schedule(build_ddpm_schedule(train_steps, beta_start, beta_end, kind), T)


@dataclass(frozen=True)
class EdmCoefficients:
    c_skip: float
    c_out: float
    c_in: float
    c_noise: float


def edm_coefficients(sigma: float, sigma_data: float) -> EdmCoefficients:
    s2, d2 = sigma * sigma, sigma_data * sigma_data
    return EdmCoefficients(
        c_skip=d2 / (s2 + d2),
        c_out=sigma * sigma_data / math.sqrt(s2 + d2),
        c_in=1.0 / math.sqrt(s2 + d2),
        c_noise=0.25 * math.log(sigma),
    )


@dataclass(frozen=True, eq=False)
class EdmSchedule:
    sigma: np.ndarray  # length steps + 1, last entry 0
    sigma_data: float = 0.5
    coeffs: tuple[EdmCoefficients, ...] = field(default=())

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=np.float64)
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)
        if not self.coeffs:
            object.__setattr__(
                self, "coeffs", tuple(edm_coefficients(float(s), self.sigma_data) for s in sig[:-1])
            )
        self.validate()

    @property
    def steps(self) -> int:
        return len(self.sigma) - 1

    @property
    def T(self) -> int:
        return self.steps

    def validate(self) -> None:
        sig = self.sigma
        if sig.ndim != 1 or len(sig) < 2:
            raise ConfigurationError("steps", "need at least one level")
        if sig[-1] != 0.0 or np.any(sig[:-1] <= 0):
            raise ConfigurationError("sigma", "levels must be positive with a terminal 0")
        if not np.all(np.diff(sig) < 0):
            raise ConfigurationError("sigma", "levels must be strictly decreasing")
        if not self.sigma_data > 0:
            raise ConfigurationError("sigma_data", "must be positive")
        if len(self.coeffs) != self.steps:
            raise ConfigurationError("coeffs", "one coefficient record per nonzero level")
        for c in self.coeffs:
            vals = (c.c_skip, c.c_out, c.c_in, c.c_noise)
            if not all(math.isfinite(v) for v in vals) or not 0.0 <= c.c_skip <= 1.0:
                raise ConfigurationError("coeffs", f"invalid coefficient record {c}")

    def to_dict(self) -> dict:
        return {"family": "edm", "sigma": self.sigma.tolist(), "sigma_data": self.sigma_data}

    @classmethod
    def from_dict(cls, d: dict) -> "EdmSchedule":
        return cls(sigma=np.asarray(d["sigma"], dtype=np.float64), sigma_data=float(d.get("sigma_data", 0.5)))


def build_edm_schedule(
    steps: int,
    sigma_min: float = 0.002,
    sigma_max: float = 80.0,
    rho: float = 7.0,
    sigma_data: float = 0.5,
) -> EdmSchedule:
    """Karras power-ρ level spacing from ``sigma_max`` down to ``sigma_min``, then 0."""
    if not isinstance(steps, (int, np.integer)) or steps < 1:
        raise ConfigurationError("steps", f"must be an integer >= 1, got {steps!r}")
    if not sigma_min > 0:
        raise ConfigurationError("sigma_min", f"must be positive, got {sigma_min}")
    if not sigma_max > sigma_min:
        raise ConfigurationError("sigma_max", f"must exceed sigma_min ({sigma_max} <= {sigma_min})")
    if not rho > 0:
        raise ConfigurationError("rho", f"must be positive, got {rho}")
    if not sigma_data > 0:
        raise ConfigurationError("sigma_data", f"must be positive, got {sigma_data}")

    if steps == 1:
        levels = np.array([sigma_max], dtype=np.float64)
    else:
        ramp = np.arange(steps, dtype=np.float64) / (steps - 1)
        lo, hi = sigma_min ** (1.0 / rho), sigma_max ** (1.0 / rho)
        levels = (hi + ramp * (lo - hi)) ** rho
        # pin endpoints against pow round-off
        levels[0], levels[-1] = sigma_max, sigma_min
    return EdmSchedule(sigma=np.append(levels, 0.0), sigma_data=float(sigma_data))


def schedule_from_dict(d: dict) -> DiffusionSchedule | EdmSchedule:
    if d.get("family", "ddim") == "edm":
        return EdmSchedule.from_dict(d)
    return DiffusionSchedule.from_dict(d)
