"""Noise optimization: momentum gradient descent on J(ε) = 1 − cos(ε, ε′).

Each iteration regenerates ε′ = F(ε) through the sampler and then treats it
as a constant, so the gradient is the closed-form gradient of the cosine
loss in ε alone. Nothing is differentiated through the sampler::

    ∇_ε J = −(ε′ / (‖ε‖‖ε′‖) − cos(ε, ε′) · ε / ‖ε‖²)
    m_i   = β m_{i−1} + ∇_ε J,     m_0 = 0
    ε     ← ε − η_i m_i
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, DivergenceError
from .sampler import Pipeline
from .stability import cosine, flatten, round_trip

LrSchedule = Literal["constant", "cosine_annealing"]
ReturnPolicy = Literal["last", "best"]


@dataclass(frozen=True)
class OptimizerSettings:
    n: int = 100
    lr: float = 0.5
    momentum: float = 0.5
    lr_schedule: LrSchedule = "cosine_annealing"
    return_policy: ReturnPolicy = "last"

    def validate(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ConfigurationError("n", f"must be an integer >= 0, got {self.n!r}")
        if not self.lr > 0:
            raise ConfigurationError("lr", f"must be positive, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError("momentum", f"must lie in [0, 1), got {self.momentum}")
        if self.lr_schedule not in ("constant", "cosine_annealing"):
            raise ConfigurationError("lr_schedule", f"unknown schedule {self.lr_schedule!r}")
        if self.return_policy not in ("last", "best"):
            raise ConfigurationError("return_policy", f"unknown policy {self.return_policy!r}")


# η is in units of ‖ε‖² ≈ d; the paper-scale value targets SDXL latents.
PRESETS = {
    "testbed": OptimizerSettings(n=100, lr=0.5, momentum=0.5, lr_schedule="cosine_annealing"),
    "paper": OptimizerSettings(n=100, lr=100.0, momentum=0.5, lr_schedule="cosine_annealing"),
}


def cosine_loss(eps, eps_prime) -> float:
    return 1.0 - cosine(eps, eps_prime)


def cosine_loss_grad(eps, eps_prime) -> np.ndarray:
    """Gradient of 1 − cos(ε, ε′) in ε with ε′ held fixed; same shape as ``eps``."""
    shape = np.shape(eps)
    e, ep = flatten(eps), flatten(eps_prime)
    ne, nep = np.linalg.norm(e), np.linalg.norm(ep)
    if ne == 0.0 or nep == 0.0:
        raise DegenerateInputError("cosine loss gradient at a zero-norm vector")
    cos = float(e @ ep) / (ne * nep)
    return (-(ep / (ne * nep) - cos * e / (ne * ne))).reshape(shape)


def learning_rate(i: int, n: int, lr: float, schedule: LrSchedule) -> float:
    if schedule == "constant":
        return lr
    if schedule == "cosine_annealing":
        return lr * 0.5 * (1.0 + math.cos(math.pi * i / n))
    raise ConfigurationError("lr_schedule", f"unknown schedule {schedule!r}")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    loss: float
    stability: float
    lr: float
    momentum_norm: float
    step_norm: float


@dataclass(eq=False)
class OptimizationTrace:
    initial: np.ndarray
    iterates: list[IterationRecord] = field(default_factory=list)
    final: np.ndarray | None = None
    final_loss: float = math.nan
    best: np.ndarray | None = None
    best_loss: float = math.nan
    best_index: int = 0

    def __len__(self) -> int:
        return len(self.iterates)

    @property
    def initial_loss(self) -> float:
        return self.iterates[0].loss if self.iterates else self.final_loss

    @property
    def losses(self) -> list[float]:
        """J at ε_0 … ε_n (the last entry is the final iterate)."""
        return [r.loss for r in self.iterates] + [self.final_loss]


def optimize_noise(
    eps0,
    pipeline: Pipeline | None = None,
    n: int = 100,
    lr: float = 0.5,
    momentum: float = 0.5,
    lr_schedule: LrSchedule = "cosine_annealing",
    return_policy: ReturnPolicy = "last",
    *,
    inverse: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, OptimizationTrace]:
    """Run ``n`` momentum steps from ``eps0``.

    ``inverse`` maps a noise to its ε′; by default it is the pipeline round
    trip. The loss of the final iterate is evaluated once more after the
    loop so ``return_policy="best"`` can consider every iterate ε_0 … ε_n.
    """
    OptimizerSettings(n, lr, momentum, lr_schedule, return_policy).validate()
    if inverse is None:
        if pipeline is None:
            raise ConfigurationError("pipeline", "need a pipeline or an inverse map")
        inverse = lambda e: round_trip(e, pipeline)[1]  # noqa: E731

    eps = np.array(eps0, dtype=np.float64)
    trace = OptimizationTrace(initial=eps.copy())
    m = np.zeros_like(eps)
    best, best_loss, best_index = eps.copy(), math.inf, 0

    for i in range(n):
        eps_prime = inverse(eps)
        loss = cosine_loss(eps, eps_prime)
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss at iteration {i}", trace)
        if loss < best_loss:
            best, best_loss, best_index = eps.copy(), loss, i
        g = cosine_loss_grad(eps, eps_prime)
        m = momentum * m + g
        eta = learning_rate(i, n, lr, lr_schedule)
        step = eta * m
        eps = eps - step
        trace.iterates.append(
            IterationRecord(i, loss, 1.0 - loss, eta, float(np.linalg.norm(m)), float(np.linalg.norm(step)))
        )
        if not np.all(np.isfinite(eps)):
            raise DivergenceError(f"non-finite iterate after iteration {i}", trace)

    final_loss = cosine_loss(eps, inverse(eps))
    if not math.isfinite(final_loss):
        raise DivergenceError("non-finite loss at the final iterate", trace)
    if final_loss < best_loss:
        best, best_loss, best_index = eps.copy(), final_loss, n
    trace.final, trace.final_loss = eps, final_loss
    trace.best, trace.best_loss, trace.best_index = best, best_loss, best_index
    return (eps if return_policy == "last" else best), trace
