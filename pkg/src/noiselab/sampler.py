"""Deterministic denoising and noise-inversion paths for DDIM and EDM.

DDIM (step t: x_t → x_{t−1}, with ε̂ = u(x_t, t))::

    x_{t−1} = √(ᾱ_{t−1}/ᾱ_t) x_t + √ᾱ_{t−1} (√((1−ᾱ_{t−1})/ᾱ_{t−1}) − √((1−ᾱ_t)/ᾱ_t)) ε̂

Its algebraic inverse is::

    x_t = √(ᾱ_t/ᾱ_{t−1}) x_{t−1} + √ᾱ_t (√((1−ᾱ_t)/ᾱ_t) − √((1−ᾱ_{t−1})/ᾱ_{t−1})) ε̂

Approximate inversion evaluates ε̂ at (x_{t−1}, t) because x_t is unknown.
The commonly printed form puts √ᾱ_{t−1} in front of the bracket instead of
√ᾱ_t; that variant is available with ``paper_coefficient=True`` but is not
an exact inverse of the update above.

EDM (level i: σ_i → σ_{i+1}, Euler)::

    μ = x − (c_skip x + c_out U),    x' = x + (σ_{i+1} − σ_i)/σ_i · μ

with U the network output at level σ_i. The analytic testbed supplies the
denoiser D = c_skip x + c_out U directly, so U = (D − c_skip x)/c_out.
Solving the Euler step for x gives the inversion::

    x = (σ_i x' + (σ_{i+1} − σ_i) c_out U) / ((σ_{i+1} − σ_i)(1 − c_skip) + σ_i)

``exact`` inversion mode solves each implicit step for the noisier state,
seeded from the approximate answer. The default solver is damped Newton on
the closed-form predictor Jacobian; ``solver="fixed_point"`` iterates the
inverse formula instead, which stalls on the last (posterior-mean) step of
short schedules where the map is close to non-contractive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Protocol

import numpy as np

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateInputError,
    DomainError,
    NoiseLabError,
    StepError,
)
from .rng import sample_gaussian
from .schedule import DiffusionSchedule, EdmSchedule

InversionMode = Literal["approx", "exact"]
Solver = Literal["newton", "fixed_point"]

FP_TOL = 1e-10
MAX_ITER = 50


class Predictor(Protocol):
    def noise(self, x: np.ndarray, t: int) -> np.ndarray: ...

    def denoised(self, x: np.ndarray, sigma: float) -> np.ndarray: ...


# -- DDIM ---------------------------------------------------------------------


def _check_t(t: int, sched: DiffusionSchedule) -> None:
    if not 1 <= t <= sched.T:
        raise DomainError(f"DDIM step index must lie in [1, {sched.T}], got {t}")


def ddim_coefficients(t: int, sched: DiffusionSchedule) -> tuple[float, float]:
    """(state scale, noise coefficient) of the denoising update at step t."""
    _check_t(t, sched)
    ab_t, ab_prev = sched.abar(t), sched.abar(t - 1)
    scale = math.sqrt(ab_prev / ab_t)
    coef = math.sqrt(ab_prev) * (math.sqrt((1 - ab_prev) / ab_prev) - math.sqrt((1 - ab_t) / ab_t))
    return scale, coef


def ddim_inverse_coefficients(t: int, sched: DiffusionSchedule, paper_coefficient: bool = False) -> tuple[float, float]:
    _check_t(t, sched)
    ab_t, ab_prev = sched.abar(t), sched.abar(t - 1)
    scale = math.sqrt(ab_t / ab_prev)
    lead = math.sqrt(ab_prev) if paper_coefficient else math.sqrt(ab_t)
    coef = lead * (math.sqrt((1 - ab_t) / ab_t) - math.sqrt((1 - ab_prev) / ab_prev))
    return scale, coef


def ddim_update(x_t, eps, t: int, sched: DiffusionSchedule) -> np.ndarray:
    scale, coef = ddim_coefficients(t, sched)
    return scale * np.asarray(x_t, dtype=np.float64) + coef * np.asarray(eps, dtype=np.float64)


def ddim_inverse_update(x_prev, eps, t: int, sched: DiffusionSchedule, paper_coefficient: bool = False) -> np.ndarray:
    scale, coef = ddim_inverse_coefficients(t, sched, paper_coefficient)
    return scale * np.asarray(x_prev, dtype=np.float64) + coef * np.asarray(eps, dtype=np.float64)


def ddim_denoise_step(x_t, t: int, sched: DiffusionSchedule, predictor: Predictor) -> np.ndarray:
    _check_t(t, sched)
    return ddim_update(x_t, predictor.noise(x_t, t), t, sched)


def ddim_ancestral_step(x_t, t: int, sched: DiffusionSchedule, predictor: Predictor, z) -> np.ndarray:
    """Stochastic DDPM step with posterior std σ_t and injected noise ``z``."""
    _check_t(t, sched)
    x_t = np.asarray(x_t, dtype=np.float64)
    eps = predictor.noise(x_t, t)
    alpha, beta = sched.alpha[t - 1], sched.beta[t - 1]
    mean = (x_t - beta / math.sqrt(1.0 - sched.abar(t)) * eps) / math.sqrt(alpha)
    return mean + sched.sigma[t - 1] * np.asarray(z, dtype=np.float64)


def _fixed_point(update, x0: np.ndarray, fp_tol: float, max_iter: int, residual) -> np.ndarray:
    x = x0
    for _ in range(max_iter):
        x_new = update(x)
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        if not np.all(np.isfinite(x)):
            break
        if step <= fp_tol * max(1.0, float(np.linalg.norm(x))):
            return x
    raise ConvergenceError("exact inversion did not converge", residual(x), max_iter)


def _newton(update, d_update, x0: np.ndarray, fp_tol: float, max_iter: int, residual) -> np.ndarray:
    """Damped Newton on R(z) = z − update(z) with backtracking on ‖R‖."""
    z = x0
    r = z - update(z)
    rn = float(np.linalg.norm(r))
    eye = np.eye(z.size)
    for _ in range(max_iter):
        if rn == 0.0:
            return z
        try:
            delta = np.linalg.solve(eye - d_update(z), r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while True:
            z_new = z - lam * delta
            r_new = z_new - update(z_new)
            rn_new = float(np.linalg.norm(r_new))
            if rn_new <= rn or lam < 2.0**-20:
                break
            lam *= 0.5
        if not np.all(np.isfinite(z_new)):
            break
        step = lam * float(np.linalg.norm(delta))
        z, r, rn = z_new, r_new, rn_new
        if step <= fp_tol * max(1.0, float(np.linalg.norm(z))):
            return z
    raise ConvergenceError("exact inversion did not converge", residual(z), max_iter)


def _solve(update, d_update, x0, predictor, solver: str, fp_tol: float, max_iter: int, residual) -> np.ndarray:
    if solver == "newton" and _has_jacobian(predictor):
        return _newton(update, d_update, x0, fp_tol, max_iter, residual)
    if solver not in ("newton", "fixed_point"):
        raise ConfigurationError("solver", f"unknown solver {solver!r}")
    return _fixed_point(update, x0, fp_tol, max_iter, residual)


def _has_jacobian(predictor) -> bool:
    return hasattr(predictor, "noise_jacobian") and hasattr(predictor, "denoised_jacobian")


def ddim_invert_step(
    x_prev,
    t: int,
    sched: DiffusionSchedule,
    predictor: Predictor,
    mode: InversionMode = "approx",
    *,
    fp_tol: float = FP_TOL,
    max_iter: int = MAX_ITER,
    paper_coefficient: bool = False,
    solver: Solver = "newton",
) -> np.ndarray:
    """x_{t−1} → x_t."""
    _check_t(t, sched)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    x = ddim_inverse_update(x_prev, predictor.noise(x_prev, t), t, sched, paper_coefficient)
    if mode == "approx":
        return x
    if mode != "exact":
        raise ConfigurationError("mode", f"unknown inversion mode {mode!r}")
    _, coef = ddim_inverse_coefficients(t, sched, paper_coefficient)
    return _solve(
        lambda z: ddim_inverse_update(x_prev, predictor.noise(z, t), t, sched, paper_coefficient),
        lambda z: coef * predictor.noise_jacobian(z, t),
        x,
        predictor,
        solver,
        fp_tol,
        max_iter,
        lambda z: float(np.linalg.norm(ddim_denoise_step(z, t, sched, predictor) - x_prev)),
    )


# -- EDM ----------------------------------------------------------------------


def _check_level(i: int, sched: EdmSchedule) -> None:
    if not 0 <= i < sched.steps:
        raise DomainError(f"EDM level index must lie in [0, {sched.steps - 1}], got {i}")


def edm_output(x, i: int, sched: EdmSchedule, predictor: Predictor) -> np.ndarray:
    """The network output U at level σ_i implied by the predictor's denoiser."""
    _check_level(i, sched)
    c = sched.coeffs[i]
    x = np.asarray(x, dtype=np.float64)
    return (predictor.denoised(x, float(sched.sigma[i])) - c.c_skip * x) / c.c_out


def edm_update(x, U, i: int, sched: EdmSchedule) -> np.ndarray:
    _check_level(i, sched)
    s_cur, s_next = float(sched.sigma[i]), float(sched.sigma[i + 1])
    if s_cur == 0.0:
        raise DomainError("EDM step from a zero noise level")
    c = sched.coeffs[i]
    x = np.asarray(x, dtype=np.float64)
    mu = x - (c.c_skip * x + c.c_out * np.asarray(U, dtype=np.float64))
    return x + ((s_next - s_cur) / s_cur) * mu


def _edm_denominator(i: int, sched: EdmSchedule) -> float:
    s_hi, s_lo = float(sched.sigma[i]), float(sched.sigma[i + 1])
    c = sched.coeffs[i]
    return s_lo * (1.0 - c.c_skip) + s_hi * c.c_skip


def edm_inverse_update(x_lo, U, i: int, sched: EdmSchedule) -> np.ndarray:
    _check_level(i, sched)
    s_hi, s_lo = float(sched.sigma[i]), float(sched.sigma[i + 1])
    c = sched.coeffs[i]
    # (σ_lo − σ_hi)(1 − c_skip) + σ_hi, regrouped to avoid cancellation at σ_lo = 0
    denom = _edm_denominator(i, sched)
    if denom == 0.0:
        raise DegenerateInputError(f"EDM inversion denominator vanishes at level {i}")
    return (s_hi * np.asarray(x_lo, dtype=np.float64) + (s_lo - s_hi) * c.c_out * np.asarray(U, dtype=np.float64)) / denom


def edm_denoise_step(x, i: int, sched: EdmSchedule, predictor: Predictor) -> np.ndarray:
    """σ_i → σ_{i+1}.

    Same as ``edm_update(x, edm_output(...))`` but with μ = x − D(x) taken
    straight from the denoiser, which skips a c_skip/c_out round trip.
    """
    _check_level(i, sched)
    s_cur, s_next = float(sched.sigma[i]), float(sched.sigma[i + 1])
    x = np.asarray(x, dtype=np.float64)
    mu = x - predictor.denoised(x, s_cur)
    return x + ((s_next - s_cur) / s_cur) * mu


def _edm_inverse_from_denoised(x_lo, z, D, i: int, sched: EdmSchedule) -> np.ndarray:
    """edm_inverse_update with c_out·U(z) = D(z) − c_skip·z substituted, as an increment on x_lo."""
    s_hi, s_lo = float(sched.sigma[i]), float(sched.sigma[i + 1])
    c_skip = sched.coeffs[i].c_skip
    inc = (x_lo - D) + c_skip * (z - x_lo)
    return x_lo + ((s_hi - s_lo) / _edm_denominator(i, sched)) * inc


def edm_invert_step(
    x_lo,
    i: int,
    sched: EdmSchedule,
    predictor: Predictor,
    mode: InversionMode = "approx",
    *,
    fp_tol: float = FP_TOL,
    max_iter: int = MAX_ITER,
    solver: Solver = "newton",
) -> np.ndarray:
    """σ_{i+1} → σ_i; approx mode evaluates U at the lower-noise state."""
    _check_level(i, sched)
    x_lo = np.asarray(x_lo, dtype=np.float64)
    sigma = float(sched.sigma[i])
    if _edm_denominator(i, sched) == 0.0:
        raise DegenerateInputError(f"EDM inversion denominator vanishes at level {i}")

    def update(z):
        return _edm_inverse_from_denoised(x_lo, z, predictor.denoised(z, sigma), i, sched)

    x = update(x_lo)
    if mode == "approx":
        return x
    if mode != "exact":
        raise ConfigurationError("mode", f"unknown inversion mode {mode!r}")
    c_skip = sched.coeffs[i].c_skip
    k = (float(sched.sigma[i + 1]) - sigma) / _edm_denominator(i, sched)
    eye = np.eye(x.size)
    return _solve(
        update,
        lambda z: k * (predictor.denoised_jacobian(z, sigma) - c_skip * eye),
        x,
        predictor,
        solver,
        fp_tol,
        max_iter,
        lambda z: float(np.linalg.norm(edm_denoise_step(z, i, sched, predictor) - x_lo)),
    )


# -- trajectories -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States in traversal order; ``steps[k]`` labels ``states[k]``.

    DDIM labels are step indices (T … 0 when denoising). EDM labels are
    level indices 0 … n, where level n has σ = 0.
    """

    states: np.ndarray
    steps: tuple[int, ...]
    family: str
    mode: str

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class Pipeline:
    """A predictor, a schedule, and the inversion settings used for F."""

    predictor: Predictor
    schedule: DiffusionSchedule | EdmSchedule
    mode: InversionMode = "approx"
    fp_tol: float = FP_TOL
    max_iter: int = MAX_ITER
    paper_coefficient: bool = False
    solver: Solver = "newton"
    stochastic: bool = False
    noise_seed: int = 0
    family: str = field(init=False)

    def __post_init__(self):
        fam = "edm" if isinstance(self.schedule, EdmSchedule) else "ddim"
        object.__setattr__(self, "family", fam)
        if self.mode not in ("approx", "exact"):
            raise ConfigurationError("mode", f"unknown inversion mode {self.mode!r}")
        if self.stochastic and fam == "edm":
            raise ConfigurationError("stochastic", "the ancestral sampler is DDIM-only")
        if not self.fp_tol > 0:
            raise ConfigurationError("fp_tol", "must be positive")
        if self.solver not in ("newton", "fixed_point"):
            raise ConfigurationError("solver", f"unknown solver {self.solver!r}")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter", "must be >= 1")

    @property
    def T(self) -> int:
        return self.schedule.T

    @property
    def noise_scale(self) -> float:
        """x_T = noise_scale · ε (σ_max for EDM, 1 for DDIM)."""
        return float(self.schedule.sigma[0]) if self.family == "edm" else 1.0

    def replace(self, **changes) -> "Pipeline":
        kw = dict(
            predictor=self.predictor,
            schedule=self.schedule,
            mode=self.mode,
            fp_tol=self.fp_tol,
            max_iter=self.max_iter,
            paper_coefficient=self.paper_coefficient,
            solver=self.solver,
            stochastic=self.stochastic,
            noise_seed=self.noise_seed,
        )
        kw.update(changes)
        return Pipeline(**kw)

    def denoise(self, eps) -> Trajectory:
        x = self.noise_scale * np.asarray(eps, dtype=np.float64)
        states = [x]
        if self.family == "ddim":
            order = range(self.T, 0, -1)
            labels = (self.T, *range(self.T - 1, -1, -1))
        else:
            order = range(self.T)
            labels = tuple(range(self.T + 1))
        for k in order:
            try:
                if self.family == "edm":
                    x = edm_denoise_step(x, k, self.schedule, self.predictor)
                elif self.stochastic:
                    z = sample_gaussian(self.noise_seed, x.size, stream=k).reshape(x.shape)
                    x = ddim_ancestral_step(x, k, self.schedule, self.predictor, z)
                else:
                    x = ddim_denoise_step(x, k, self.schedule, self.predictor)
            except NoiseLabError as exc:
                raise StepError(k, exc) from exc
            states.append(x)
        mode = "stochastic" if self.stochastic else "deterministic"
        return Trajectory(np.array(states), labels, self.family, mode)

    def invert(self, x0, mode: InversionMode | None = None) -> Trajectory:
        mode = mode or self.mode
        x = np.asarray(x0, dtype=np.float64)
        states = [x]
        if self.family == "ddim":
            order = range(1, self.T + 1)
            labels = tuple(range(self.T + 1))
        else:
            order = range(self.T - 1, -1, -1)
            labels = tuple(range(self.T, -1, -1))
        for k in order:
            try:
                if self.family == "edm":
                    x = edm_invert_step(
                        x,
                        k,
                        self.schedule,
                        self.predictor,
                        mode,
                        fp_tol=self.fp_tol,
                        max_iter=self.max_iter,
                        solver=self.solver,
                    )
                else:
                    x = ddim_invert_step(
                        x,
                        k,
                        self.schedule,
                        self.predictor,
                        mode,
                        fp_tol=self.fp_tol,
                        max_iter=self.max_iter,
                        paper_coefficient=self.paper_coefficient,
                        solver=self.solver,
                    )
            except NoiseLabError as exc:
                raise StepError(k, exc) from exc
            states.append(x)
        return Trajectory(np.array(states), labels, self.family, mode)


def denoise(eps, pipeline: Pipeline) -> Trajectory:
    return pipeline.denoise(eps)


def invert(x0, pipeline: Pipeline, mode: InversionMode | None = None) -> Trajectory:
    return pipeline.invert(x0, mode)
