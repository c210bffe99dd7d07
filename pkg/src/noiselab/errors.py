"""Exception hierarchy shared by every noiselab module."""

from __future__ import annotations


class NoiseLabError(Exception):
    """Base class for all errors raised by noiselab."""

    kind = "error"

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class ConfigurationError(NoiseLabError, ValueError):
    """An input parameter or config entry is out of range."""

    kind = "configuration"

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")

    def to_dict(self) -> dict:
        return {**super().to_dict(), "field": self.field}


class ShapeError(NoiseLabError, ValueError):
    kind = "shape"


class DomainError(NoiseLabError, ValueError):
    """An operation was called outside its domain (e.g. a step index of 0)."""

    kind = "domain"


class DegenerateInputError(NoiseLabError, ValueError):
    """Zero-norm vectors, zero denominators, constant rank inputs."""

    kind = "degenerate_input"


class ConsistencyError(NoiseLabError, ArithmeticError):
    kind = "internal_consistency"


class ConvergenceError(NoiseLabError, ArithmeticError):
    """A fixed-point solve did not reach its tolerance."""

    kind = "convergence"

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")

    def to_dict(self) -> dict:
        return {**super().to_dict(), "residual": self.residual, "iterations": self.iterations}


class StepError(NoiseLabError):
    """Wraps an error raised inside a trajectory fold with the failing step index."""

    kind = "step"

    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {cause}")

    def to_dict(self) -> dict:
        cause = self.cause.to_dict() if isinstance(self.cause, NoiseLabError) else {"message": str(self.cause)}
        return {**super().to_dict(), "step": self.step, "cause": cause}


class SeedError(NoiseLabError):
    """A per-seed work item failed; carries the seed (and condition when known)."""

    kind = "seed"

    def __init__(self, seed: int, cause: Exception, condition: str | None = None):
        self.seed = seed
        self.condition = condition
        self.cause = cause
        where = f"condition {condition!r}, seed {seed}" if condition else f"seed {seed}"
        super().__init__(f"{where}: {cause}")

    def to_dict(self) -> dict:
        cause = self.cause.to_dict() if isinstance(self.cause, NoiseLabError) else {"message": str(self.cause)}
        return {**super().to_dict(), "seed": self.seed, "condition": self.condition, "cause": cause}


class DivergenceError(NoiseLabError, ArithmeticError):
    """Noise optimization produced a non-finite loss or iterate."""

    kind = "divergence"

    def __init__(self, message: str, trace=None):
        self.trace = trace
        super().__init__(message)
