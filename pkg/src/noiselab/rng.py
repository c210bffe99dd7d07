"""Counter-based, platform-stable standard-normal noise.

Component ``i`` of ``sample_gaussian(seed, dim, stream)`` depends only on
``(seed, stream, i)``: the generator is Philox-4x64 keyed on
``(seed, stream)`` whose raw 64-bit outputs ``2i`` and ``2i + 1`` are
mapped to uniforms on (0, 1) using their top 53 bits,

    u = (r >> 11) * 2**-53 + 2**-54,

and combined by the Box-Muller cosine branch

    z = sqrt(-2 log u1) * cos(2 pi u2).

Only the raw Philox stream is taken from numpy, so the output does not
depend on numpy's (version-dependent) normal sampler.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

_SCALE = 2.0**-53
_HALF = 2.0**-54


def _raw(seed: int, stream: int, count: int) -> np.ndarray:
    if seed < 0 or stream < 0:
        raise ConfigurationError("seed", f"seed and stream must be non-negative, got ({seed}, {stream})")
    bg = np.random.Philox(key=np.array([seed, stream], dtype=np.uint64), counter=0)
    return bg.random_raw(count)


def uniforms(seed: int, count: int, stream: int = 0) -> np.ndarray:
    r = _raw(int(seed), int(stream), int(count))
    return (r >> np.uint64(11)).astype(np.float64) * _SCALE + _HALF


def sample_gaussian(seed: int, dim: int, stream: int = 0) -> np.ndarray:
    """Deterministic standard-normal vector of length ``dim`` for ``seed``."""
    if int(dim) < 1:
        raise ConfigurationError("dim", f"must be >= 1, got {dim}")
    u = uniforms(seed, 2 * int(dim), stream).reshape(-1, 2)
    return np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])
