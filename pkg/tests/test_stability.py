import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noiselab.errors import ConsistencyError, DegenerateInputError, ShapeError
from noiselab.rng import sample_gaussian
from noiselab.sampler import Pipeline
from noiselab.schedule import build_ddim_schedule, build_edm_schedule
from noiselab.stability import cosine, round_trip, stability_record, stability_score
from noiselab.testbed import NoisePredictor, ZeroPredictor

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vec = arrays(np.float64, 6, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-6)


def test_cosine_examples():
    e = np.array([0.3, -1.2, 2.0])
    assert stability_score(e, e) == 1.0
    assert stability_score(e, -e) == -1.0
    assert stability_score([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_multi_axis_inputs_are_flattened():
    a = sample_gaussian(0, 24).reshape(2, 3, 4)
    b = sample_gaussian(1, 24).reshape(2, 3, 4)
    assert cosine(a, b) == cosine(a.ravel(), b.ravel())


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_scale_invariance_and_symmetry(a, b, s1, s2):
    c = cosine(a, b)
    assert -1.0 <= c <= 1.0
    assert cosine(s1 * a, s2 * b) == pytest.approx(c, abs=1e-12)
    assert cosine(b, a) == pytest.approx(c, abs=1e-15)


def test_errors():
    with pytest.raises(DegenerateInputError):
        cosine(np.zeros(3), np.ones(3))
    with pytest.raises(ShapeError):
        cosine(np.ones(3), np.ones(4))


def test_consistency_error_beyond_clamp(monkeypatch):
    import noiselab.stability as stab

    monkeypatch.setattr(stab.np.linalg, "norm", lambda v: 0.5 * float(np.sqrt(v @ v)))
    with pytest.raises(ConsistencyError):
        stab.cosine(np.ones(3), np.ones(3))


@pytest.mark.parametrize("family", ["ddim", "edm"])
def test_zero_predictor_round_trip(family):
    sched = build_ddim_schedule(6) if family == "ddim" else build_edm_schedule(6)
    p = Pipeline(ZeroPredictor(8), sched)
    eps = sample_gaussian(0, 8)
    _, eps_prime = round_trip(eps, p)
    assert stability_score(eps, eps_prime) == pytest.approx(1.0, abs=1e-15)


def test_exact_round_trip_within_tolerance(suite):
    c = suite["blobs8_16d"]
    sched = build_ddim_schedule(8)
    p = Pipeline(NoisePredictor(c, sched), sched, mode="exact")
    eps = sample_gaussian(9, 16)
    _, eps_prime = round_trip(eps, p)
    assert np.linalg.norm(eps_prime - eps) / np.linalg.norm(eps) <= 10 * p.fp_tol


def test_std_normal_record(std_normal_pipeline):
    rec = stability_record(0, np.array([1.0]), std_normal_pipeline)
    assert rec.x0[0] == pytest.approx(0.8801891777108245, rel=1e-12)
    assert rec.epsilon_prime[0] == pytest.approx(0.9816210977447573, rel=1e-12)
    assert rec.score == 1.0  # d = 1 and the same sign
    assert rec.quality is not None and rec.norm_eps == 1.0


def test_non_finite_noise_rejected(std_normal_pipeline):
    with pytest.raises(DegenerateInputError):
        round_trip(np.array([np.nan]), std_normal_pipeline)
