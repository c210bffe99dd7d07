import numpy as np
import pytest

from noiselab.errors import ConfigurationError, SeedError, StepError
from noiselab.rng import sample_gaussian
from noiselab.sampler import Pipeline
from noiselab.schedule import build_ddim_schedule
from noiselab.selection import pick, score_seeds, select_noise
from noiselab.stability import cosine
from noiselab.testbed import NoisePredictor


def _pipeline(c, T=4, **kw):
    sched = build_ddim_schedule(T)
    return Pipeline(NoisePredictor(c, sched), sched, **kw)


def test_pick_injected_scores():
    assert pick([0.2, 0.9, 0.5], "max") == 1
    assert pick([0.2, 0.9, 0.5], "min") == 0


def test_pick_ties_go_to_lowest_index():
    assert pick([0.3, 0.9, 0.9, 0.1], "max") == 1
    assert pick([0.3, 0.1, 0.9, 0.1], "min") == 1
    # differences below the tie tolerance are rounding noise
    assert pick([1.0 - 2e-16, 1.0, 1.0], "max") == 0


def test_pick_errors():
    with pytest.raises(ConfigurationError):
        pick([], "max")
    with pytest.raises(ConfigurationError):
        pick([1.0], "median")


def test_k1_picks_seed_zero(suite):
    chosen, recs = select_noise(_pipeline(suite["bimodal_2d"]), K=1)
    assert chosen.seed == 0 and len(recs) == 1
    np.testing.assert_array_equal(chosen.epsilon, sample_gaussian(0, 2))


@pytest.mark.parametrize("objective", ["max", "min"])
def test_matches_brute_force(suite, objective):
    p = _pipeline(suite["ring8_2d"])
    chosen, recs = select_noise(p, K=16, objective=objective)
    scores = []
    for seed in range(16):
        eps = sample_gaussian(seed, 2)
        eps_prime = p.invert(p.denoise(eps).end).end
        scores.append(cosine(eps, eps_prime))
    assert [r.score for r in recs] == scores
    best = max(scores) if objective == "max" else min(scores)
    assert chosen.seed == scores.index(best)


def test_pool_size_invariance(suite):
    p = _pipeline(suite["blobs4_16d"])
    base = [r.score for r in score_seeds(p, range(12), jobs=1)]
    assert [r.score for r in score_seeds(p, range(12), jobs=3)] == base


def test_exact_mode_scores(suite):
    p = _pipeline(suite["bimodal_2d"], mode="exact")
    chosen, recs = select_noise(p, K=8)
    assert all(r.score >= 1 - 1e-9 for r in recs)
    assert chosen.seed == 0


def test_failure_names_seed(suite):
    p = _pipeline(suite["bimodal_2d"], mode="exact", solver="fixed_point", max_iter=1)
    with pytest.raises(SeedError) as info:
        select_noise(p, K=4)
    assert info.value.seed == 0 and info.value.condition == "bimodal_2d"
    assert isinstance(info.value.cause, StepError)


@pytest.mark.parametrize("K", [0, -2, 2.5])
def test_bad_k(suite, K):
    with pytest.raises(ConfigurationError):
        select_noise(_pipeline(suite["bimodal_2d"]), K=K)
