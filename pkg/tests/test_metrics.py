import math
from itertools import product

import numpy as np
import pytest

from noiselab.errors import DomainError, ShapeError
from noiselab.metrics import rank_correlation, sample_quality, winning_rate
from noiselab.schedule import build_ddim_schedule
from noiselab.testbed import MixtureCondition, diffused_log_density


def brute_spearman(a, b):
    """Average ranks by counting, then Pearson."""

    def ranks(v):
        return [sum(1.0 for w in v if w < x) + (sum(1.0 for w in v if w == x) + 1) / 2 for x in v]

    ra, rb = ranks(a), ranks(b)
    ma, mb = sum(ra) / len(ra), sum(rb) / len(rb)
    num = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    den = math.sqrt(sum((x - ma) ** 2 for x in ra) * sum((y - mb) ** 2 for y in rb))
    return num / den


def test_quality_at_mode():
    c = MixtureCondition.isotropic("u", [0.5, 0.5], [[1.0, 1.0], [-3.0, 0.0]], 1.0)
    q = sample_quality(np.array([-3.0, 0.0]), c)
    assert q.mode_dist == 0.0 and q.mahalanobis == 0.0


def test_standard_normal_origin():
    q = sample_quality(np.zeros(2), MixtureCondition.standard_normal(2))
    assert q.loglik == pytest.approx(-math.log(2 * math.pi), rel=1e-15)


def test_loglik_matches_diffused_density_at_t0(suite):
    c = suite["anisotropic_pair_2d"]
    x = np.array([0.25, -0.75])
    assert sample_quality(x, c).loglik == diffused_log_density(x, 0, c, build_ddim_schedule(4))


def test_mahalanobis_uses_nearest_component(suite):
    c = suite["anisotropic_pair_2d"]
    x = c.means[1] + np.array([0.1, 0.2])
    q = sample_quality(x, c)
    diff = x - c.means[1]
    assert q.mahalanobis == pytest.approx(math.sqrt(diff @ np.linalg.inv(c.covariances[1]) @ diff), rel=1e-12)
    assert q.mode_dist == pytest.approx(np.linalg.norm(diff), rel=1e-15)


def test_quality_shape_error():
    with pytest.raises(ShapeError):
        sample_quality(np.zeros(3), MixtureCondition.standard_normal(2))


def test_winning_rate_examples():
    assert winning_rate([(2, 1), (3, 0)]) == 1.0
    assert winning_rate([(1, 1), (4, 4)]) == 0.5
    assert winning_rate([(2, 1), (0, 3), (5, 5), (4, 1)]) == 0.625


def test_winning_rate_swap_sums_to_one(rng):
    pairs = [tuple(x) for x in rng.integers(0, 4, size=(30, 2)).astype(float)]
    assert winning_rate(pairs) + winning_rate([(b, a) for a, b in pairs]) == pytest.approx(1.0)


def test_winning_rate_monotone_invariance(rng):
    pairs = [tuple(x) for x in rng.normal(size=(25, 2))]
    assert winning_rate(pairs) == winning_rate([(math.exp(a), math.exp(b)) for a, b in pairs])


def test_winning_rate_empty():
    with pytest.raises(DomainError):
        winning_rate([])


def test_spearman_examples():
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert rank_correlation(a, a) == (1.0, 5)
    assert rank_correlation(a, a[::-1])[0] == pytest.approx(-1.0)
    rho, n = rank_correlation(a, [2.0, 1.0, 4.0, 3.0, 5.0])
    assert rho == pytest.approx(brute_spearman(a, [2, 1, 4, 3, 5]), abs=1e-15)
    assert rho == pytest.approx(0.8, abs=1e-15)


def test_spearman_against_brute_force_with_ties(rng):
    for _ in range(20):
        a = rng.integers(0, 5, size=12).astype(float)
        b = rng.integers(0, 5, size=12).astype(float)
        if len(set(a)) == 1 or len(set(b)) == 1:
            continue
        assert rank_correlation(a, b)[0] == pytest.approx(brute_spearman(a, b), abs=1e-12)


def test_spearman_monotone_invariance(rng):
    a, b = rng.normal(size=15), rng.normal(size=15)
    assert rank_correlation(np.exp(a), b ** 3)[0] == pytest.approx(rank_correlation(a, b)[0], abs=1e-15)


@pytest.mark.parametrize("a, b", [([1, 2, 3], [1, 2]), ([1, 2], [2, 1]), ([1, 1, 1], [1, 2, 3]), ([1, 2, 3], [4, 4, 4])])
def test_spearman_errors(a, b):
    with pytest.raises(DomainError):
        rank_correlation(a, b)
