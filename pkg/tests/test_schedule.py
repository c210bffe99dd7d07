import math

import numpy as np
import pytest

from noiselab.errors import ConfigurationError, DomainError
from noiselab.schedule import (
    DiffusionSchedule,
    EdmSchedule,
    build_ddim_schedule,
    build_ddpm_schedule,
    build_edm_schedule,
    edm_coefficients,
    schedule_from_dict,
)


def test_single_step_product():
    s = DiffusionSchedule.from_betas([0.1])
    assert s.alpha_bar[1] == pytest.approx(0.9, abs=1e-15)


def test_two_step_product():
    s = DiffusionSchedule.from_betas([0.1, 0.2])
    assert s.alpha_bar[2] == pytest.approx(0.72, abs=1e-15)
    assert s.alpha_bar[0] == 1.0


@pytest.mark.parametrize("kind", ["linear", "cosine"])
@pytest.mark.parametrize("T", [1, 2, 4, 50, 1000])
def test_ddpm_invariants(T, kind):
    s = build_ddpm_schedule(T, kind=kind)
    assert s.T == T and len(s.alpha_bar) == T + 1
    assert np.all((s.beta > 0) & (s.beta < 1))
    assert np.all((s.alpha > 0) & (s.alpha < 1))
    assert np.all(np.diff(s.alpha_bar) < 0)
    np.testing.assert_allclose(s.alpha_bar[1:], s.alpha[...] * s.alpha_bar[:-1], rtol=0, atol=1e-15)


def test_linear_betas_are_evenly_spaced():
    s = build_ddpm_schedule(5, 0.1, 0.5)
    np.testing.assert_allclose(s.beta, [0.1, 0.2, 0.3, 0.4, 0.5], atol=1e-15)


def test_alpha_bar_matches_log_sum():
    s = build_ddpm_schedule(1000)
    via_logs = np.exp(np.cumsum(np.log1p(-s.beta)))
    np.testing.assert_allclose(s.alpha_bar[1:], via_logs, rtol=1e-12)


@pytest.mark.parametrize("T", [1, 4, 16, 32])
def test_ddim_subsample_keeps_training_alpha_bars(T):
    train = build_ddpm_schedule(1000)
    s = build_ddim_schedule(T)
    idx = [round(t * 1000 / T) for t in range(T + 1)]
    np.testing.assert_array_equal(s.alpha_bar, train.alpha_bar[idx])
    assert np.all(np.diff(s.alpha_bar) < 0)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"T": 0}, "T"),
        ({"T": 4, "beta_start": 0.0}, "beta_start"),
        ({"T": 4, "beta_start": 0.3, "beta_end": 0.1}, "beta_start"),
        ({"T": 4, "beta_end": 1.0}, "beta_end"),
        ({"T": 4, "kind": "quadratic"}, "kind"),
    ],
)
def test_ddpm_errors_name_field(kwargs, field):
    with pytest.raises(ConfigurationError) as info:
        build_ddpm_schedule(**kwargs)
    assert info.value.field == field


def test_abar_out_of_range():
    with pytest.raises(DomainError):
        build_ddpm_schedule(4).abar(5)


def test_builders_are_pure():
    a, b = build_ddim_schedule(8), build_ddim_schedule(8)
    assert a.alpha_bar.tobytes() == b.alpha_bar.tobytes()
    assert build_edm_schedule(8).sigma.tobytes() == build_edm_schedule(8).sigma.tobytes()


def test_schedule_dict_round_trip():
    for s in (build_ddim_schedule(4), build_edm_schedule(5)):
        back = schedule_from_dict(s.to_dict())
        assert type(back) is type(s)
        if isinstance(s, EdmSchedule):
            assert back.sigma.tobytes() == s.sigma.tobytes()
        else:
            assert back.alpha_bar.tobytes() == s.alpha_bar.tobytes()


# -- EDM ----------------------------------------------------------------------


def test_edm_spot_levels():
    s = build_edm_schedule(10, sigma_min=0.002, sigma_max=80.0, rho=7.0)
    # hand evaluation of (σmax^(1/ρ) + i/9 (σmin^(1/ρ) − σmax^(1/ρ)))^ρ
    assert s.sigma[0] == 80.0
    assert s.sigma[3] == pytest.approx(9.723201355260132, rel=1e-13)
    assert s.sigma[6] == pytest.approx(0.46997905799774714, rel=1e-13)
    assert s.sigma[9] == pytest.approx(0.002, rel=1e-13)
    assert s.sigma[10] == 0.0


@pytest.mark.parametrize("steps", [2, 3, 10, 40])
def test_edm_endpoints_and_order(steps):
    s = build_edm_schedule(steps, 0.01, 20.0)
    assert s.sigma[0] == 20.0 and s.sigma[steps - 1] == 0.01 and s.sigma[-1] == 0.0
    assert np.all(np.diff(s.sigma) < 0)
    for c in s.coeffs:
        assert 0.0 <= c.c_skip <= 1.0


def test_edm_single_step():
    s = build_edm_schedule(1, 0.002, 80.0)
    assert s.sigma.tolist() == [80.0, 0.0]


def test_edm_coefficients_formulae():
    c = edm_coefficients(2.0, 0.5)
    assert c.c_skip == pytest.approx(0.25 / 4.25)
    assert c.c_out == pytest.approx(1.0 / math.sqrt(4.25))
    assert c.c_in == pytest.approx(1.0 / math.sqrt(4.25))
    assert c.c_noise == pytest.approx(0.25 * math.log(2.0))


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"steps": 0}, "steps"),
        ({"steps": 4, "sigma_min": 0.0}, "sigma_min"),
        ({"steps": 4, "sigma_min": 5.0, "sigma_max": 1.0}, "sigma_max"),
        ({"steps": 4, "rho": -1.0}, "rho"),
    ],
)
def test_edm_errors(kwargs, field):
    with pytest.raises(ConfigurationError) as info:
        build_edm_schedule(**kwargs)
    assert info.value.field == field
