import pytest

from noiselab.errors import ConfigurationError
from noiselab.harness.config import DEFAULTS, ExperimentConfig
from noiselab.schedule import EdmSchedule


def test_defaults_round_trip(tmp_path):
    cfg = ExperimentConfig()
    p = tmp_path / "c.yaml"
    p.write_text(cfg.to_yaml())
    again = ExperimentConfig.load(p)
    assert again.tree == cfg.tree and again.config_hash() == cfg.config_hash()
    assert cfg.tree == DEFAULTS


def test_yaml_exponent_strings_become_floats(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("schedule:\n  beta_start: 1e-4\ninversion:\n  fp_tol: 1e-9\n")
    cfg = ExperimentConfig.load(p)
    assert cfg["schedule"]["beta_start"] == 1e-4 and cfg["inversion"]["fp_tol"] == 1e-9


@pytest.mark.parametrize(
    "tree, field",
    [
        ({"famliy": "ddim"}, "famliy"),
        ({"family": "vp"}, "family"),
        ({"T": 0}, "T"),
        ({"inversion": {"mode": "exactish"}}, "inversion.mode"),
        ({"selection": {"K": 0}}, "selection.K"),
        ({"optimization": {"preset": "huge"}}, "optimization.preset"),
        ({"optimization": {"momentum": 1.5}}, "momentum"),
        ({"schedule": {"beta_end": 2.0}}, "beta_end"),
        ({"edm": {"sigma_min": "small"}}, "edm.sigma_min"),
        ({"jobs": 0}, "jobs"),
        ({"inversion": 3}, "inversion"),
    ],
)
def test_config_errors_name_field(tree, field):
    with pytest.raises(ConfigurationError) as info:
        ExperimentConfig(tree)
    assert info.value.field == field


def test_unknown_condition():
    with pytest.raises(ConfigurationError):
        ExperimentConfig({"conditions": ["nope"]}).condition_names()


def test_optimizer_presets_and_overrides():
    assert ExperimentConfig().optimizer().lr == 0.5
    cfg = ExperimentConfig({"optimization": {"preset": "paper", "n": 7}})
    s = cfg.optimizer()
    assert (s.n, s.lr, s.momentum, s.lr_schedule) == (7, 100.0, 0.5, "cosine_annealing")


def test_overrides_skip_none():
    cfg = ExperimentConfig().with_overrides(T=8, family=None, inversion={"mode": "exact", "solver": None})
    assert cfg["T"] == 8 and cfg["family"] == "ddim"
    assert cfg["inversion"]["mode"] == "exact" and cfg["inversion"]["solver"] == "newton"


def test_hash_changes_with_content():
    assert ExperimentConfig({"T": 8}).config_hash() != ExperimentConfig().config_hash()


def test_build_pipeline_families(suite):
    cfg = ExperimentConfig({"family": "edm", "T": 6})
    p = cfg.build_pipeline(suite["bimodal_2d"])
    assert isinstance(p.schedule, EdmSchedule) and p.T == 6 and p.noise_scale == 80.0
    assert ExperimentConfig({"T_sweep": [4, 8]}).t_values() == [4, 8]
