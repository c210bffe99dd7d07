"""Experiment configuration: a YAML key-value tree with documented defaults.

Every field, its unit and default::

    suite: null                 # condition-suite YAML; null = the shipped suite
    conditions: all             # list of condition names, or "all"
    family: ddim                # ddim | edm
    T: 4                        # sampling steps (DDIM steps or EDM levels)
    T_sweep: null               # optimize experiment: list of T values, e.g. [4, 8, 16, 32]
    schedule:                   # DDIM: training schedule subsampled to T steps
      train_steps: 1000         #   length of the training schedule (steps)
      beta_start: 1.0e-4        #   first training beta (dimensionless)
      beta_end: 0.02            #   last training beta
      kind: linear              #   linear | cosine
    edm:
      sigma_min: 0.002          # smallest nonzero noise level (data units)
      sigma_max: 80.0           # largest noise level; x_T = sigma_max * eps
      rho: 7.0                  # level-spacing exponent
      sigma_data: 0.5           # data std used by the preconditioning
    inversion:
      mode: approx              # approx | exact
      solver: newton            # exact-mode solver: newton | fixed_point
      fp_tol: 1.0e-10           # exact-mode step tolerance (relative to max(1, |x|))
      max_iter: 50              # exact-mode iteration cap
      paper_coefficient: false  # use sqrt(abar_{t-1}) instead of sqrt(abar_t) in DDIM inversion
    selection:
      K: 100                    # seeds 0 .. K-1
    optimization:
      preset: testbed           # testbed | paper; explicit fields below override it
      n: null                   # gradient steps
      lr: null                  # learning rate (units of |eps|^2)
      momentum: null            # momentum coefficient in [0, 1)
      lr_schedule: null         # constant | cosine_annealing
      return_policy: null       # last | best
    seeds:
      start: 0                  # first seed of the optimize experiment
      count: 16                 # number of seeds per condition
    output_dir: runs            # where experiment reports are written
    jobs: 1                     # worker processes
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from ..errors import ConfigurationError
from ..optimization import PRESETS, OptimizerSettings
from ..sampler import Pipeline
from ..schedule import build_ddim_schedule, build_edm_schedule
from ..testbed import MixtureCondition, NoisePredictor, load_conditions

DEFAULTS: dict = {
    "suite": None,
    "conditions": "all",
    "family": "ddim",
    "T": 4,
    "T_sweep": None,
    "schedule": {"train_steps": 1000, "beta_start": 1e-4, "beta_end": 0.02, "kind": "linear"},
    "edm": {"sigma_min": 0.002, "sigma_max": 80.0, "rho": 7.0, "sigma_data": 0.5},
    "inversion": {"mode": "approx", "solver": "newton", "fp_tol": 1e-10, "max_iter": 50, "paper_coefficient": False},
    "selection": {"K": 100},
    "optimization": {
        "preset": "testbed",
        "n": None,
        "lr": None,
        "momentum": None,
        "lr_schedule": None,
        "return_policy": None,
    },
    "seeds": {"start": 0, "count": 16},
    "output_dir": "runs",
    "jobs": 1,
}

_FLOATS = {
    ("schedule", "beta_start"),
    ("schedule", "beta_end"),
    ("edm", "sigma_min"),
    ("edm", "sigma_max"),
    ("edm", "rho"),
    ("edm", "sigma_data"),
    ("inversion", "fp_tol"),
    ("optimization", "lr"),
    ("optimization", "momentum"),
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigurationError(where, "unknown config key")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigurationError(where, "expected a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    tree: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        tree = _merge(DEFAULTS, self.tree)
        for sect, key in _FLOATS:
            if tree[sect][key] is not None:
                try:
                    tree[sect][key] = float(tree[sect][key])
                except (TypeError, ValueError):
                    raise ConfigurationError(f"{sect}.{key}", f"expected a number, got {tree[sect][key]!r}")
        object.__setattr__(self, "tree", tree)
        self.validate()

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict | None) -> "ExperimentConfig":
        return cls(d or {})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})

    def with_overrides(self, **sections) -> "ExperimentConfig":
        """Return a copy with top-level keys or nested dicts overridden (None values skipped)."""
        over: dict = {}
        for key, val in sections.items():
            if isinstance(val, dict):
                val = {k: v for k, v in val.items() if v is not None}
                if val:
                    over[key] = val
            elif val is not None:
                over[key] = val
        return ExperimentConfig(_merge(self.tree, over))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.tree, sort_keys=True)

    def config_hash(self) -> str:
        canon = json.dumps(self.tree, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    # -- accessors ------------------------------------------------------------

    def __getitem__(self, key):
        return self.tree[key]

    @property
    def jobs(self) -> int:
        return int(self.tree["jobs"])

    def suite(self) -> dict[str, MixtureCondition]:
        return load_conditions(self.tree["suite"])

    def condition_names(self) -> list[str]:
        suite = self.suite()
        names = self.tree["conditions"]
        if names == "all":
            return list(suite)
        if isinstance(names, str):
            names = [names]
        missing = [n for n in names if n not in suite]
        if missing:
            raise ConfigurationError("conditions", f"unknown condition(s) {missing}; known: {sorted(suite)}")
        return list(names)

    def t_values(self) -> list[int]:
        sweep = self.tree["T_sweep"]
        return [int(t) for t in sweep] if sweep else [int(self.tree["T"])]

    def optimizer(self) -> OptimizerSettings:
        o = self.tree["optimization"]
        preset = PRESETS[o["preset"]]
        fields = {k: o[k] for k in ("n", "lr", "momentum", "lr_schedule", "return_policy") if o[k] is not None}
        settings = replace(preset, **fields)
        settings.validate()
        return settings

    def build_schedule(self, T: int | None = None):
        T = int(self.tree["T"] if T is None else T)
        if self.tree["family"] == "edm":
            e = self.tree["edm"]
            return build_edm_schedule(T, e["sigma_min"], e["sigma_max"], e["rho"], e["sigma_data"])
        s = self.tree["schedule"]
        return build_ddim_schedule(T, int(s["train_steps"]), s["beta_start"], s["beta_end"], s["kind"])

    def build_pipeline(self, condition: MixtureCondition, T: int | None = None) -> Pipeline:
        sched = self.build_schedule(T)
        inv = self.tree["inversion"]
        predictor = NoisePredictor(condition, sched if self.tree["family"] == "ddim" else None)
        return Pipeline(
            predictor,
            sched,
            mode=inv["mode"],
            fp_tol=float(inv["fp_tol"]),
            max_iter=int(inv["max_iter"]),
            paper_coefficient=bool(inv["paper_coefficient"]),
            solver=inv["solver"],
        )

    # -- validation -------------------------------------------------------------

    def validate(self) -> None:
        t = self.tree
        if t["family"] not in ("ddim", "edm"):
            raise ConfigurationError("family", f"must be ddim or edm, got {t['family']!r}")
        for T in self.t_values():
            if T < 1:
                raise ConfigurationError("T", f"must be >= 1, got {T}")
        if t["inversion"]["mode"] not in ("approx", "exact"):
            raise ConfigurationError("inversion.mode", f"must be approx or exact, got {t['inversion']['mode']!r}")
        if t["inversion"]["solver"] not in ("newton", "fixed_point"):
            raise ConfigurationError("inversion.solver", f"unknown solver {t['inversion']['solver']!r}")
        if int(t["selection"]["K"]) < 1:
            raise ConfigurationError("selection.K", "must be >= 1")
        if t["optimization"]["preset"] not in PRESETS:
            raise ConfigurationError("optimization.preset", f"must be one of {sorted(PRESETS)}")
        if int(t["seeds"]["count"]) < 1 or int(t["seeds"]["start"]) < 0:
            raise ConfigurationError("seeds", "need start >= 0 and count >= 1")
        if int(t["jobs"]) < 1:
            raise ConfigurationError("jobs", "must be >= 1")
        self.optimizer()
        # schedule bounds are checked by building one
        self.build_schedule(self.t_values()[0])
