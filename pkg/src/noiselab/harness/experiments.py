"""Selection and optimization studies over a condition suite.

Both studies fan independent (condition, seed) items out to a process pool
and fold the results in item order, so serial and parallel runs agree
bit-for-bit. Aggregates are always computed from the same per-row dicts
that are written to CSV (``summarize_*``), which keeps the report
recomputable from its own rows.
"""

from __future__ import annotations

import datetime as _dt
import math
import platform
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from statistics import fmean

import numpy as np

from .. import __version__
from ..errors import DivergenceError, NoiseLabError, SeedError
from ..metrics import rank_correlation, sample_quality, winning_rate
from ..optimization import optimize_noise
from ..parallel import ordered_map
from ..rng import sample_gaussian
from ..sampler import Pipeline
from ..selection import pick
from ..stability import stability_record
from .config import ExperimentConfig
from .io import CSV_SCHEMA_VERSION, write_csv, write_json

SELECTION_COLUMNS = (
    "condition",
    "seed",
    "score",
    "x0_quality_loglik",
    "norm_eps",
    "norm_eps_prime",
    "mode_dist",
    "mahalanobis",
)
SELECTION_SUMMARY_COLUMNS = (
    "condition",
    "k",
    "stable_seed",
    "stable_score",
    "stable_loglik",
    "stable_mode_dist",
    "unstable_seed",
    "unstable_score",
    "unstable_loglik",
    "unstable_mode_dist",
    "mean_score",
    "spearman_rho",
    "spearman_n",
)
OPTIMIZATION_COLUMNS = (
    "T",
    "condition",
    "seed",
    "status",
    "initial_loss",
    "final_loss",
    "best_loss",
    "best_index",
    "initial_stability",
    "final_stability",
    "best_stability",
    "initial_loglik",
    "final_loglik",
    "best_loglik",
    "initial_norm",
    "final_norm",
    "error",
)
OPT_TRACE_COLUMNS = ("T", "condition", "seed", "iter", "loss", "stability", "lr", "momentum_norm", "step_norm")


@dataclass(eq=False)
class ExperimentReport:
    kind: str
    config: ExperimentConfig
    rows: list[dict]
    summary: list[dict]
    aggregates: dict
    traces: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "experiment": self.kind,
            "config_hash": self.config.config_hash(),
            "csv_schema_version": CSV_SCHEMA_VERSION,
            "aggregates": self.aggregates,
            "summary": self.summary,
        }

    def write(self, out_dir: str | Path, plot: bool = False) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if self.kind == "select":
            write_csv(out / "records.csv", SELECTION_COLUMNS, ([r[c] for c in SELECTION_COLUMNS] for r in self.rows))
            write_csv(
                out / "summary.csv", SELECTION_SUMMARY_COLUMNS, ([r[c] for c in SELECTION_SUMMARY_COLUMNS] for r in self.summary)
            )
        else:
            write_csv(out / "runs.csv", OPTIMIZATION_COLUMNS, ([r[c] for c in OPTIMIZATION_COLUMNS] for r in self.rows))
            write_csv(out / "traces.csv", OPT_TRACE_COLUMNS, ([r[c] for c in OPT_TRACE_COLUMNS] for r in self.traces))
            cols = tuple(self.summary[0]) if self.summary else ()
            write_csv(out / "summary.csv", cols, ([r[c] for c in cols] for r in self.summary))
        write_json(out / "report.json", _jsonable(self.to_json()))
        write_json(out / "provenance.json", self.provenance)
        (out / "config.yaml").write_text(self.config.to_yaml())
        if plot:
            from .plot import plot_report

            plot_report(self, out)
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": cfg.config_hash(),
        "noiselab_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


# -- selection ------------------------------------------------------------------


def _selection_item(item: tuple[str, int], pipelines: dict[str, Pipeline]) -> dict:
    name, seed = item
    pipe = pipelines[name]
    try:
        rec = stability_record(seed, sample_gaussian(seed, pipe.predictor.dim), pipe)
    except NoiseLabError as exc:
        raise SeedError(seed, exc, name) from exc
    q = rec.quality
    return {
        "condition": name,
        "seed": seed,
        "score": rec.score,
        "x0_quality_loglik": q.loglik,
        "norm_eps": rec.norm_eps,
        "norm_eps_prime": rec.norm_eps_prime,
        "mode_dist": q.mode_dist,
        "mahalanobis": q.mahalanobis,
    }


def _spearman(a, b) -> tuple[float | None, int]:
    try:
        return rank_correlation(a, b)
    except NoiseLabError:
        return None, len(a)


def summarize_selection(rows: list[dict]) -> tuple[list[dict], dict]:
    """Per-condition stable/unstable arms and cross-condition aggregates."""
    by_cond: dict[str, list[dict]] = {}
    for r in rows:
        by_cond.setdefault(r["condition"], []).append(r)
    summary = []
    for name, recs in by_cond.items():
        recs = sorted(recs, key=lambda r: r["seed"])
        scores = [r["score"] for r in recs]
        st, un = recs[pick(scores, "max")], recs[pick(scores, "min")]
        rho, n = _spearman(scores, [r["x0_quality_loglik"] for r in recs])
        summary.append(
            {
                "condition": name,
                "k": len(recs),
                "stable_seed": st["seed"],
                "stable_score": st["score"],
                "stable_loglik": st["x0_quality_loglik"],
                "stable_mode_dist": st["mode_dist"],
                "unstable_seed": un["seed"],
                "unstable_score": un["score"],
                "unstable_loglik": un["x0_quality_loglik"],
                "unstable_mode_dist": un["mode_dist"],
                "mean_score": fmean(scores),
                "spearman_rho": rho,
                "spearman_n": n,
            }
        )
    rhos = [s["spearman_rho"] for s in summary if s["spearman_rho"] is not None]
    agg = {
        "n_conditions": len(summary),
        "winning_rate_loglik": winning_rate((s["stable_loglik"], s["unstable_loglik"]) for s in summary),
        # closer to a mode is better, so compare negated distances
        "winning_rate_mode_dist": winning_rate((-s["stable_mode_dist"], -s["unstable_mode_dist"]) for s in summary),
        "mean_loglik_stable": fmean(s["stable_loglik"] for s in summary),
        "mean_loglik_unstable": fmean(s["unstable_loglik"] for s in summary),
        "mean_score_stable": fmean(s["stable_score"] for s in summary),
        "mean_score_unstable": fmean(s["unstable_score"] for s in summary),
        "mean_spearman_rho": fmean(rhos) if rhos else None,
        "n_positive_rho": sum(1 for r in rhos if r > 0),
    }
    return summary, agg


def run_selection_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    """Stable (argmax) vs unstable (argmin) noise among seeds 0 … K−1 per condition."""
    suite = cfg.suite()
    names = cfg.condition_names()
    K = int(cfg["selection"]["K"])
    pipelines = {n: cfg.build_pipeline(suite[n]) for n in names}
    items = [(n, s) for n in names for s in range(K)]
    rows = ordered_map(partial(_selection_item, pipelines=pipelines), items, jobs or cfg.jobs)
    summary, agg = summarize_selection(rows)
    return ExperimentReport("select", cfg, rows, summary, agg, provenance=_provenance(cfg))


# -- optimization -----------------------------------------------------------------


def _optimization_item(item: tuple[int, str, int], pipelines: dict, settings) -> tuple[dict, list[dict]]:
    T, name, seed = item
    pipe: Pipeline = pipelines[(T, name)]
    cond = pipe.predictor.condition
    eps0 = sample_gaussian(seed, cond.dim)
    row = {c: None for c in OPTIMIZATION_COLUMNS}
    row.update(T=T, condition=name, seed=seed, status="ok", error="")
    trace = None
    try:
        _, trace = optimize_noise(
            eps0,
            pipe,
            settings.n,
            settings.lr,
            settings.momentum,
            settings.lr_schedule,
            settings.return_policy,
        )
        quality = {}
        for arm, eps in (("initial", eps0), ("final", trace.final), ("best", trace.best)):
            quality[arm] = sample_quality(pipe.denoise(eps).end, cond).loglik
        row.update(
            initial_loss=trace.initial_loss,
            final_loss=trace.final_loss,
            best_loss=trace.best_loss,
            best_index=trace.best_index,
            initial_stability=1.0 - trace.initial_loss,
            final_stability=1.0 - trace.final_loss,
            best_stability=1.0 - trace.best_loss,
            initial_loglik=quality["initial"],
            final_loglik=quality["final"],
            best_loglik=quality["best"],
            initial_norm=float(np.linalg.norm(eps0)),
            final_norm=float(np.linalg.norm(trace.final)),
        )
    except DivergenceError as exc:
        trace = exc.trace
        row.update(status="diverged", error=str(exc))
    except NoiseLabError as exc:
        row.update(status="error", error=f"{exc.kind}: {exc}")
    traces = []
    if trace is not None:
        for rec in trace.iterates:
            traces.append(
                {
                    "T": T,
                    "condition": name,
                    "seed": seed,
                    "iter": rec.index,
                    "loss": rec.loss,
                    "stability": rec.stability,
                    "lr": rec.lr,
                    "momentum_norm": rec.momentum_norm,
                    "step_norm": rec.step_norm,
                }
            )
    return row, traces


def _opt_group(rows: list[dict]) -> dict:
    ok = [r for r in rows if r["status"] == "ok"]
    out = {"n_runs": len(rows), "n_ok": len(ok), "n_failed": len(rows) - len(ok)}
    if not ok:
        return out
    out.update(
        winning_rate_final_vs_initial=winning_rate((r["final_loglik"], r["initial_loglik"]) for r in ok),
        winning_rate_best_vs_initial=winning_rate((r["best_loglik"], r["initial_loglik"]) for r in ok),
        mean_stability_initial=fmean(r["initial_stability"] for r in ok),
        mean_stability_final=fmean(r["final_stability"] for r in ok),
        mean_stability_best=fmean(r["best_stability"] for r in ok),
        mean_loglik_initial=fmean(r["initial_loglik"] for r in ok),
        mean_loglik_final=fmean(r["final_loglik"] for r in ok),
        mean_loglik_best=fmean(r["best_loglik"] for r in ok),
        frac_final_loss_decreased=fmean(1.0 if r["final_loss"] < r["initial_loss"] else 0.0 for r in ok),
        frac_best_not_worse=fmean(1.0 if r["best_loss"] <= r["initial_loss"] else 0.0 for r in ok),
    )
    return out


def summarize_optimization(rows: list[dict]) -> tuple[list[dict], dict]:
    """Per-T breakdown rows plus overall aggregates."""
    ts = sorted({r["T"] for r in rows})
    summary = []
    for T in ts:
        g = _opt_group([r for r in rows if r["T"] == T])
        summary.append({"T": T, **{k: g.get(k) for k in _OPT_SUMMARY_KEYS}})
    agg = _opt_group(rows)
    agg["per_T"] = {str(s["T"]): {k: v for k, v in s.items() if k != "T"} for s in summary}
    return summary, agg


_OPT_SUMMARY_KEYS = (
    "n_runs",
    "n_ok",
    "n_failed",
    "winning_rate_final_vs_initial",
    "winning_rate_best_vs_initial",
    "mean_stability_initial",
    "mean_stability_final",
    "mean_stability_best",
    "mean_loglik_initial",
    "mean_loglik_final",
    "mean_loglik_best",
    "frac_final_loss_decreased",
    "frac_best_not_worse",
)


def run_optimization_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    """Original vs optimized noise for every (T, condition, seed).

    Per-run failures are recorded in the ``status``/``error`` columns rather
    than aborting the sweep.
    """
    suite = cfg.suite()
    names = cfg.condition_names()
    settings = cfg.optimizer()
    t_values = cfg.t_values()
    start, count = int(cfg["seeds"]["start"]), int(cfg["seeds"]["count"])
    pipelines = {(T, n): cfg.build_pipeline(suite[n], T) for T in t_values for n in names}
    items = [(T, n, s) for T in t_values for n in names for s in range(start, start + count)]
    results = ordered_map(partial(_optimization_item, pipelines=pipelines, settings=settings), items, jobs or cfg.jobs)
    rows = [r for r, _ in results]
    traces = [t for _, ts in results for t in ts]
    summary, agg = summarize_optimization(rows)
    agg["settings"] = {
        "n": settings.n,
        "lr": settings.lr,
        "momentum": settings.momentum,
        "lr_schedule": settings.lr_schedule,
        "return_policy": settings.return_policy,
    }
    return ExperimentReport("optimize", cfg, rows, summary, agg, traces=traces, provenance=_provenance(cfg))
