"""Command-line entry point (``noiselab`` / ``python -m noiselab``).

Every subcommand accepts ``--config PATH`` (an experiment YAML supplying
family, T, schedule and inversion settings), ``--suite PATH``, ``--out``,
``--jobs`` and ``--paper-defaults``. Explicit flags override the config.
On failure the process exits nonzero and prints a JSON error object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NoiseLabError
from .harness.config import ExperimentConfig
from .harness.experiments import run_optimization_experiment, run_selection_experiment
from .harness.io import (
    STABILITY_COLUMNS,
    TRACE_COLUMNS,
    csv_text,
    read_vector,
    trajectory_csv,
    write_json,
    write_vector,
)
from .optimization import optimize_noise
from .rng import sample_gaussian
from .selection import select_noise, score_seeds
from .stability import stability_record


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="experiment config YAML")
    p.add_argument("--suite", type=Path, help="condition suite YAML (default: shipped suite)")
    p.add_argument("--out", type=Path, help="output file or directory")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--paper-defaults", action="store_true", help="optimizer preset n=100, lr=100, momentum=0.5, annealed")
    return p


def _pipeline_opts() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--condition", required=True, help="condition name from the suite")
    p.add_argument("--family", choices=("ddim", "edm"))
    p.add_argument("--T", type=int, dest="T", help="sampling steps")
    p.add_argument("--mode", choices=("approx", "exact"), help="inversion mode")
    p.add_argument("--solver", choices=("newton", "fixed_point"), help="exact-mode solver")
    p.add_argument("--paper-coefficient", action="store_true", default=None, help="DDIM inversion with the sqrt(abar_{t-1}) lead")
    return p


def build_parser() -> argparse.ArgumentParser:
    common, popts = _common(), _pipeline_opts()
    parser = argparse.ArgumentParser(prog="noiselab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="write a seeded standard-normal vector")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)

    p = sub.add_parser("denoise", parents=[common, popts], help="noise -> sample")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--seed", type=int)
    src.add_argument("--input", type=Path, help="vector file holding the noise")
    p.add_argument("--stochastic", action="store_true", help="ancestral sampler (generation only)")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--trajectory", type=Path, help="dump the trajectory as CSV")

    p = sub.add_parser("invert", parents=[common, popts], help="sample -> noise")
    p.add_argument("--input", type=Path, required=True, help="vector file holding x0")
    p.add_argument("--trajectory", type=Path, help="dump the trajectory as CSV")

    p = sub.add_parser("stability", parents=[common, popts], help="print (seed, score) per noise")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--seed", type=int)
    src.add_argument("--seeds", help="range a:b (b exclusive)")
    src.add_argument("--input", type=Path, nargs="+", help="noise vector file(s)")

    p = sub.add_parser("select", parents=[common, popts], help="pick the most (or least) stable of K seeds")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--objective", choices=("max", "min"), default="max")

    p = sub.add_parser("optimize", parents=[common, popts], help="momentum GD on 1 - cos(eps, eps')")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--anneal", action=argparse.BooleanOptionalAction, default=None, help="cosine-annealed learning rate")
    p.add_argument("--return", dest="return_policy", choices=("last", "best"))
    p.add_argument("--plot", action="store_true", help="also write trace.svg (needs matplotlib)")

    p = sub.add_parser("experiment", help="run a study over the condition suite")
    esub = p.add_subparsers(dest="experiment", required=True)
    for name in ("select", "optimize"):
        e = esub.add_parser(name, parents=[common])
        e.add_argument("--plot", action="store_true", help="also write SVG figures (needs matplotlib)")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over: dict = {
        "suite": str(args.suite) if args.suite else None,
        "jobs": args.jobs,
        "family": getattr(args, "family", None),
        "T": getattr(args, "T", None),
        "inversion": {
            "mode": getattr(args, "mode", None),
            "solver": getattr(args, "solver", None),
            "paper_coefficient": getattr(args, "paper_coefficient", None),
        },
    }
    if args.paper_defaults:
        over["optimization"] = {"preset": "paper"}
    if args.command == "optimize":
        opt = over.setdefault("optimization", {})
        opt.update(n=args.steps, lr=args.lr, momentum=args.momentum, return_policy=args.return_policy)
        if args.anneal is not None:
            opt["lr_schedule"] = "cosine_annealing" if args.anneal else "constant"
    return cfg.with_overrides(**over)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _condition(cfg: ExperimentConfig, name: str):
    suite = cfg.suite()
    if name not in suite:
        raise ConfigurationError("condition", f"unknown condition {name!r}; known: {sorted(suite)}")
    return suite[name]


def _parse_range(spec: str) -> range:
    try:
        a, b = (int(x) for x in spec.split(":"))
    except ValueError:
        raise ConfigurationError("seeds", f"expected a:b, got {spec!r}")
    return range(a, b)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)

    if args.command == "sample":
        _emit(write_vector(None, sample_gaussian(args.seed, args.dim)), args.out)
        return 0

    if args.command == "experiment":
        runner = run_selection_experiment if args.experiment == "select" else run_optimization_experiment
        report = runner(cfg)
        out = args.out or Path(cfg["output_dir"]) / args.experiment
        report.write(out, plot=args.plot)
        print(json.dumps({"out": str(out), "aggregates": report.to_json()["aggregates"]}, sort_keys=True, default=str))
        return 0

    cond = _condition(cfg, args.condition)
    pipe = cfg.build_pipeline(cond)

    if args.command == "denoise":
        eps = sample_gaussian(args.seed, cond.dim) if args.seed is not None else read_vector(args.input)
        if args.stochastic:
            pipe = pipe.replace(stochastic=True, noise_seed=args.noise_seed)
        traj = pipe.denoise(eps)
        if args.trajectory:
            args.trajectory.write_text(trajectory_csv(traj))
        _emit(write_vector(None, traj.end), args.out)
        return 0

    if args.command == "invert":
        traj = pipe.invert(read_vector(args.input))
        if args.trajectory:
            args.trajectory.write_text(trajectory_csv(traj))
        _emit(write_vector(None, traj.end / pipe.noise_scale), args.out)
        return 0

    if args.command == "stability":
        if args.input:
            recs = [stability_record(i, read_vector(p), pipe) for i, p in enumerate(args.input)]
        else:
            seeds = [args.seed] if args.seed is not None else list(_parse_range(args.seeds))
            recs = score_seeds(pipe, seeds, cfg.jobs)
        for r in recs:
            print(f"{r.seed} {r.score!r}")
        if args.out:
            _emit(csv_text(STABILITY_COLUMNS, _stability_rows(recs)), args.out)
        return 0

    if args.command == "select":
        chosen, recs = select_noise(pipe, args.k, args.objective, cfg.jobs)
        summary = {
            "condition": cond.name,
            "k": args.k,
            "chosen_seed": chosen.seed,
            "chosen_score": chosen.score,
            "objective": args.objective,
        }
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "select.csv").write_text(csv_text(STABILITY_COLUMNS, _stability_rows(recs)))
            write_json(args.out / "select.json", summary)
        else:
            sys.stdout.write(csv_text(STABILITY_COLUMNS, _stability_rows(recs)))
        print(json.dumps(summary, sort_keys=True))
        return 0

    if args.command == "optimize":
        s = cfg.optimizer()
        eps0 = sample_gaussian(args.seed, cond.dim)
        eps_star, trace = optimize_noise(eps0, pipe, s.n, s.lr, s.momentum, s.lr_schedule, s.return_policy)
        rows = ([r.index, r.loss, r.stability, r.lr, r.step_norm] for r in trace.iterates)
        out = args.out
        if out is None:
            sys.stdout.write(csv_text(TRACE_COLUMNS, rows))
        else:
            out.mkdir(parents=True, exist_ok=True)
            (out / "trace.csv").write_text(csv_text(TRACE_COLUMNS, rows))
            write_vector(out / "final.txt", trace.final)
            write_vector(out / "best.txt", trace.best)
            write_vector(out / "optimized.txt", eps_star)
            if args.plot:
                from .harness.plot import plot_trace

                plot_trace(trace, out / "trace.svg", title=f"{cond.name} seed {args.seed}")
        summary = {
            "condition": cond.name,
            "seed": args.seed,
            "initial_loss": trace.initial_loss,
            "final_loss": trace.final_loss,
            "best_loss": trace.best_loss,
            "best_index": trace.best_index,
            "return_policy": s.return_policy,
        }
        print(json.dumps(summary, sort_keys=True), file=sys.stderr if out is None else sys.stdout)
        return 0

    raise AssertionError(args.command)


def _stability_rows(recs):
    for r in recs:
        loglik = r.quality.loglik if r.quality is not None else None
        yield [r.seed, r.score, loglik, r.norm_eps, r.norm_eps_prime]


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except NoiseLabError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return 2 if isinstance(exc, ConfigurationError) else 1
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
