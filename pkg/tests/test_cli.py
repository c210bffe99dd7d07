import json
import subprocess
import sys

import numpy as np
import pytest

from noiselab.cli import main
from noiselab.harness.io import read_csv, read_vector, write_vector
from noiselab.rng import sample_gaussian
from tests.test_rng import GOLDEN_SEED0_DIM16


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sample_matches_golden(tmp_path, capsys):
    out = tmp_path / "e.txt"
    assert run(capsys, "sample", "--seed", "0", "--dim", "16", "--out", str(out))[0] == 0
    assert [float(v).hex() for v in read_vector(out)] == GOLDEN_SEED0_DIM16


def test_denoise_invert_cycle(tmp_path, capsys):
    eps = tmp_path / "eps.txt"
    write_vector(eps, sample_gaussian(3, 2))
    x0, back, traj = tmp_path / "x0.txt", tmp_path / "back.txt", tmp_path / "traj.csv"
    common = ["--condition", "bimodal_2d", "--mode", "exact"]
    assert run(capsys, "denoise", "--input", str(eps), "--out", str(x0), "--trajectory", str(traj), *common)[0] == 0
    assert len(read_csv(traj)) == 5
    assert run(capsys, "invert", "--input", str(x0), "--out", str(back), *common)[0] == 0
    np.testing.assert_allclose(read_vector(back), sample_gaussian(3, 2), rtol=1e-9)


def test_stochastic_denoise_runs(capsys):
    code, out, _ = run(capsys, "denoise", "--seed", "1", "--condition", "ring8_2d", "--stochastic", "--noise-seed", "2")
    assert code == 0 and out.startswith("dim=2\n")


def test_stability_lines(tmp_path, capsys):
    code, out, _ = run(capsys, "stability", "--seeds", "0:3", "--condition", "bimodal_2d", "--out", str(tmp_path / "s.csv"))
    assert code == 0
    lines = out.splitlines()
    assert [ln.split()[0] for ln in lines] == ["0", "1", "2"]
    rows = read_csv(tmp_path / "s.csv")
    assert [float(r["score"]) for r in rows] == [float(ln.split()[1]) for ln in lines]


def test_select(tmp_path, capsys):
    code, out, _ = run(capsys, "select", "--k", "8", "--condition", "ring8_2d", "--out", str(tmp_path))
    summary = json.loads(out)
    assert code == 0 and summary["k"] == 8
    rows = read_csv(tmp_path / "select.csv")
    scores = [float(r["score"]) for r in rows]
    assert summary["chosen_seed"] == scores.index(max(scores))


def test_optimize(tmp_path, capsys):
    code, out, _ = run(
        capsys, "optimize", "--seed", "0", "--condition", "bimodal_2d", "--steps", "5", "--return", "best", "--out", str(tmp_path)
    )
    summary = json.loads(out)
    assert code == 0 and summary["best_loss"] <= summary["initial_loss"]
    assert len(read_csv(tmp_path / "trace.csv")) == 5
    assert read_vector(tmp_path / "optimized.txt").tobytes() == read_vector(tmp_path / "best.txt").tobytes()


def test_config_file_is_honoured(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("family: edm\nT: 3\n")
    traj = tmp_path / "t.csv"
    assert run(capsys, "denoise", "--seed", "0", "--condition", "bimodal_2d", "--config", str(cfg), "--trajectory", str(traj))[0] == 0
    assert [r["t"] for r in read_csv(traj)] == ["0", "1", "2", "3"]


def test_experiment_select(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("conditions: [bimodal_2d, ring8_2d, blobs4_16d]\nselection:\n  K: 5\n")
    code, out, _ = run(capsys, "experiment", "select", "--config", str(cfg), "--out", str(tmp_path / "r"))
    assert code == 0 and json.loads(out)["aggregates"]["n_conditions"] == 3
    for name in ("records.csv", "summary.csv", "report.json", "provenance.json", "config.yaml"):
        assert (tmp_path / "r" / name).exists()


@pytest.mark.parametrize(
    "argv, code, kind",
    [
        (["denoise", "--seed", "0", "--condition", "nope"], 2, "configuration"),
        (["sample", "--seed", "0", "--dim", "0"], 2, "configuration"),
        (["invert", "--input", "/nonexistent/x.txt", "--condition", "bimodal_2d"], 1, "FileNotFoundError"),
        (["denoise", "--seed", "0", "--condition", "bimodal_2d", "--T", "0"], 2, "configuration"),
    ],
)
def test_errors_are_json(capsys, argv, code, kind):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert json.loads(err)["error"] == kind


def test_shape_mismatch(tmp_path, capsys):
    p = tmp_path / "v.txt"
    write_vector(p, np.ones(3))
    got, _, err = run(capsys, "invert", "--input", str(p), "--condition", "bimodal_2d")
    assert got == 1 and json.loads(err)["error"] in ("step", "shape")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "noiselab", "sample", "--seed", "0", "--dim", "2"], capture_output=True, text=True, check=True
    )
    assert proc.stdout.splitlines()[0] == "dim=2"
