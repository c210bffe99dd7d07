"""Plain-text file formats.

Vector file: first line ``dim=<d>``, then one real per line (shortest
round-trip repr, so values survive a write/read cycle bit-exactly).

Trajectory CSV: header ``t,c0,…,c{d-1}``; one row per state, in traversal
order, labelled with its step (DDIM) or level (EDM) index.

Every CSV produced by the harness starts with a header row and uses
``repr`` floats, so two runs of the same config give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import ShapeError
from ..sampler import Trajectory

# versioned column contracts
STABILITY_COLUMNS = ("seed", "score", "x0_quality_loglik", "norm_eps", "norm_eps_prime")
TRACE_COLUMNS = ("iter", "loss", "stability", "lr", "step_norm")
CSV_SCHEMA_VERSION = 1


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_vector(path: str | Path | None, v) -> str:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    text = f"dim={v.size}\n" + "".join(repr(float(x)) + "\n" for x in v)
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_vector(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise ShapeError("vector file must start with a 'dim=<d>' header")
    d = int(lines[0][4:])
    vals = np.array([float(x) for x in lines[1:]], dtype=np.float64)
    if vals.size != d:
        raise ShapeError(f"vector file declares dim={d} but holds {vals.size} values")
    return vals


def read_vector(path: str | Path) -> np.ndarray:
    return parse_vector(Path(path).read_text())


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    text = csv_text(header, rows)
    Path(path).write_text(text)
    return text


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def trajectory_csv(traj: Trajectory) -> str:
    d = traj.states.shape[1]
    header = ["t", *(f"c{j}" for j in range(d))]
    return csv_text(header, ([t, *row] for t, row in zip(traj.steps, traj.states)))


def write_json(path: str | Path, obj) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text)
    return text
