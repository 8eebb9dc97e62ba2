"""File output for trajectories, radial solutions and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .phase import RadialSolution, Trajectory
from .regions import SCHEMA_VERSION, fmt, json_number


def _rows_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([fmt(x) for x in row])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    _rows_csv(path, ["t", "w", "v"], [traj.t, traj.w, traj.v])


def write_solution_csv(sol: RadialSolution, path) -> None:
    _rows_csv(path, ["r", "u", "du_dr"], [sol.r, sol.u, sol.du_dr])


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and infinities for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if math.isnan(x) else json_number(x)
    if isinstance(obj, complex):
        return [json_number(obj.real), json_number(obj.imag)]
    return obj


def dumps_report(doc: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **to_jsonable(doc)}, indent=1) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text)
