"""Run outputs: ``ticks.csv``, ``summary.json`` and ``trajectory_xyz.csv``.

Floats are written with ``repr`` so reading a file back yields the exact
values that were logged.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..mission import Phase
from ..vehicle import RigidBodyState
from .metrics import EmptyLog, SummaryMetrics

TICK_COLUMNS = ["t", "px", "py", "pz", "vx", "vy", "vz", "roll", "pitch", "yaw", "phase",
                "pad_x", "pad_y", "pad_z", "detected_ids", "est_rms_px", "plan_ms"]
TRAJECTORY_COLUMNS = ["t", "uav_x", "uav_y", "uav_z", "pad_x", "pad_y", "pad_z"]


class IoError(OSError):
    pass


def _f(x) -> str:
    return "" if x is None else repr(float(x))


def tick_row(log) -> list:
    s = log.state
    return [_f(log.t), *map(_f, s.p), *map(_f, s.v), *map(_f, s.euler), Phase(log.phase).value,
            *map(_f, log.pad), ";".join(str(i) for i in log.detected_ids),
            _f(log.est_rms_px), _f(log.plan_ms)]


def emit_outputs(metrics: SummaryMetrics, logs, out_dir) -> dict:
    """Write the three output files. Returns their paths keyed by short name."""
    if not logs:
        raise EmptyLog("no ticks logged")
    out = Path(out_dir)
    paths = {"ticks": out / "ticks.csv", "summary": out / "summary.json", "trajectory": out / "trajectory_xyz.csv"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(paths["ticks"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TICK_COLUMNS)
            for log in logs:
                w.writerow(tick_row(log))
        with open(paths["trajectory"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_COLUMNS)
            for log in logs:
                w.writerow([_f(log.t), *map(_f, log.state.p), *map(_f, log.pad)])
        with open(paths["summary"], "w") as fh:
            json.dump(metrics.to_dict(), fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write outputs to {out}: {exc}") from exc
    return paths


class _CsvTick:
    """Minimal TickLog stand-in rebuilt from a ``ticks.csv`` row."""

    __slots__ = ("t", "state", "phase", "pad", "detected_ids", "est_rms_px", "plan_ms")

    def __init__(self, row: dict):
        f = float
        self.t = f(row["t"])
        self.state = RigidBodyState([f(row["px"]), f(row["py"]), f(row["pz"])],
                                    [f(row["vx"]), f(row["vy"]), f(row["vz"])],
                                    [f(row["roll"]), f(row["pitch"]), f(row["yaw"])])
        self.phase = Phase(row["phase"])
        self.pad = np.array([f(row["pad_x"]), f(row["pad_y"]), f(row["pad_z"])])
        self.detected_ids = tuple(int(i) for i in row["detected_ids"].split(";") if i)
        self.est_rms_px = f(row["est_rms_px"]) if row["est_rms_px"] else None
        self.plan_ms = f(row["plan_ms"]) if row["plan_ms"] else None


def read_ticks(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TICK_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [_CsvTick(row) for row in reader]


def read_summary(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
