import csv
import io
import json
from pathlib import Path

import pytest

from quadland.cli import main

ROOT = Path(__file__).resolve().parents[1]
SCENE = ROOT / "demos" / "scenes" / "box_scene.json"


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    assert "sim" in capsys.readouterr().out.split()


def test_presets_show(capsys):
    assert main(["presets", "show", "sim"]) == 0
    assert json.loads(capsys.readouterr().out)["name"] == "sim"


def test_run_writes_outputs(tmp_path, capsys):
    code = main(["run", "--preset", "indoor_static", "--out", str(tmp_path), "--no-timing", "--seed", "4"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["landing_success"] is True
    assert {p.name for p in tmp_path.iterdir()} == {"ticks.csv", "summary.json", "trajectory_xyz.csv"}
    assert json.loads((tmp_path / "summary.json").read_text()) == summary


def test_run_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1, "vehicle": {"mass": 0}}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "vehicle.mass" in capsys.readouterr().err
    assert main(["run"]) == 2


def test_plan_scene_csv(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["plan", "--scene", str(SCENE), "--out", str(out), "--samples", "50"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 50
    assert float(rows[0]["x"]) == pytest.approx(0.0, abs=1e-9)
    assert float(rows[-1]["x"]) == pytest.approx(5.0, abs=1e-6)


def test_plan_scene_errors(tmp_path):
    scene = tmp_path / "s.json"
    scene.write_text(json.dumps({"start": [0, 0, 1], "goal": [1, 0, 1]}))
    assert main(["plan", "--scene", str(scene)]) == 2
    scene.write_text(json.dumps({"start": [0, 0, 1], "goal": [1, 0, 1], "horizon": 2, "extra": 1}))
    assert main(["plan", "--scene", str(scene)]) == 2


def test_gradcheck(capsys):
    assert main(["gradcheck", "--instances", "5"]) == 0
    out = capsys.readouterr().out
    for name in ("cost_smooth", "cost_feasible", "cost_collide", "cost_fit"):
        assert name in out


def test_corners(capsys):
    assert main(["corners", "--preset", "indoor_static", "--uav", "2.5", "0", "2.0"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 40
    assert {r["id"] for r in rows if r["in_range"] == "1"} == {"68"}
