"""Command line: ``quadland run|plan|gradcheck|presets|corners``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .perception import corner_table
from .planner.pipeline import PlanRequest, plan
from .sim import config as simconfig
from .sim import ConfigInvalid, EmptyLog, IoError, SimulationDiverged, emit_outputs, run_scenario


def _load(args):
    if args.config and args.preset:
        raise ConfigInvalid("", "give either --config or --preset, not both")
    if args.preset:
        return simconfig.load_preset(args.preset)
    if args.config:
        return simconfig.load_config(args.config)
    raise ConfigInvalid("", "one of --config or --preset is required")


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.no_timing:
        cfg = cfg.replace(output=replace(cfg.output, wall_clock_timing=False))
    seed = cfg.seed if args.seed is None else args.seed
    cfg = cfg.replace(seed=seed)
    metrics, logs = run_scenario(cfg)
    out = Path(args.out) if args.out else Path(cfg.output.dir)
    paths = emit_outputs(metrics, logs, out)
    print(json.dumps(metrics.to_dict(), indent=2))
    print(f"wrote {', '.join(str(p) for p in paths.values())}", file=sys.stderr)
    return 0 if metrics.landing_success else 3


def _scene_request(path):
    """Scene file: start/goal/horizon plus optional world, planner and derivative fields."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigInvalid("", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    data = simconfig._object(data, "")
    allowed = {"start", "goal", "horizon", "start_v", "start_a", "goal_v", "n_points", "world", "planner", "samples"}
    for key in data:
        if key not in allowed:
            raise ConfigInvalid(key, "unknown field")
    for key in ("start", "goal", "horizon"):
        if key not in data:
            raise ConfigInvalid(key, "required")
    world = simconfig._world(data.get("world", {}), "world")
    weights = simconfig._build(simconfig.CostWeights, data.get("planner", {}), "planner")
    kw = {k: np.array(simconfig._vec(data[k], k)) for k in ("start_v", "start_a", "goal_v") if k in data}
    horizon = simconfig._number(data["horizon"], "horizon")
    n_points = data.get("n_points", 25)
    if isinstance(n_points, bool) or not isinstance(n_points, int) or n_points < 7:
        raise ConfigInvalid("n_points", "expected an integer >= 7")
    samples = data.get("samples", 200)
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 2:
        raise ConfigInvalid("samples", "expected an integer >= 2")
    try:
        req = PlanRequest(np.array(simconfig._vec(data["start"], "start")),
                          np.array(simconfig._vec(data["goal"], "goal")), horizon,
                          grid=world.grid(), weights=weights, n_points=n_points, **kw)
    except ValueError as exc:
        raise ConfigInvalid("", str(exc)) from None
    return req, samples


def cmd_plan(args) -> int:
    req, samples = _scene_request(args.scene)
    if args.samples:
        samples = args.samples
    result = plan(req)
    traj = result.trajectory
    times = np.linspace(0.0, traj.duration, samples)
    P, V, A = traj.sample(times), traj.sample(times, 1), traj.sample(times, 2)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az"])
        for t, p, v, a in zip(times, P, V, A):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in (*p, *v, *a))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"duration {traj.duration:.3f} s, {result.iterations} iterations, {len(result.anchors)} anchors, "
          f"collision_free={result.collision_free}, converged={result.converged}, "
          f"planning {result.total_ms:.1f} ms", file=sys.stderr)
    return 0 if result.collision_free else 3


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_all

    worst = 0.0
    for r in run_all(args.instances, args.seed):
        print(f"{r.name:16s} instances={r.instances:4d} max_rel_error={r.max_rel_error:.3e} ({r.seconds:.2f} s)")
        worst = max(worst, r.max_rel_error)
    return 0 if worst <= args.tol else 3


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in simconfig.preset_names():
            print(name)
        return 0
    if not args.name:
        raise ConfigInvalid("", "presets show needs a preset name")
    print(simconfig.preset_path(args.name).read_text(), end="")
    return 0


def cmd_corners(args) -> int:
    cfg = _load(args)
    from .world import PlatformState

    pad = PlatformState(cfg.platform.start, cfg.platform.heading)
    rows = corner_table(cfg.pad, pad.pose(), np.array(args.uav), np.array(args.euler), cfg.camera.mount,
                        cfg.camera.intrinsics)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["id", "corner", "u", "v", "in_range", "in_image"])
    for row in rows:
        mid, k, u, v, rng_ok, img_ok = row
        w.writerow([mid, k, f"{u:.3f}", f"{v:.3f}", int(rng_ok), int(img_ok)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadland", description="Quadrotor landing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--config", help="scenario JSON file")
        p.add_argument("--preset", help="name of a shipped preset (see 'presets list')")

    p = sub.add_parser("run", help="simulate one scenario and write ticks.csv, summary.json, trajectory_xyz.csv")
    scenario_args(p)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (default: output.dir from the config)")
    p.add_argument("--no-timing", action="store_true", help="log plan_ms as 0 so outputs are byte-reproducible")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="plan one trajectory for a scene file and print CSV samples")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("gradcheck", help="finite-difference check of every planner cost gradient")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("presets", help="list or print shipped scenario presets")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("corners", help="projected marker corners for a UAV pose over the configured pad")
    scenario_args(p)
    p.add_argument("--uav", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--euler", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("ROLL", "PITCH", "YAW"))
    p.set_defaults(func=cmd_corners)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationDiverged, EmptyLog, IoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
