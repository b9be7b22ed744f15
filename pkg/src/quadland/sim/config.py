"""Scenario configuration: JSON in, validated dataclasses out.

Every error is a ``ConfigInvalid`` naming the offending field path, e.g.
``vehicle.mass: must be > 0`` or ``world.obstacles[1].size: expected 3 numbers``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..mission import MissionConfig
from ..perception import CameraIntrinsics, CameraMount, MarkerSpec, PadLayout, default_layout
from ..planner.costs import CostWeights
from ..vehicle import ControllerGains, NoiseConfig, VehicleParams
from ..world import Obstacle, OccupancyGrid, PathSegment, PlatformPath, grid_from_obstacles, kmh


class ConfigInvalid(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


@dataclass(frozen=True)
class WorldConfig:
    bounds: tuple = ((-10.0, -10.0, 0.0), (10.0, 10.0, 6.0))
    resolution: float = 0.15
    inflation: float = 0.3
    obstacles: tuple = ()  # Obstacle boxes

    def grid(self) -> OccupancyGrid:
        return grid_from_obstacles(list(self.obstacles), self.bounds, self.resolution, self.inflation)

    def obstacle_density(self) -> float:
        """Obstacle footprint area per square metre of arena floor."""
        lo, hi = np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        arena = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
        return sum(o.footprint_area() for o in self.obstacles) / arena


@dataclass(frozen=True)
class PlatformConfig:
    start: tuple = (0.0, 0.0, 0.0)
    heading: float = 0.0
    segments: tuple = ()  # PathSegment
    deck_half_size: float = 0.5

    def path(self) -> PlatformPath:
        return PlatformPath(self.segments)


@dataclass(frozen=True)
class CameraConfig:
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    mount: CameraMount = field(default_factory=CameraMount)
    pixel_sigma: float = 0.0
    rate_hz: float = 20.0


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    wall_clock_timing: bool = True  # False writes plan_ms as 0 so files are byte-reproducible


@dataclass(frozen=True)
class ScheduledEvent:
    t: float
    kind: str  # "land" or "abort"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    dt: float = 0.005
    duration: float = 60.0
    initial_position: tuple = (0.0, 0.0, 0.1)
    gear_height: float = 0.1  # body origin above the skids
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    world: WorldConfig = field(default_factory=WorldConfig)
    platform: PlatformConfig = field(default_factory=PlatformConfig)
    pad: PadLayout = field(default_factory=default_layout)
    camera: CameraConfig = field(default_factory=CameraConfig)
    planner: CostWeights = field(default_factory=CostWeights)
    n_points: int = 25  # upper bound on control points per plan
    knot_interval: float = 0.2  # target knot spacing; short horizons use fewer control points
    mission: MissionConfig = field(default_factory=MissionConfig)
    events: tuple = ()
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigInvalid("dt", "must be > 0")
        if not self.duration > 0:
            raise ConfigInvalid("duration", "must be > 0")
        if not self.knot_interval > 0:
            raise ConfigInvalid("knot_interval", "must be > 0")
        if self.n_points < 7:
            raise ConfigInvalid("n_points", "must be >= 7")
        if self.gear_height < 0:
            raise ConfigInvalid("gear_height", "must be >= 0")

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)


# ----------------------------------------------------------------------------- parsing helpers


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigInvalid(path, "must be finite")
    return float(value)


def _vec(value, path, n=3):
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigInvalid(path, f"expected {n} numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _object(value, path):
    if not isinstance(value, dict):
        raise ConfigInvalid(path, "expected an object")
    return value


def _build(cls, data, path, converters=None):
    """Construct dataclass ``cls`` from a dict, checking keys and wrapping ValueErrors."""
    converters = converters or {}
    data = _object(data, path)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key not in fields:
            raise ConfigInvalid(sub, "unknown field")
        if key in converters:
            kwargs[key] = converters[key](value, sub)
            continue
        default = getattr(cls(), key) if _default_constructible(cls) else None
        kwargs[key] = _coerce(value, default, sub)
    try:
        return cls(**kwargs)
    except ConfigInvalid:
        raise
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        head = msg.split()[0].rstrip(":") if msg else ""
        if head in fields:
            # validators name the field first, e.g. "mass must be > 0"
            raise ConfigInvalid(f"{path}.{head}" if path else head, msg[len(head):].lstrip(": ")) from None
        raise ConfigInvalid(path, msg) from None


def _default_constructible(cls) -> bool:
    try:
        cls()
        return True
    except TypeError:
        return False


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigInvalid(path, "expected true/false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(path, "expected an integer")
        return value
    if isinstance(default, float):
        return _number(value, path)
    if isinstance(default, tuple) and default and not isinstance(default[0], tuple):
        return _vec(value, path, len(default))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigInvalid(path, "expected a string")
        return value
    if default is None:
        return None if value is None else _number(value, path)
    return value


def _obstacles(value, path):
    if not isinstance(value, list):
        raise ConfigInvalid(path, "expected a list")
    out = []
    for i, item in enumerate(value):
        sub = f"{path}[{i}]"
        item = _object(item, sub)
        keys = set(item)
        try:
            if keys == {"center", "size"}:
                size = _vec(item["size"], f"{sub}.size")
                if min(size) <= 0:
                    raise ConfigInvalid(f"{sub}.size", "must be > 0")
                out.append(Obstacle.from_center(_vec(item["center"], f"{sub}.center"), size))
            elif keys == {"min", "max"}:
                out.append(Obstacle(_vec(item["min"], f"{sub}.min"), _vec(item["max"], f"{sub}.max")))
            else:
                raise ConfigInvalid(sub, "expected keys {center, size} or {min, max}")
        except ValueError as exc:
            if isinstance(exc, ConfigInvalid):
                raise
            raise ConfigInvalid(sub, str(exc)) from None
    return tuple(out)


def _world(value, path):
    def bounds(v, p):
        if not isinstance(v, list) or len(v) != 2:
            raise ConfigInvalid(p, "expected [min, max]")
        lo, hi = _vec(v[0], f"{p}[0]"), _vec(v[1], f"{p}[1]")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigInvalid(p, "min must be < max on every axis")
        return (lo, hi)

    def positive(v, p):
        x = _number(v, p)
        if not x > 0:
            raise ConfigInvalid(p, "must be > 0")
        return x

    def nonneg(v, p):
        x = _number(v, p)
        if x < 0:
            raise ConfigInvalid(p, "must be >= 0")
        return x

    return _build(WorldConfig, value, path, {"bounds": bounds, "obstacles": _obstacles,
                                             "resolution": positive, "inflation": nonneg})


def _segments(value, path):
    if not isinstance(value, list):
        raise ConfigInvalid(path, "expected a list")
    out = []
    for i, item in enumerate(value):
        sub = f"{path}[{i}]"
        item = _object(item, sub)
        extra = set(item) - {"duration", "velocity", "speed_kmh", "direction"}
        if extra:
            raise ConfigInvalid(f"{sub}.{sorted(extra)[0]}", "unknown field")
        if "duration" not in item:
            raise ConfigInvalid(f"{sub}.duration", "required")
        duration = _number(item["duration"], f"{sub}.duration")
        if duration < 0:
            raise ConfigInvalid(f"{sub}.duration", "must be >= 0")
        if "velocity" in item:
            if "speed_kmh" in item or "direction" in item:
                raise ConfigInvalid(sub, "give either velocity or speed_kmh + direction")
            vel = _vec(item["velocity"], f"{sub}.velocity")
        else:
            speed = kmh(_number(item.get("speed_kmh", 0.0), f"{sub}.speed_kmh"))
            d = np.asarray(_vec(item.get("direction", [1.0, 0.0, 0.0]), f"{sub}.direction"))
            if np.linalg.norm(d) == 0:
                raise ConfigInvalid(f"{sub}.direction", "must be non-zero")
            vel = tuple(float(x) for x in speed * d / np.linalg.norm(d))
        out.append(PathSegment(duration, vel))
    return tuple(out)


def _platform(value, path):
    return _build(PlatformConfig, value, path, {"segments": _segments})


def _pad(value, path):
    value = _object(value, path)
    extra = set(value) - {"scale", "markers"}
    if extra:
        raise ConfigInvalid(f"{path}.{sorted(extra)[0]}", "unknown field")
    scale = _number(value.get("scale", 1.0), f"{path}.scale")
    if not scale > 0:
        raise ConfigInvalid(f"{path}.scale", "must be > 0")
    if "markers" not in value:
        return default_layout(scale)
    markers = []
    if not isinstance(value["markers"], list) or not value["markers"]:
        raise ConfigInvalid(f"{path}.markers", "expected a non-empty list")
    for i, m in enumerate(value["markers"]):
        sub = f"{path}.markers[{i}]"
        m = _object(m, sub)
        need = {"id", "edge", "center", "max_z", "max_offset", "active_z"}
        missing = need - set(m)
        if missing:
            raise ConfigInvalid(f"{sub}.{sorted(missing)[0]}", "required")
        extra = set(m) - need - {"active_offset"}
        if extra:
            raise ConfigInvalid(f"{sub}.{sorted(extra)[0]}", "unknown field")
        ao = m.get("active_offset")
        try:
            markers.append(MarkerSpec(int(m["id"]), _number(m["edge"], f"{sub}.edge"),
                                      _vec(m["center"], f"{sub}.center", 2),
                                      _number(m["max_z"], f"{sub}.max_z"),
                                      _number(m["max_offset"], f"{sub}.max_offset"),
                                      _vec(m["active_z"], f"{sub}.active_z", 2),
                                      None if ao is None else _number(ao, f"{sub}.active_offset")))
        except ConfigInvalid:
            raise
        except ValueError as exc:
            raise ConfigInvalid(sub, str(exc)) from None
    try:
        layout = PadLayout(tuple(markers))
    except ValueError as exc:
        raise ConfigInvalid(f"{path}.markers", str(exc)) from None
    return layout if scale == 1.0 else layout.scaled(scale)


def _camera(value, path):
    def mount(v, p):
        v = _object(v, p)
        extra = set(v) - {"rotation", "offset"}
        if extra:
            raise ConfigInvalid(f"{p}.{sorted(extra)[0]}", "unknown field")
        kw = {}
        if "rotation" in v:
            rows = v["rotation"]
            if not isinstance(rows, list) or len(rows) != 3:
                raise ConfigInvalid(f"{p}.rotation", "expected a 3x3 matrix")
            R = np.array([_vec(r, f"{p}.rotation[{i}]") for i, r in enumerate(rows)])
            if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or np.linalg.det(R) < 0:
                raise ConfigInvalid(f"{p}.rotation", "not a proper rotation")
            kw["rotation"] = R
        if "offset" in v:
            kw["offset"] = np.array(_vec(v["offset"], f"{p}.offset"))
        return CameraMount(**kw)

    def intr(v, p):
        return _build(CameraIntrinsics, v, p)

    cam = _build(CameraConfig, value, path, {"mount": mount, "intrinsics": intr})
    if cam.pixel_sigma < 0:
        raise ConfigInvalid(f"{path}.pixel_sigma", "must be >= 0")
    if not cam.rate_hz > 0:
        raise ConfigInvalid(f"{path}.rate_hz", "must be > 0")
    return cam


def _events(value, path):
    if not isinstance(value, list):
        raise ConfigInvalid(path, "expected a list")
    out = []
    for i, item in enumerate(value):
        sub = f"{path}[{i}]"
        item = _object(item, sub)
        if set(item) != {"t", "kind"}:
            raise ConfigInvalid(sub, "expected keys {t, kind}")
        if item["kind"] not in ("land", "abort"):
            raise ConfigInvalid(f"{sub}.kind", "must be 'land' or 'abort'")
        out.append(ScheduledEvent(_number(item["t"], f"{sub}.t"), item["kind"]))
    return tuple(sorted(out, key=lambda e: e.t))


_SECTIONS = {
    "vehicle": lambda v, p: _build(VehicleParams, v, p),
    "gains": lambda v, p: _build(ControllerGains, v, p),
    "noise": lambda v, p: _build(NoiseConfig, v, p),
    "world": _world,
    "platform": _platform,
    "pad": _pad,
    "camera": _camera,
    "planner": lambda v, p: _build(CostWeights, v, p),
    "mission": lambda v, p: _build(MissionConfig, v, p),
    "events": _events,
    "output": lambda v, p: _build(OutputConfig, v, p),
}


def config_from_dict(data: dict) -> ScenarioConfig:
    data = _object(data, "")
    if "seed" not in data:
        raise ConfigInvalid("seed", "required")
    if isinstance(data["seed"], bool) or not isinstance(data["seed"], int) or data["seed"] < 0:
        raise ConfigInvalid("seed", "expected a non-negative integer")
    return _build(ScenarioConfig, data, "", _SECTIONS)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(data)


def preset_names() -> list:
    files = resources.files("quadland.presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def preset_path(name: str):
    ref = resources.files("quadland.presets") / f"{name}.json"
    if not ref.is_file():
        raise ConfigInvalid("", f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    return ref


def load_preset(name: str) -> ScenarioConfig:
    return config_from_dict(json.loads(preset_path(name).read_text()))
