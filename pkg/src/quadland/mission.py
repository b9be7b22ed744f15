"""Take-off / hover / track / descend / land state machine.

``mission_step`` is a pure transition function: it takes the previous
``MissionState`` and returns the next one together with an output that is
either a ``Setpoint``, a ``PlanRequest`` (the caller plans and follows the
result), or ``None`` (keep following the active trajectory).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .planner.pipeline import PlanRequest
from .vehicle import RigidBodyState, Setpoint


class Phase(str, Enum):
    TAKEOFF = "TAKEOFF"
    HOVER = "HOVER"
    TRACK = "TRACK"
    DESCEND = "DESCEND"
    LAND = "LAND"
    LANDED = "LANDED"


TRANSITIONS = {
    Phase.TAKEOFF: {Phase.HOVER},
    Phase.HOVER: {Phase.TRACK},
    Phase.TRACK: {Phase.DESCEND, Phase.HOVER},
    Phase.DESCEND: {Phase.LAND, Phase.HOVER},
    Phase.LAND: {Phase.LANDED, Phase.HOVER},
    Phase.LANDED: set(),
}


def valid_sequence(phases) -> bool:
    """True when consecutive distinct phases only follow declared edges."""
    prev = None
    for p in phases:
        p = Phase(p)
        if prev is not None and p != prev and p not in TRANSITIONS[prev]:
            return False
        prev = p
    return True


@dataclass(frozen=True)
class MissionConfig:
    preset_point: tuple = (0.0, 0.0, 1.0)
    capture_radius: float = 0.2
    loss_timeout: float = 1.0
    track_distance: float = 2.5  # descend once this much has been flown in TRACK
    descend_height: float = 0.6
    land_height: float = 0.2
    touchdown_tolerance: float = 0.3
    max_touchdown_speed: float = 0.5
    replan_period: float = 0.5
    land_speed: float = 0.3
    descend_speed: float = 0.4  # caps how far below the current height a descent goal may sit
    cruise_speed: float = 1.0
    min_horizon: float = 1.5
    max_horizon: float = 8.0
    track_height: float | None = None  # above the pad; None keeps the hover altitude
    plan_takeoff: bool = False
    max_rms_px: float = 5.0
    pad_alpha: float = 0.4
    pad_beta: float = 0.05

    def __post_init__(self):
        if not 0 < self.land_height < self.descend_height:
            raise ValueError("need 0 < land_height < descend_height")
        for name in ("capture_radius", "loss_timeout", "track_distance", "touchdown_tolerance",
                     "max_touchdown_speed", "replan_period", "land_speed", "descend_speed", "cruise_speed",
                     "min_horizon", "max_horizon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_horizon < self.min_horizon:
            raise ValueError("max_horizon < min_horizon")


@dataclass(frozen=True)
class MissionEvent:
    land_command: bool = False
    abort: bool = False
    touchdown: bool = False


@dataclass(frozen=True)
class PadObservation:
    """Pad centre in the world frame as computed from one camera frame."""

    position: np.ndarray
    yaw: float
    rms_px: float
    stamp: float


@dataclass(frozen=True)
class PadTrack:
    position: np.ndarray
    velocity: np.ndarray
    stamp: float
    updates: int = 1

    def predict(self, t: float) -> np.ndarray:
        return self.position + self.velocity * (t - self.stamp)


def update_pad_track(track: PadTrack | None, obs: PadObservation, alpha: float, beta: float) -> PadTrack:
    """Alpha-beta filter with a constant-velocity model in the pad plane."""
    if track is None:
        return PadTrack(np.asarray(obs.position, float), np.zeros(3), obs.stamp)
    dt = obs.stamp - track.stamp
    if dt <= 0:
        return track
    pred = track.predict(obs.stamp)
    resid = np.asarray(obs.position, float) - pred
    pos = pred + alpha * resid
    vel = track.velocity + (beta / dt) * resid
    vel[2] = 0.0
    return PadTrack(pos, vel, obs.stamp, track.updates + 1)


@dataclass(frozen=True)
class MissionState:
    phase: Phase = Phase.TAKEOFF
    since: float = 0.0
    last_plan: float = -math.inf
    tracked_distance: float = 0.0
    last_clock: float | None = None
    hover_point: np.ndarray | None = None
    origin: np.ndarray | None = None
    pad: PadTrack | None = None


def _enter(state: MissionState, phase: Phase, clock: float, **kw) -> MissionState:
    return replace(state, phase=phase, since=clock, last_plan=-math.inf, **kw)


def _horizon(uav_p, target_at, cfg: MissionConfig, clock: float, planar: bool = True) -> tuple[float, np.ndarray]:
    """Horizon = current offset to the target / cruise speed (a closing speed), clamped.

    The goal is the target extrapolated to ``clock + horizon``.
    """
    k = 2 if planar else 3
    dist = float(np.linalg.norm(target_at(clock)[:k] - uav_p[:k]))
    h = min(max(dist / cfg.cruise_speed, cfg.min_horizon), cfg.max_horizon)
    return h, target_at(clock + h)


def mission_step(state: MissionState, uav: RigidBodyState, pad_obs: PadObservation | None,
                 cfg: MissionConfig, event: MissionEvent | None = None,
                 clock: float = 0.0):
    """Advance the state machine by one tick. Returns ``(next_state, output)``."""
    event = event or MissionEvent()
    p = np.asarray(uav.p, dtype=float)
    preset = np.asarray(cfg.preset_point, dtype=float)
    if state.origin is None:
        state = replace(state, origin=p.copy())

    pad = state.pad
    if pad_obs is not None and pad_obs.rms_px <= cfg.max_rms_px:
        pad = update_pad_track(pad, pad_obs, cfg.pad_alpha, cfg.pad_beta)
    fresh = pad is not None and clock - pad.stamp <= cfg.loss_timeout
    # flown distance from the velocity estimate; differencing noisy positions would inflate it
    elapsed = 0.0 if state.last_clock is None else clock - state.last_clock
    step_len = float(np.linalg.norm(uav.v)) * elapsed
    state = replace(state, pad=pad, last_clock=clock)
    phase = state.phase

    if phase == Phase.LANDED:
        return state, None

    if event.abort:
        if phase != Phase.HOVER:
            state = _enter(state, Phase.HOVER, clock, hover_point=p.copy())
        return state, Setpoint(state.hover_point)

    if phase == Phase.TAKEOFF:
        if np.linalg.norm(p - preset) < cfg.capture_radius:
            state = _enter(state, Phase.HOVER, clock, hover_point=preset.copy())
            return state, Setpoint(preset)
        if not cfg.plan_takeoff:
            return state, Setpoint(preset)
        if abs(p[2] - preset[2]) >= cfg.capture_radius and state.last_plan == -math.inf:
            # climb straight up first; lateral transfer is planned
            return state, Setpoint([state.origin[0], state.origin[1], preset[2]])
        if clock - state.last_plan >= cfg.replan_period:
            h, goal = _horizon(p, lambda _t: preset, cfg, clock, planar=False)
            state = replace(state, last_plan=clock)
            return state, PlanRequest(p, goal, h, start_v=uav.v)
        return state, None

    # at most one transition per tick, so logged phase streams never skip an edge
    if phase == Phase.HOVER:
        if fresh and pad.stamp >= state.since:
            state = _enter(state, Phase.TRACK, clock, tracked_distance=0.0)
            phase = Phase.TRACK
        else:
            return state, Setpoint(state.hover_point if state.hover_point is not None else p)
    elif phase in (Phase.TRACK, Phase.DESCEND) and not fresh:
        state = _enter(state, Phase.HOVER, clock, hover_point=p.copy())
        return state, Setpoint(state.hover_point)
    elif phase == Phase.TRACK:
        state = replace(state, tracked_distance=state.tracked_distance + step_len)
        if state.tracked_distance >= cfg.track_distance or event.land_command:
            state = _enter(state, Phase.DESCEND, clock)
            phase = Phase.DESCEND
    elif phase == Phase.DESCEND:
        q = pad.predict(clock)
        if p[2] - q[2] < cfg.land_height and np.linalg.norm(p[:2] - q[:2]) < cfg.touchdown_tolerance:
            state = _enter(state, Phase.LAND, clock)
            phase = Phase.LAND

    offset = float(np.linalg.norm(p[:2] - pad.predict(clock)[:2]))

    if phase == Phase.LAND:
        if event.touchdown and state.since < clock:
            state = _enter(state, Phase.LANDED, clock)
            return state, None
        target = pad.predict(clock)
        vel = pad.velocity.copy()
        vel[2] = -cfg.land_speed
        return state, Setpoint([target[0], target[1], p[2]], vel)

    # TRACK / DESCEND: replan toward the predicted intercept
    if clock - state.last_plan < cfg.replan_period:
        return state, None
    if phase == Phase.TRACK:
        alt = state.hover_point[2] if state.hover_point is not None else preset[2]

        def target_at(t):
            q = pad.predict(t)
            return np.array([q[0], q[1], alt if cfg.track_height is None else q[2] + cfg.track_height])
    else:
        h_target = cfg.descend_height if offset > cfg.touchdown_tolerance else 0.5 * cfg.land_height

        def target_at(t):
            q = pad.predict(t)
            z = max(q[2] + h_target, p[2] - cfg.descend_speed * (t - clock))
            return np.array([q[0], q[1], z])

    h, goal = _horizon(p, target_at, cfg, clock)
    state = replace(state, last_plan=clock)
    return state, PlanRequest(p, goal, h, start_v=uav.v, goal_v=pad.velocity)


@dataclass(frozen=True)
class TouchdownRecord:
    success: bool
    offset: float
    descent_speed: float
    offset_xy: tuple = field(default=(0.0, 0.0))


def touchdown_check(uav: RigidBodyState, pad_position, cfg: MissionConfig, pad_velocity=(0.0, 0.0, 0.0)) -> TouchdownRecord:
    """Success iff horizontal offset <= tolerance (inclusive) and descent speed <= the limit."""
    d = np.asarray(uav.p[:2], float) - np.asarray(pad_position, float)[:2]
    offset = float(np.hypot(d[0], d[1]))
    descent = float(-(uav.v[2] - np.asarray(pad_velocity, float)[2]))
    ok = offset <= cfg.touchdown_tolerance and descent <= cfg.max_touchdown_speed
    return TouchdownRecord(ok, offset, descent, (float(d[0]), float(d[1])))
