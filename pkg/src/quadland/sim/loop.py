"""Fixed-step closed-loop simulation binding every module together."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from ..geometry import GimbalLock, rotation_from_euler
from ..mission import MissionEvent, MissionState, PadObservation, Phase, mission_step, touchdown_check
from ..perception import NotConverged, detect_markers, estimate_relative_pose
from ..planner.pipeline import DegenerateRequest, PlanRequest, plan
from ..planner.search import GoalOccupied, NoPath, StartOccupied
from ..vehicle import RigidBodyState, Setpoint, StateEstimate, controller_update, estimate_state, integrate_step
from ..world import PlatformState
from .config import ScenarioConfig
from .metrics import compute_metrics


class SimulationDiverged(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TickLog:
    t: float
    state: RigidBodyState
    phase: Phase
    pad: np.ndarray  # pad centre, truth
    detected_ids: tuple = ()
    est_rms_px: float | None = None
    plan_ms: float | None = None  # set on ticks where a plan was computed
    estimate: StateEstimate | None = None
    setpoint: Setpoint | None = None
    pad_estimate: np.ndarray | None = None


@dataclass
class _Active:
    """Trajectory currently being followed."""

    spline: object
    t0: float
    goal_v: np.ndarray

    def reference(self, t: float):
        tau = t - self.t0
        T = self.spline.duration
        if tau <= T:
            return self.spline(tau), self.spline(tau, 1), self.spline(tau, 2)
        end = self.spline(T)
        return end + self.goal_v * (tau - T), self.goal_v.copy(), np.zeros(3)


def _start_from_reference(request: PlanRequest, active: _Active | None, t: float, snap: float = 0.5) -> PlanRequest:
    # continuing from the reference keeps consecutive plans C2-continuous
    if active is None:
        return request
    p, v, a = active.reference(t)
    if np.linalg.norm(p - request.start_p) > snap:
        return request
    return replace(request, start_p=p, start_v=v, start_a=a)


def control_point_count(horizon: float, knot_interval: float, n_max: int, degree: int = 3) -> int:
    """Control points so the knot spacing is about ``knot_interval``, within [2*degree + 1, n_max]."""
    n = int(math.ceil(horizon / knot_interval - 1e-9)) + degree
    return min(max(n, 2 * degree + 1), n_max)


def run_scenario(cfg: ScenarioConfig, seed: int | None = None, keep_estimates: bool = True):
    """Simulate one scenario. Returns ``(SummaryMetrics, [TickLog, ...])``.

    One TickLog is produced per physics step, starting at t = 0. The loop
    stops after logging the tick at which the mission reaches LANDED, or when
    the duration limit is reached.
    """
    seed = cfg.seed if seed is None else seed
    ss = np.random.SeedSequence(seed)
    rng_state, rng_pixels = (np.random.default_rng(s) for s in ss.spawn(2))

    dt = cfg.dt
    params, gains = cfg.vehicle, cfg.gains
    grid = cfg.world.grid()
    layout = cfg.pad
    cam = cfg.camera
    path = cfg.platform.path()
    cam_every = max(1, int(round(1.0 / (cam.rate_hz * dt))))
    n_steps = int(math.floor(cfg.duration / dt + 1e-9))
    land_times = [e.t for e in cfg.events if e.kind == "land"]
    abort_times = [e.t for e in cfg.events if e.kind == "abort"]
    timing = cfg.output.wall_clock_timing

    state = RigidBodyState(p=cfg.initial_position)
    platform = PlatformState(cfg.platform.start, cfg.platform.heading, path.velocity_at(0.0))
    mission = MissionState()
    ctrl = None
    active: _Active | None = None
    setpoint = Setpoint(state.p)
    prev_rel = None
    touchdown = False
    logs = []

    for k in range(n_steps + 1):
        t = k * dt
        if k > 0:
            platform = PlatformState(platform.position + platform.velocity * dt, platform.heading,
                                     path.velocity_at(t))
        est = estimate_state(state, cfg.noise, rng_state)

        pad_obs = None
        det_ids: tuple = ()
        rms = None
        pad_est = None
        if k % cam_every == 0 and mission.phase != Phase.LANDED:
            dets = detect_markers(layout, platform.pose(), state.p, state.euler, cam.mount, cam.intrinsics,
                                  grid, cam.pixel_sigma, rng_pixels)
            det_ids = tuple(sorted(d.marker_id for d in dets))
            if dets:
                try:
                    rel = estimate_relative_pose(dets, layout, cam.intrinsics, cam.mount, prev_rel)
                except NotConverged as exc:
                    rel = exc.estimate
                prev_rel = (rel.R_pad_to_cam, rel.t_pad_to_cam)
                rms = rel.rms_px
                # pose fusion uses the noisy attitude/position estimate, as on the vehicle
                pad_est = est.p + rotation_from_euler(est.euler) @ rel.pad_in_body
                pad_obs = PadObservation(pad_est, rel.yaw, rms, t)
            else:
                prev_rel = None

        # a land command stays latched once issued; an abort is a one-tick pulse
        event = MissionEvent(land_command=any(s <= t for s in land_times),
                             abort=any(s <= t < s + dt for s in abort_times),
                             touchdown=touchdown)
        mission, out = mission_step(mission, est, pad_obs, cfg.mission, event, t)

        plan_ms = None
        if isinstance(out, PlanRequest):
            request = _start_from_reference(out, active, t)
            request = replace(request, grid=grid, weights=cfg.planner,
                              n_points=control_point_count(request.horizon, cfg.knot_interval, cfg.n_points))
            t_wall = time.perf_counter()
            try:
                result = plan(request)
                active = _Active(result.trajectory, t, np.array(out.goal_v))
            except (NoPath, StartOccupied, GoalOccupied, DegenerateRequest):
                # keep the previous reference, or hold position if there is none
                if active is None:
                    setpoint = Setpoint(est.p)
            plan_ms = (time.perf_counter() - t_wall) * 1e3 if timing else 0.0
        elif isinstance(out, Setpoint):
            setpoint = out
            active = None
        if active is not None:
            p_ref, v_ref, _ = active.reference(t)
            setpoint = Setpoint(p_ref, v_ref)

        logs.append(TickLog(t, state, mission.phase, platform.position.copy(), det_ids, rms, plan_ms,
                            est if keep_estimates else None, setpoint if keep_estimates else None, pad_est))
        if mission.phase == Phase.LANDED:
            break

        cmd, ctrl = controller_update(setpoint, est, gains, params, dt, ctrl)
        try:
            state = integrate_step(state, cmd, params, dt)
        except GimbalLock as exc:
            raise SimulationDiverged(f"t={t + dt:.3f}s: {exc}") from None
        if not state.is_finite():
            raise SimulationDiverged(f"t={t + dt:.3f}s: non-finite state")

        # contact: flat ground at z = 0, the pad deck at the platform height
        pad_next = platform.position + platform.velocity * dt
        on_deck = np.all(np.abs(state.p[:2] - pad_next[:2]) <= cfg.platform.deck_half_size)
        support = max(0.0, float(pad_next[2])) if on_deck else 0.0
        if state.p[2] - cfg.gear_height <= support:
            if mission.phase == Phase.LAND:
                touchdown = True
            else:
                p = state.p.copy()
                v = state.v.copy()
                p[2] = support + cfg.gear_height
                v[2] = max(v[2], 0.0)
                state = RigidBodyState(p, v, state.euler, state.omega)

    metrics = compute_metrics(logs, cfg.mission.touchdown_tolerance, cfg.mission.max_touchdown_speed,
                              cfg.world.obstacle_density())
    return metrics, logs


def touchdown_record(logs, cfg: ScenarioConfig):
    """Success record for the final tick of a run that reached LANDED, else None."""
    if not logs or logs[-1].phase != Phase.LANDED:
        return None
    last = logs[-1]
    return touchdown_check(last.state, last.pad, cfg.mission)
