"""Initialisation, time re-assignment and the full plan pipeline."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..world import OccupancyGrid
from .bspline import UniformBSpline, derivative_points
from .costs import CostWeights, anchor_distances, cost_collide, cost_feasible, cost_fit, cost_smooth
from .optimizer import optimize, refine
from .search import StartOccupied, astar_path, colliding_runs, generate_anchors


class DegenerateRequest(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PlanRequest:
    start_p: np.ndarray
    goal_p: np.ndarray
    horizon: float
    start_v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    start_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    goal_v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grid: OccupancyGrid | None = None
    weights: CostWeights = field(default_factory=CostWeights)
    n_points: int = 25

    def __post_init__(self):
        for name in ("start_p", "goal_p", "start_v", "start_a", "goal_v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        if not self.horizon > 0:
            raise DegenerateRequest("horizon must be > 0")
        if self.n_points < 7:
            raise ValueError("need at least 7 control points")


@dataclass(eq=False)
class PlanResult:
    trajectory: UniformBSpline
    init_ms: float
    optimize_ms: float
    refine_ms: float
    iterations: int
    costs: dict
    converged: bool
    collision_free: bool
    anchors: list = field(default_factory=list)
    reference: UniformBSpline | None = None  # curve the refinement fitted to

    @property
    def total_ms(self) -> float:
        return self.init_ms + self.optimize_ms + self.refine_ms


def _boundary_points(p, v, a, dt):
    # cubic uniform: pos = (Q0+4Q1+Q2)/6, vel = (Q2-Q0)/(2dt), acc = (Q0-2Q1+Q2)/dt^2
    q1 = p - a * dt**2 / 6.0
    q0 = q1 + a * dt**2 / 2.0 - v * dt
    q2 = q1 + a * dt**2 / 2.0 + v * dt
    return q0, q1, q2


def init_trajectory(request: PlanRequest) -> UniformBSpline:
    """Cubic spline meeting start/goal position, velocity and acceleration; obstacles ignored."""
    if np.linalg.norm(request.goal_p - request.start_p) < 1e-9 and request.horizon < 1e-6:
        raise DegenerateRequest("start equals goal with a vanishing horizon")
    n = request.n_points
    degree = 3
    dt = request.horizon / (n - degree)
    s0, s1, s2 = _boundary_points(request.start_p, request.start_v, request.start_a, dt)
    # end: reversing time flips the sign of velocity only
    e0, e1, e2 = _boundary_points(request.goal_p, -request.goal_v, np.zeros(3), dt)
    Q = np.empty((n, 3))
    Q[0], Q[1], Q[2] = s0, s1, s2
    Q[-1], Q[-2], Q[-3] = e0, e1, e2
    m = n - 6
    for k in range(1, m + 1):
        w = k / (m + 1)
        Q[2 + k] = (1 - w) * s2 + w * e2
    return UniformBSpline(Q, dt, degree)


def exceedance_ratio(spline: UniformBSpline, weights: CostWeights) -> float:
    V, A, J = derivative_points(spline.control_points, spline.dt)
    r = 1.0
    if len(V):
        r = max(r, np.abs(V).max() / weights.v_max)
    if len(A):
        r = max(r, math.sqrt(np.abs(A).max() / weights.a_max))
    if len(J):
        r = max(r, (np.abs(J).max() / weights.j_max) ** (1.0 / 3.0))
    return r


def time_reassign(spline: UniformBSpline, weights: CostWeights) -> UniformBSpline:
    """Stretch the knot interval until every derivative control point is within limits (per axis)."""
    r = exceedance_ratio(spline, weights)
    if r <= 1.0:
        return spline
    # guard the last ulp so V/r, A/r^2, J/r^3 never round above the limit
    return spline.with_dt(spline.dt * r * (1.0 + 1e-12))


def within_limits(spline: UniformBSpline, weights: CostWeights) -> bool:
    V, A, J = derivative_points(spline.control_points, spline.dt)
    return bool(np.all(np.abs(V) <= weights.v_max) and np.all(np.abs(A) <= weights.a_max)
                and np.all(np.abs(J) <= weights.j_max))


def sample_times(spline: UniformBSpline, step: float) -> np.ndarray:
    n = max(2, int(math.ceil(spline.duration / step)) + 1)
    return np.linspace(0.0, spline.duration, n)


def collision_segments(spline: UniformBSpline, grid: OccupancyGrid, step: float | None = None):
    """Colliding runs of samples as ``(times, points, [(first, last), ...])``."""
    step = spline.dt / 4.0 if step is None else step
    t = sample_times(spline, step)
    pts = spline.sample(t)
    flags = grid.occupied_many(pts)
    return t, pts, colliding_runs(flags)


def anchors_for_collisions(spline: UniformBSpline, grid: OccupancyGrid, segment_offset: int = 0):
    """A* detour plus anchors for every colliding run of ``spline``."""
    t, pts, runs = collision_segments(spline, grid)
    anchors = []
    n = spline.n_points
    for k, (i0, i1) in enumerate(runs):
        if i0 == 0 or i1 == len(t) - 1:
            # a run touching an end point cannot be bracketed by free samples
            continue
        path = astar_path(grid, pts[i0 - 1], pts[i1 + 1])
        seg_lo = min(int(t[i0] / spline.dt), n - 4)
        seg_hi = min(int(t[i1] / spline.dt), n - 4)
        indices = range(seg_lo, min(seg_hi + spline.degree, n - 1) + 1)
        anchors += generate_anchors(spline.control_points, path, grid, indices, segment_offset + k)
    return anchors, runs


def plan_costs(Q, dt, weights: CostWeights, anchors, reference: UniformBSpline | None) -> dict:
    out = {
        "smooth": cost_smooth(Q, dt)[0],
        "collision": cost_collide(Q, anchors, weights.safe_distance)[0],
        "feasibility": cost_feasible(Q, dt, weights)[0],
        "fitness": 0.0,
    }
    if reference is not None:
        out["fitness"] = cost_fit(Q, reference.control_points, dt, weights, reference.degree)[0]
    return out


def plan(request: PlanRequest, max_rebounds: int = 4, clearance_tol: float = 1e-3) -> PlanResult:
    """Initialise, deform around obstacles, re-time and refine one trajectory.

    Collisions are detected by sampling the curve every ``dt/4`` against the
    inflated grid. Each rebound adds anchors for newly colliding runs and
    re-optimises. Deterministic for a given request.
    """
    w = request.weights
    grid = request.grid
    if grid is not None and grid.is_occupied(request.start_p):
        raise StartOccupied("plan start lies in an inflated cell")

    t0 = time.perf_counter()
    spline = init_trajectory(request)
    init_ms = (time.perf_counter() - t0) * 1e3

    t1 = time.perf_counter()
    anchors: list = []
    iterations = 0
    converged = True
    Q = spline.control_points
    if grid is not None and grid.has_obstacles:
        for _ in range(max_rebounds):
            new, runs = anchors_for_collisions(spline.with_control_points(Q), grid, len(anchors))
            if not runs:
                break
            if not new:
                break
            anchors += new
            Q, info = optimize(Q, anchors, w, spline.dt, clearance_tol=clearance_tol)
            iterations += info.iterations
            converged = converged and info.converged
    optimized = spline.with_control_points(Q)
    opt_ms = (time.perf_counter() - t1) * 1e3

    t2 = time.perf_counter()
    reference = time_reassign(optimized, w)
    Qf, info = refine(reference.control_points, reference.control_points, anchors, w, reference.dt,
                      clearance_tol=clearance_tol if anchors else None)
    iterations += info.iterations
    converged = converged and info.converged
    final = time_reassign(reference.with_control_points(Qf), w)
    collision_free = True
    if grid is not None and grid.has_obstacles:
        if collision_segments(final, grid)[2]:
            # refinement cut a corner; fall back to the re-timed optimiser output
            final = reference
            collision_free = not collision_segments(final, grid)[2]
    ref_ms = (time.perf_counter() - t2) * 1e3

    costs = plan_costs(final.control_points, final.dt, w, anchors, reference)
    return PlanResult(final, init_ms, opt_ms, ref_ms, iterations, costs, converged, collision_free,
                      anchors, reference)
