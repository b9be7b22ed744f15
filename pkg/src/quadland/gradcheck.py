"""Central finite-difference checks for the planner cost gradients."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .planner.bspline import UniformBSpline
from .planner.costs import CostWeights, cost_collide, cost_feasible, cost_fit, cost_smooth, fit_reference
from .planner.search import AnchorPair


def numerical_gradient(fun, x, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``fun`` at ``x`` (any shape)."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        fp = fun(x)
        flat[i] = keep - h
        fm = fun(x)
        flat[i] = keep
        gflat[i] = (fp - fm) / (2 * h)
    return g


def max_relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """``max|a - n| / max(max|a|, max|n|)``; zero when both are below ``floor``."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    scale = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0))
    if scale < floor:
        return 0.0
    return float(np.abs(a - n).max() / scale)


@dataclass
class GradcheckReport:
    name: str
    instances: int
    max_rel_error: float
    seconds: float


def _random_problem(rng):
    n = int(rng.integers(8, 16))
    dt = float(rng.uniform(0.2, 0.6))
    Q = np.cumsum(rng.normal(0.0, 0.4, size=(n, 3)), axis=0)
    return Q, dt


def _smooth_instance(rng):
    Q, dt = _random_problem(rng)
    return Q, lambda q: cost_smooth(q, dt)


def _feasible_instance(rng):
    Q, dt = _random_problem(rng)
    # tight limits so every hinge family is active somewhere
    w = CostWeights(v_max=0.5, a_max=1.0, j_max=2.0, w_vel=rng.uniform(0.5, 2), w_acc=rng.uniform(0.5, 2),
                    w_jerk=rng.uniform(0.5, 2))
    return Q, lambda q: cost_feasible(q, dt, w)


def _collide_instance(rng):
    Q, _ = _random_problem(rng)
    anchors = []
    for i in rng.choice(len(Q), size=min(5, len(Q)), replace=False):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        # place the surface so clearance lands anywhere in (-0.3, 0.25)
        d = rng.uniform(-0.3, 0.25)
        anchors.append(AnchorPair(int(i), Q[i] - d * v, v))
    return Q, lambda q: cost_collide(q, anchors, 0.3)


def _fit_instance(rng):
    Qs, dt = _random_problem(rng)
    Qf = Qs + rng.normal(0.0, 0.3, size=Qs.shape)
    w = CostWeights()
    ref = fit_reference(Qs, dt, 3, w.fit_samples)
    return Qf, lambda q: cost_fit(q, Qs, dt, w, reference=ref)


SUITES = {
    "cost_smooth": _smooth_instance,
    "cost_feasible": _feasible_instance,
    "cost_collide": _collide_instance,
    "cost_fit": _fit_instance,
}


def check_cost(name: str, instances: int = 50, seed: int = 0, h: float = 1e-6) -> GradcheckReport:
    make = SUITES[name]
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(instances):
        Q, fun = make(rng)
        _, g = fun(Q)
        num = numerical_gradient(lambda q: fun(q)[0], Q, h)
        worst = max(worst, max_relative_error(g, num))
    return GradcheckReport(name, instances, worst, time.perf_counter() - t0)


def check_spline_derivatives(instances: int = 50, seed: int = 0, h: float = 1e-6) -> GradcheckReport:
    """Analytic spline derivative vs central differences of the position curve."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(instances):
        Q, dt = _random_problem(rng)
        s = UniformBSpline(Q, dt)
        t = float(rng.uniform(h, s.duration - h))
        num = (s(t + h) - s(t - h)) / (2 * h)
        worst = max(worst, max_relative_error(s(t, 1), num))
    return GradcheckReport("spline_velocity", instances, worst, time.perf_counter() - t0)


def run_all(instances: int = 50, seed: int = 0) -> list:
    reports = [check_cost(name, instances, seed) for name in SUITES]
    reports.append(check_spline_derivatives(instances, seed))
    return reports
