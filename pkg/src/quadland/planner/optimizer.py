"""Limited-memory quasi-Newton minimiser and the two planner objectives."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .costs import CostWeights, anchor_distances, cost_collide, cost_feasible, cost_fit, cost_smooth, fit_reference


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    iterations: int
    converged: bool
    reason: str
    history: list = field(default_factory=list)


def lbfgs(fun, x0, memory: int = 8, max_iter: int = 200, gtol: float = 1e-6, ftol: float = 1e-8,
          c1: float = 1e-4, max_backtracks: int = 50) -> LbfgsResult:
    """Minimise ``fun(x) -> (f, g)`` with two-loop L-BFGS and Armijo backtracking.

    Stops when ``max|g| < gtol``, when the relative decrease of f drops under
    ``ftol``, or after ``max_iter`` iterations (reported as not converged).
    ``history`` holds f at every accepted iterate and is non-increasing.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    history = [f]
    S, Y = [], []
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g), initial=0.0) < gtol:
            return LbfgsResult(x, f, it - 1, True, "gradient", history)
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if S:
            gamma = (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        else:
            gamma = 1.0 / max(np.linalg.norm(g), 1e-12)
        r = gamma * q
        for (s, y), a in zip(zip(S, Y), reversed(alphas)):
            rho = 1.0 / (y @ s)
            b = rho * (y @ r)
            r += s * (a - b)
        d = -r
        slope = g @ d
        if slope >= 0:
            # memory produced an ascent direction; restart on steepest descent
            S.clear()
            Y.clear()
            d = -g / max(np.linalg.norm(g), 1e-12)
            slope = g @ d
        step = 1.0
        for _ in range(max_backtracks):
            x_new = x + step * d
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + c1 * step * slope:
                break
            step *= 0.5
        else:
            return LbfgsResult(x, f, it, True, "line search stalled", history)
        s_vec = x_new - x
        y_vec = g_new - g
        if s_vec @ y_vec > 1e-12 * max(1.0, np.linalg.norm(s_vec) * np.linalg.norm(y_vec)):
            S.append(s_vec)
            Y.append(y_vec)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        rel = (f - f_new) / max(abs(f), 1e-300)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        if rel < ftol:
            return LbfgsResult(x, f, it, True, "cost change", history)
    return LbfgsResult(x, f, max_iter, False, "max iterations", history)


@dataclass
class OptimizeInfo:
    converged: bool
    iterations: int
    history: list
    collision_weight: float
    rounds: int = 1


def _objective(Q0, free, dt, weights: CostWeights, anchors, fit_ref=None):
    Q = Q0.copy()

    def fun(x):
        Q[free] = x.reshape(-1, Q.shape[1])
        total, grad = 0.0, np.zeros_like(Q)
        if weights.smooth:
            c, gq = cost_smooth(Q, dt)
            total += weights.smooth * c
            grad += weights.smooth * gq
        if anchors and weights.collision:
            c, gq = cost_collide(Q, anchors, weights.safe_distance)
            total += weights.collision * c
            grad += weights.collision * gq
        if fit_ref is None:
            if weights.feasibility:
                c, gq = cost_feasible(Q, dt, weights)
                total += weights.feasibility * c
                grad += weights.feasibility * gq
        elif weights.fitness:
            c, gq = cost_fit(Q, None, dt, weights, reference=fit_ref)
            total += weights.fitness * c
            grad += weights.fitness * gq
        return total, grad[free].ravel()

    return fun


def _run(Q0, anchors, weights: CostWeights, dt: float, degree: int, fit_ref, clearance_tol, max_rounds):
    Q0 = np.array(Q0, dtype=float)
    n = len(Q0)
    free = np.zeros(n, dtype=bool)
    free[degree:n - degree] = True
    if not free.any():
        return Q0, OptimizeInfo(True, 0, [], weights.collision, 0)
    Q = Q0.copy()
    w = weights
    history, iters, converged, rounds = [], 0, True, 0
    for rounds in range(1, max_rounds + 1):
        fun = _objective(Q, free, dt, w, anchors, fit_ref)
        res = lbfgs(fun, Q[free].ravel())
        Q[free] = res.x.reshape(-1, Q.shape[1])
        history.extend(res.history)
        iters += res.iterations
        converged = res.converged
        if clearance_tol is None or not anchors:
            break
        d = anchor_distances(Q, [a for a in anchors if free[a.index]])
        if d.size == 0 or d.min() >= w.safe_distance - clearance_tol:
            break
        w = replace(w, collision=max(w.collision, 1.0) * 10.0)
    return Q, OptimizeInfo(converged, iters, history, w.collision, rounds)


def optimize(Q0, anchors, weights: CostWeights, dt: float, degree: int = 3,
             clearance_tol: float | None = None, max_rounds: int = 12):
    """Minimise ``smooth*J_s + collision*J_c + feasibility*J_d`` over interior control points.

    The first and last ``degree`` control points stay fixed. With
    ``clearance_tol`` set, the collision weight is raised tenfold and the
    solve restarted from the current iterate until every anchor clearance is
    at least ``safe_distance - clearance_tol`` (or ``max_rounds`` is hit).
    Returns ``(Q, OptimizeInfo)``.
    """
    return _run(Q0, anchors, weights, dt, degree, None, clearance_tol, max_rounds)


def refine(Q0, Qs, anchors, weights: CostWeights, dt: float, degree: int = 3,
           clearance_tol: float | None = None, max_rounds: int = 12):
    """Minimise ``smooth*J_s + collision*J_c + fitness*J_f`` against the reference ``Qs``."""
    ref = fit_reference(Qs, dt, degree, weights.fit_samples)
    return _run(Q0, anchors, weights, dt, degree, ref, clearance_tol, max_rounds)
