"""Penalty terms over control points, each returning ``(cost, gradient)``.

Gradients have the shape of ``Q`` (N, 3). All penalties are C2 cubic hinges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import basis_matrix


@dataclass(frozen=True)
class CostWeights:
    smooth: float = 1.0
    collision: float = 8.5
    feasibility: float = 0.1
    fitness: float = 1.0
    w_vel: float = 1.0
    w_acc: float = 1.0
    w_jerk: float = 1.0
    v_max: float = 2.0
    a_max: float = 3.0
    j_max: float = 10.0
    safe_distance: float = 0.3
    fit_axial: float = 20.0
    fit_radial: float = 1.0
    fit_samples: int = 100

    def __post_init__(self):
        for name in ("smooth", "collision", "feasibility", "fitness", "w_vel", "w_acc", "w_jerk"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("v_max", "a_max", "j_max", "safe_distance", "fit_axial", "fit_radial"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.fit_samples < 1:
            raise ValueError("fit_samples must be >= 1")


def _diff_ops(Q: np.ndarray, dt: float):
    d1 = (Q[1:] - Q[:-1]) / dt
    d2 = (Q[2:] - 2 * Q[1:-1] + Q[:-2]) / dt**2
    d3 = (Q[3:] - 3 * Q[2:-1] + 3 * Q[1:-2] - Q[:-3]) / dt**3
    return d1, d2, d3


def _scatter_d1(g: np.ndarray, n: int, dt: float) -> np.ndarray:
    out = np.zeros((n, g.shape[1]))
    out[1:] += g / dt
    out[:-1] -= g / dt
    return out


def _scatter_d2(g: np.ndarray, n: int, dt: float) -> np.ndarray:
    out = np.zeros((n, g.shape[1]))
    h = g / dt**2
    out[2:] += h
    out[1:-1] -= 2 * h
    out[:-2] += h
    return out


def _scatter_d3(g: np.ndarray, n: int, dt: float) -> np.ndarray:
    out = np.zeros((n, g.shape[1]))
    h = g / dt**3
    out[3:] += h
    out[2:-1] -= 3 * h
    out[1:-2] += 3 * h
    out[:-3] -= h
    return out


def cost_smooth(Q, dt: float):
    """Sum of squared acceleration and jerk control points."""
    Q = np.asarray(Q, dtype=float)
    _, A, J = _diff_ops(Q, dt)
    cost = float(np.sum(A * A) + np.sum(J * J))
    n = len(Q)
    grad = _scatter_d2(2 * A, n, dt) + _scatter_d3(2 * J, n, dt)
    return cost, grad


def hinge3(u, limit):
    """``max(u-L,0)^3 + max(-L-u,0)^3`` and its derivative in ``u``."""
    over = np.maximum(u - limit, 0.0)
    under = np.maximum(-limit - u, 0.0)
    return over**3 + under**3, 3 * over**2 - 3 * under**2


def cost_feasible(Q, dt: float, weights: CostWeights):
    Q = np.asarray(Q, dtype=float)
    V, A, J = _diff_ops(Q, dt)
    n = len(Q)
    fv, gv = hinge3(V, weights.v_max)
    fa, ga = hinge3(A, weights.a_max)
    fj, gj = hinge3(J, weights.j_max)
    cost = weights.w_vel * fv.sum() + weights.w_acc * fa.sum() + weights.w_jerk * fj.sum()
    grad = (_scatter_d1(weights.w_vel * gv, n, dt) + _scatter_d2(weights.w_acc * ga, n, dt)
            + _scatter_d3(weights.w_jerk * gj, n, dt))
    return float(cost), grad


def anchor_distances(Q, anchors) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    return np.array([float((Q[a.index] - a.point) @ a.direction) for a in anchors])


def cost_collide(Q, anchors, safe_distance: float):
    """Cubic hinge ``(s_f - d)^3`` on every anchor pair with clearance below ``s_f``."""
    Q = np.asarray(Q, dtype=float)
    grad = np.zeros_like(Q)
    cost = 0.0
    for a in anchors:
        d = float((Q[a.index] - a.point) @ a.direction)
        c = safe_distance - d
        if c > 0:
            cost += c**3
            grad[a.index] -= 3 * c**2 * a.direction
    return cost, grad


def fit_basis(n_points: int, degree: int, dt: float, samples: int) -> np.ndarray:
    """Basis rows at midpoint samples of the normalised parameter alpha in [0, 1]."""
    alpha = (np.arange(samples) + 0.5) / samples
    return basis_matrix(n_points, degree, dt, alpha * (n_points - degree) * dt)


def fit_reference(Qs, dt: float, degree: int, samples: int):
    """Sampled reference points and unit tangents (zero where the tangent vanishes)."""
    Qs = np.asarray(Qs, dtype=float)
    n = len(Qs)
    B = fit_basis(n, degree, dt, samples)
    P = B @ Qs
    Bd = fit_basis(n - 1, degree - 1, dt, samples)
    tang = Bd @ ((Qs[1:] - Qs[:-1]) / dt)
    norm = np.linalg.norm(tang, axis=1)
    safe = norm > 1e-9
    T = np.zeros_like(tang)
    T[safe] = tang[safe] / norm[safe, None]
    return B, P, T


def cost_fit(Qf, Qs, dt: float, weights: CostWeights, degree: int = 3, reference=None):
    """Mean of axial^2/a^2 + radial^2/b^2 displacement between the two curves.

    ``reference`` may carry a precomputed ``fit_reference`` triple for ``Qs``.
    """
    Qf = np.asarray(Qf, dtype=float)
    B, P, T = reference if reference is not None else fit_reference(Qs, dt, degree, weights.fit_samples)
    K = len(P)
    delta = B @ Qf - P
    axial = np.sum(delta * T, axis=1)
    radial_vec = delta - axial[:, None] * T
    ia2 = 1.0 / weights.fit_axial**2
    ib2 = 1.0 / weights.fit_radial**2
    cost = (ia2 * np.sum(axial**2) + ib2 * np.sum(radial_vec**2)) / K
    dd = 2.0 * (ia2 * axial[:, None] * T + ib2 * radial_vec) / K
    return float(cost), B.T @ dd
