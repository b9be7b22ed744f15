"""Uniform B-splines with time-parameterised evaluation.

A spline of degree ``p`` with ``N`` control points and knot interval ``dt`` is
defined on ``[0, (N - p) * dt]``. Time zero is the first knot of the valid span.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class OutOfDomain(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UniformBSpline:
    control_points: np.ndarray  # (N, dim)
    dt: float
    degree: int = 3

    def __post_init__(self):
        Q = np.array(self.control_points, dtype=float)
        if Q.ndim == 1:
            Q = Q[:, None]
        if len(Q) < self.degree + 1:
            raise ValueError(f"need at least {self.degree + 1} control points, got {len(Q)}")
        if not self.dt > 0:
            raise ValueError("knot interval must be > 0")
        object.__setattr__(self, "control_points", Q)

    @property
    def n_points(self) -> int:
        return len(self.control_points)

    @property
    def duration(self) -> float:
        return (self.n_points - self.degree) * self.dt

    def derivative(self) -> "UniformBSpline":
        """Derivative spline: degree p-1 over (Q[i+1] - Q[i]) / dt, same time domain."""
        if self.degree == 0:
            raise ValueError("degree-0 spline has no derivative spline")
        Q = self.control_points
        return UniformBSpline((Q[1:] - Q[:-1]) / self.dt, self.dt, self.degree - 1)

    def _locate(self, t: float) -> tuple[int, float]:
        T = self.duration
        if t < -1e-12 or t > T + 1e-12 or not np.isfinite(t):
            raise OutOfDomain(f"t={t} outside [0, {T}]")
        t = min(max(t, 0.0), T)
        seg = min(int(t / self.dt), self.n_points - self.degree - 1)
        return seg, t / self.dt - seg

    def _de_boor(self, seg: int, u: float) -> np.ndarray:
        # uniform knots at integer positions; span [p+seg, p+seg+1] in knot units
        p = self.degree
        d = [self.control_points[seg + j].copy() for j in range(p + 1)]
        x = p + seg + u
        for r in range(1, p + 1):
            for j in range(p, r - 1, -1):
                i = j + seg
                alpha = (x - i) / (p + 1 - r)
                # affine form: equal neighbours reproduce exactly
                d[j] = d[j - 1] + alpha * (d[j] - d[j - 1])
        return d[p]

    def evaluate(self, t: float, order: int = 0) -> np.ndarray:
        if order < 0:
            raise ValueError("order must be >= 0")
        spl = self
        for _ in range(order):
            if spl.degree == 0:
                return np.zeros(self.control_points.shape[1])
            spl = spl.derivative()
        seg, u = spl._locate(t)
        return spl._de_boor(seg, u)

    __call__ = evaluate

    def sample(self, times, order: int = 0) -> np.ndarray:
        """Vectorised evaluation through the basis matrix."""
        spl = self
        for _ in range(order):
            spl = spl.derivative()
        return basis_matrix(spl.n_points, spl.degree, spl.dt, times) @ spl.control_points

    def with_control_points(self, Q) -> "UniformBSpline":
        return UniformBSpline(Q, self.dt, self.degree)

    def with_dt(self, dt: float) -> "UniformBSpline":
        return UniformBSpline(self.control_points, dt, self.degree)


def _basis_weights(degree: int, u: np.ndarray) -> np.ndarray:
    """Uniform B-spline basis values on one span, shape (len(u), degree+1)."""
    u = np.asarray(u, dtype=float)
    if degree == 3:
        u2, u3 = u * u, u * u * u
        return np.column_stack([
            (1 - u) ** 3 / 6.0,
            (3 * u3 - 6 * u2 + 4) / 6.0,
            (-3 * u3 + 3 * u2 + 3 * u + 1) / 6.0,
            u3 / 6.0,
        ])
    out = np.empty((len(u), degree + 1))
    eye = np.eye(degree + 1)
    for j in range(degree + 1):
        # evaluate the single-coefficient spline via de Boor
        spl = UniformBSpline(eye[:, j], 1.0, degree)
        out[:, j] = [spl._de_boor(0, float(x))[0] for x in u]
    return out


def basis_matrix(n_points: int, degree: int, dt: float, times) -> np.ndarray:
    """Matrix ``B`` with ``B @ Q`` equal to the spline sampled at ``times``."""
    times = np.asarray(times, dtype=float)
    T = (n_points - degree) * dt
    if np.any(times < -1e-12) or np.any(times > T + 1e-12):
        raise OutOfDomain("sample time outside the spline domain")
    t = np.clip(times, 0.0, T)
    seg = np.minimum((t / dt).astype(int), n_points - degree - 1)
    u = t / dt - seg
    W = _basis_weights(degree, u)
    B = np.zeros((len(t), n_points))
    rows = np.arange(len(t))
    for j in range(degree + 1):
        B[rows, seg + j] = W[:, j]
    return B


def spline_evaluate(spline: UniformBSpline, t: float, order: int = 0) -> np.ndarray:
    return spline.evaluate(t, order)


def derivative_points(Q: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Velocity, acceleration and jerk control points of a uniform spline."""
    V = (Q[1:] - Q[:-1]) / dt
    A = (V[1:] - V[:-1]) / dt
    J = (A[1:] - A[:-1]) / dt
    return V, A, J
