"""Quadrotor rigid-body model, RK4 integrator, cascaded controller, noisy estimates.

The translational model is ``v_dot = (T/m) R e_z - g e_z - diag(d) v + F_ext/m``.
The textbook form that scales gravity and drag by ``T/m`` is dimensionally
inconsistent, so the standard form above is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    body_rates_from_euler_rates,
    euler_from_rotation,
    euler_rates_from_body_rates,
    rotation_from_euler,
    wrap_angle,
)


def _v3(values) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(3)


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1.5
    inertia: tuple = (0.029, 0.029, 0.055)
    rotor_inertia: float = 6e-5
    rotor_speed: float = 0.0  # residual (net) rotor speed for gyroscopic terms
    drag: tuple = (0.1, 0.1, 0.1)
    gravity: float = 9.81
    thrust_min: float = 0.0
    thrust_max: float = 36.0
    torque_max: tuple = (1.0, 1.0, 0.3)
    disturbance: tuple = (0.0, 0.0, 0.0)  # constant world-frame force, N

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if min(self.inertia) <= 0:
            raise ValueError("inertia entries must be > 0")
        if self.thrust_min < 0 or not self.thrust_max > self.thrust_min:
            raise ValueError("need 0 <= thrust_min < thrust_max")
        if min(self.drag) < 0:
            raise ValueError("drag coefficients must be >= 0")
        if min(self.torque_max) <= 0:
            raise ValueError("torque limits must be > 0")


@dataclass(frozen=True)
class RigidBodyState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("p", "v", "euler", "omega"):
            object.__setattr__(self, name, _v3(getattr(self, name)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.euler, self.omega])

    @classmethod
    def from_vector(cls, x) -> "RigidBodyState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    @property
    def rotation(self) -> np.ndarray:
        return rotation_from_euler(self.euler)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


@dataclass(frozen=True)
class ControlCommand:
    thrust: float
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "thrust", float(self.thrust))
        object.__setattr__(self, "torque", _v3(self.torque))

    def clamped(self, params: VehicleParams) -> "ControlCommand":
        tmax = np.asarray(params.torque_max, dtype=float)
        return ControlCommand(min(max(self.thrust, params.thrust_min), params.thrust_max),
                              np.clip(self.torque, -tmax, tmax))


def _derivative(x: np.ndarray, thrust: float, torque: np.ndarray, params: VehicleParams) -> np.ndarray:
    v = x[3:6]
    euler = x[6:9]
    w = x[9:12]
    R = rotation_from_euler(euler)
    m = params.mass
    acc = (thrust / m) * R[:, 2] - np.asarray(params.drag) * v + np.asarray(params.disturbance) / m
    acc[2] -= params.gravity
    Ixx, Iyy, Izz = params.inertia
    jr = params.rotor_inertia * params.rotor_speed
    wx, wy, wz = w
    tx, ty, tz = torque
    wdot = np.array([
        ((Iyy - Izz) * wy * wz + tx + jr * wy) / Ixx,
        ((Izz - Ixx) * wx * wz + ty - jr * wx) / Iyy,
        ((Ixx - Iyy) * wx * wy + tz) / Izz,
    ])
    return np.concatenate([v, acc, euler_rates_from_body_rates(euler, w), wdot])


def dynamics_derivative(state: RigidBodyState, cmd: ControlCommand, params: VehicleParams) -> RigidBodyState:
    """Time derivative of the state, packed in a ``RigidBodyState`` container.

    Fields hold (p_dot, v_dot, euler_dot, omega_dot). Raises ``GimbalLock`` when
    the attitude is at the Euler singularity.
    """
    return RigidBodyState.from_vector(_derivative(state.to_vector(), cmd.thrust, cmd.torque, params))


def integrate_step(state: RigidBodyState, cmd: ControlCommand, params: VehicleParams, dt: float) -> RigidBodyState:
    """One classical RK4 step with the command held constant over ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x = state.to_vector()
    T, tau = cmd.thrust, cmd.torque
    k1 = _derivative(x, T, tau, params)
    k2 = _derivative(x + 0.5 * dt * k1, T, tau, params)
    k3 = _derivative(x + 0.5 * dt * k2, T, tau, params)
    k4 = _derivative(x + dt * k3, T, tau, params)
    return RigidBodyState.from_vector(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


# --------------------------------------------------------------------------- control


@dataclass(frozen=True)
class ControllerGains:
    """Cascade gains. Position is P, velocity is PID, attitude is P, body rate is PID.

    Velocity-loop outputs are accelerations (m/s^2); rate-loop outputs are angular
    accelerations (rad/s^2) scaled by inertia into torques.
    """

    pos_p: tuple = (1.2, 1.2, 1.5)
    vel_p: tuple = (2.5, 2.5, 4.0)
    vel_i: tuple = (0.4, 0.4, 1.0)
    vel_d: tuple = (0.0, 0.0, 0.0)
    vel_int_limit: tuple = (2.0, 2.0, 3.0)
    att_p: tuple = (7.0, 7.0, 3.0)
    rate_p: tuple = (25.0, 25.0, 12.0)
    rate_i: tuple = (5.0, 5.0, 2.0)
    rate_d: tuple = (0.0, 0.0, 0.0)
    rate_int_limit: tuple = (5.0, 5.0, 3.0)
    max_vel_xy: float = 3.0
    max_vel_z: float = 1.5
    max_tilt: float = 0.6
    max_rate: tuple = (3.5, 3.5, 2.0)

    def __post_init__(self):
        for name in ("pos_p", "vel_p", "vel_i", "vel_d", "att_p", "rate_p", "rate_i", "rate_d"):
            if min(getattr(self, name)) < 0:
                raise ValueError(f"{name}: gains must be >= 0")
        for name in ("vel_int_limit", "rate_int_limit", "max_rate"):
            if min(getattr(self, name)) <= 0:
                raise ValueError(f"{name}: must be > 0")
        if not (self.max_vel_xy > 0 and self.max_vel_z > 0 and 0 < self.max_tilt < math.pi / 2):
            raise ValueError("velocity/tilt limits out of range")


@dataclass(frozen=True)
class ControllerState:
    vel_int: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rate_int: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_vel_err: np.ndarray | None = None
    prev_rate_err: np.ndarray | None = None
    attitude_sp: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class Setpoint:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", _v3(self.position))
        object.__setattr__(self, "velocity", _v3(self.velocity))
        object.__setattr__(self, "yaw", float(self.yaw))


@dataclass(frozen=True)
class NoiseConfig:
    position: float = 0.0
    velocity: float = 0.0
    attitude: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if min(self.position, self.velocity, self.attitude, self.rate) < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class StateEstimate(RigidBodyState):
    noise: NoiseConfig = field(default_factory=NoiseConfig)


def estimate_state(truth: RigidBodyState, noise: NoiseConfig, rng: np.random.Generator) -> StateEstimate:
    """Truth plus independent zero-mean Gaussian noise per channel.

    Always draws 12 normals so the PRNG stream does not depend on which sigmas
    are zero.
    """
    z = rng.standard_normal(12)
    return StateEstimate(
        truth.p + noise.position * z[0:3],
        truth.v + noise.velocity * z[3:6],
        truth.euler + noise.attitude * z[6:9],
        truth.omega + noise.rate * z[9:12],
        noise=noise,
    )


def _desired_attitude(force: np.ndarray, yaw: float) -> np.ndarray:
    zb = force / np.linalg.norm(force)
    xc = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    yb = np.cross(zb, xc)
    yb /= np.linalg.norm(yb)
    xb = np.cross(yb, zb)
    return euler_from_rotation(np.column_stack([xb, yb, zb]))


def controller_update(setpoint: Setpoint, est: RigidBodyState, gains: ControllerGains,
                      params: VehicleParams, dt: float,
                      state: ControllerState | None = None) -> tuple[ControlCommand, ControllerState]:
    """Run the cascade once and return the clamped command plus the new controller state.

    Integrators are clamped to their limits and frozen on any axis whose output
    saturates (thrust, tilt or torque).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if state is None:
        state = ControllerState()
    m, g = params.mass, params.gravity

    # position P -> velocity setpoint
    v_sp = np.asarray(gains.pos_p) * (setpoint.position - est.p) + setpoint.velocity
    vxy = math.hypot(v_sp[0], v_sp[1])
    if vxy > gains.max_vel_xy:
        v_sp[:2] *= gains.max_vel_xy / vxy
    v_sp[2] = min(max(v_sp[2], -gains.max_vel_z), gains.max_vel_z)

    # velocity PID -> acceleration setpoint
    e_v = v_sp - est.v
    d_v = np.zeros(3) if state.prev_vel_err is None else (e_v - state.prev_vel_err) / dt
    int_lim = np.asarray(gains.vel_int_limit)
    vel_int_new = np.clip(state.vel_int + np.asarray(gains.vel_i) * e_v * dt, -int_lim, int_lim)
    a_sp = np.asarray(gains.vel_p) * e_v + np.asarray(gains.vel_d) * d_v + vel_int_new

    # thrust vector including gravity and drag compensation
    force = m * (a_sp + np.asarray(params.drag) * est.v)
    force[2] += m * g
    sat = np.zeros(3, dtype=bool)
    fz_min = 0.1 * m * g
    if force[2] < fz_min:
        force[2] = fz_min
        sat[2] = True
    max_h = force[2] * math.tan(gains.max_tilt)
    fh = math.hypot(force[0], force[1])
    if fh > max_h:
        force[:2] *= max_h / fh
        sat[:2] = True
    thrust = float(np.linalg.norm(force))
    if thrust > params.thrust_max:
        force *= params.thrust_max / thrust
        thrust = params.thrust_max
        sat[:] = True
    elif thrust < params.thrust_min:
        thrust = params.thrust_min
        sat[2] = True
    vel_int = np.where(sat, state.vel_int, vel_int_new)

    # attitude P (on Euler errors) -> body-rate setpoint
    att_sp = _desired_attitude(force, setpoint.yaw)
    err = att_sp - est.euler
    err[2] = wrap_angle(err[2])
    rate_sp = body_rates_from_euler_rates(est.euler, np.asarray(gains.att_p) * err)
    rate_sp = np.clip(rate_sp, -np.asarray(gains.max_rate), np.asarray(gains.max_rate))

    # body-rate PID -> torques
    e_w = rate_sp - est.omega
    d_w = np.zeros(3) if state.prev_rate_err is None else (e_w - state.prev_rate_err) / dt
    rlim = np.asarray(gains.rate_int_limit)
    rate_int_new = np.clip(state.rate_int + np.asarray(gains.rate_i) * e_w * dt, -rlim, rlim)
    alpha = np.asarray(gains.rate_p) * e_w + np.asarray(gains.rate_d) * d_w + rate_int_new
    inertia = np.asarray(params.inertia)
    w = est.omega
    gyro = np.cross(w, inertia * w)
    torque = inertia * alpha + gyro
    tmax = np.asarray(params.torque_max)
    tsat = np.abs(torque) > tmax
    torque = np.clip(torque, -tmax, tmax)
    rate_int = np.where(tsat, state.rate_int, rate_int_new)

    cmd = ControlCommand(thrust, torque)
    new_state = ControllerState(vel_int, rate_int, e_v, e_w, att_sp)
    return cmd, new_state


def hover_command(params: VehicleParams) -> ControlCommand:
    return ControlCommand(params.mass * params.gravity, np.zeros(3))
