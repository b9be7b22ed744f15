"""Frames, rotations and Euler-angle kinematics.

Conventions used everywhere in the package:

* world frame is ENU (x east, y north, z up), gravity along -z;
* Euler angles are (roll, pitch, yaw) in the ZYX intrinsic order, so the
  body-to-world rotation is ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``;
* vectors are plain ``numpy`` arrays of shape ``(3,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GIMBAL_EPS = 1e-6


class GimbalLock(ValueError):
    """Raised when pitch is too close to +-90 deg for Euler kinematics."""


def vec3(x, y=None, z=None) -> np.ndarray:
    if y is None:
        out = np.asarray(x, dtype=float).reshape(3)
    else:
        out = np.array([x, y, z], dtype=float)
    return out


def rotation_from_euler(angles) -> np.ndarray:
    """Body-to-world rotation matrix for ZYX (yaw-pitch-roll) angles."""
    roll, pitch, yaw = (float(a) for a in angles)
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cp * cy, -cr * sy + sr * sp * cy, sr * sy + cr * sp * cy],
        [cp * sy, cr * cy + sr * sp * sy, -sr * cy + cr * sp * sy],
        [-sp, sr * cp, cr * cp],
    ])


def euler_from_rotation(R) -> np.ndarray:
    """Inverse of :func:`rotation_from_euler`; raises ``GimbalLock`` at |pitch| = 90 deg."""
    R = np.asarray(R, dtype=float)
    r31 = R[2, 0]
    if abs(r31) >= 1.0 - 1e-9:
        raise GimbalLock(f"R[2,0] = {r31:.12f}: pitch at +-pi/2")
    pitch = -math.asin(r31)
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def euler_rates_from_body_rates(angles, omega) -> np.ndarray:
    roll, pitch, _ = (float(a) for a in angles)
    cp = math.cos(pitch)
    if abs(cp) <= GIMBAL_EPS:
        raise GimbalLock(f"cos(pitch) = {cp:.3e}")
    sr, cr = math.sin(roll), math.cos(roll)
    tp = math.sin(pitch) / cp
    wx, wy, wz = (float(w) for w in omega)
    return np.array([
        wx + sr * tp * wy + cr * tp * wz,
        cr * wy - sr * wz,
        (sr * wy + cr * wz) / cp,
    ])


def body_rates_from_euler_rates(angles, euler_rates) -> np.ndarray:
    """Inverse map of :func:`euler_rates_from_body_rates` (defined everywhere)."""
    roll, pitch, _ = (float(a) for a in angles)
    sr, cr = math.sin(roll), math.cos(roll)
    sp, cp = math.sin(pitch), math.cos(pitch)
    dr, dp, dy = (float(a) for a in euler_rates)
    return np.array([
        dr - sp * dy,
        cr * dp + sr * cp * dy,
        -sr * dp + cr * cp * dy,
    ])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(w) -> np.ndarray:
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_from_rotvec(w) -> np.ndarray:
    """Rodrigues formula; exact for small angles via a Taylor branch."""
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    K = skew(w)
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return (np.eye(3) + math.sin(theta) / theta * K
            + (1.0 - math.cos(theta)) / theta**2 * K @ K)


def rotation_angle(R) -> float:
    """Geodesic angle of a rotation matrix (rad)."""
    c = (np.trace(R) - 1.0) / 2.0
    # arccos loses precision near 0; use the antisymmetric part there
    s = np.linalg.norm([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    return math.atan2(s, min(1.0, max(-1.0, c)))


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class FramePose:
    """Rigid transform ``x -> R @ x + t`` (source frame into target frame)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    def apply(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def compose(self, other: "FramePose") -> "FramePose":
        """``self o other``: apply ``other`` first, then ``self``."""
        return FramePose(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def inverse(self) -> "FramePose":
        Rt = self.rotation.T
        return FramePose(Rt, -Rt @ self.translation)


def transform_point(pose: FramePose, p) -> np.ndarray:
    return pose.apply(p)
