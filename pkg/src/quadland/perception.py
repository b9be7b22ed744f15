"""Pinhole camera, nested fiducial pad, visibility model and PnP pose recovery.

Camera frame follows the usual vision convention: x right, y down, z along
the optical axis. The pad frame has its origin at the centre marker, x/y in
the pad plane aligned with the ground vehicle, z up out of the pad.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import FramePose, rotation_angle, rotation_from_euler, rotation_from_rotvec, skew
from .world import OccupancyGrid, raycast

RANGE_EPS = 1e-9


class BehindCamera(ValueError):
    pass


class NoDetections(ValueError):
    pass


class NotConverged(RuntimeError):
    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 460.0
    fy: float = 460.0
    cx: float = 320.0
    cy: float = 240.0
    skew: float = 0.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be > 0")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point outside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, self.skew, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def inside(self, uv) -> np.ndarray:
        uv = np.atleast_2d(uv)
        return (uv[:, 0] >= 0) & (uv[:, 0] <= self.width) & (uv[:, 1] >= 0) & (uv[:, 1] <= self.height)


# camera looking straight down: cam x -> body x, cam y -> body -y, cam z -> body -z
DOWNWARD = np.diag([1.0, -1.0, -1.0])


@dataclass(frozen=True)
class CameraMount:
    rotation: np.ndarray = field(default_factory=lambda: DOWNWARD.copy())  # R_C^B
    offset: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.02]))  # Offset^c, camera frame

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).reshape(3))

    def camera_in_body(self) -> FramePose:
        """Camera frame -> body frame (consistent with ``apply_body_transform``)."""
        return FramePose(self.rotation, self.rotation @ self.offset)


def camera_pose_in_world(p, euler, mount: CameraMount) -> FramePose:
    """Camera frame -> world frame for a UAV at position ``p`` with attitude ``euler``."""
    body = FramePose(rotation_from_euler(euler), p)
    return body.compose(mount.camera_in_body())


def project_camera_points(intr: CameraIntrinsics, pc) -> np.ndarray:
    pc = np.atleast_2d(pc)
    z = pc[:, 2]
    if np.any(z <= 1e-9):
        raise BehindCamera("point behind (or on) the image plane")
    u = (intr.fx * pc[:, 0] + intr.skew * pc[:, 1]) / z + intr.cx
    v = intr.fy * pc[:, 1] / z + intr.cy
    return np.column_stack([u, v])


def project_point(intr: CameraIntrinsics, camera_pose: FramePose, p_world) -> np.ndarray:
    """Pixel (u, v) of a world point; ``camera_pose`` maps camera frame to world."""
    pc = camera_pose.inverse().apply(p_world)
    return project_camera_points(intr, pc)[0]


# --------------------------------------------------------------------------- pad


@dataclass(frozen=True)
class MarkerSpec:
    id: int
    edge: float
    center: tuple  # (x, y) in pad frame, m
    max_z: float
    max_offset: float
    active_z: tuple  # (lo, hi)
    active_offset: float | None  # None: no constraint beyond the max offset

    def __post_init__(self):
        if not self.edge > 0:
            raise ValueError(f"marker {self.id}: edge must be > 0")
        if not self.active_z[0] <= self.active_z[1]:
            raise ValueError(f"marker {self.id}: active range lo > hi")

    def corners(self) -> np.ndarray:
        """Corners in pad frame, counter-clockwise from local (-e/2, -e/2)."""
        h = self.edge / 2.0
        cx, cy = self.center
        return np.array([[cx - h, cy - h, 0.0], [cx + h, cy - h, 0.0],
                         [cx + h, cy + h, 0.0], [cx - h, cy + h, 0.0]])

    def in_detect_range(self, rel) -> bool:
        """``rel`` is the camera position relative to the marker centre, pad axes."""
        x, y, z = rel
        return (-RANGE_EPS <= z <= self.max_z + RANGE_EPS
                and abs(x) <= self.max_offset + RANGE_EPS
                and abs(y) <= self.max_offset + RANGE_EPS)

    def in_active_range(self, rel) -> bool:
        x, y, z = rel
        if not (self.active_z[0] - RANGE_EPS <= z <= self.active_z[1] + RANGE_EPS):
            return False
        lim = self.max_offset if self.active_offset is None else self.active_offset
        return abs(x) <= lim + RANGE_EPS and abs(y) <= lim + RANGE_EPS

    def scaled(self, s: float) -> "MarkerSpec":
        return MarkerSpec(self.id, self.edge * s, (self.center[0] * s, self.center[1] * s),
                          self.max_z * s, self.max_offset * s,
                          (self.active_z[0] * s, self.active_z[1] * s),
                          None if self.active_offset is None else self.active_offset * s)


# (edge m, max z, max offset, active z, active offset) per marker family
MARKER_TABLE = {
    "43": (0.025, 0.15, 0.15, (0.0, 0.15), 0.15),
    "5-8": (0.064, 0.50, 0.39, (0.20, 0.30), 0.20),
    "1-4": (0.095, 1.15, 0.90, (0.40, 1.00), 0.70),
    "68": (0.257, 3.00, 1.42, (1.00, 3.00), None),
}


def family_of(marker_id: int) -> str:
    if marker_id == 43:
        return "43"
    if 5 <= marker_id <= 8:
        return "5-8"
    if 1 <= marker_id <= 4:
        return "1-4"
    if marker_id == 68:
        return "68"
    raise KeyError(marker_id)


@dataclass(frozen=True)
class PadLayout:
    markers: tuple

    def __post_init__(self):
        ids = [m.id for m in self.markers]
        if len(set(ids)) != len(ids):
            raise ValueError("marker ids must be unique")
        for i, a in enumerate(self.markers):
            for b in self.markers[i + 1:]:
                gap = np.abs(np.subtract(a.center, b.center)) - (a.edge + b.edge) / 2.0
                if np.all(gap < 0):
                    raise ValueError(f"markers {a.id} and {b.id} overlap")

    def by_id(self, marker_id: int) -> MarkerSpec:
        for m in self.markers:
            if m.id == marker_id:
                return m
        raise KeyError(marker_id)

    def scaled(self, s: float) -> "PadLayout":
        return PadLayout(tuple(m.scaled(s) for m in self.markers))


def default_layout(scale: float = 1.0) -> PadLayout:
    """Centre marker 43, ring of 5-8, ring of 1-4, large 68 behind the cluster."""

    def mk(mid, center):
        edge, mz, mo, az, ao = MARKER_TABLE[family_of(mid)]
        return MarkerSpec(mid, edge, center, mz, mo, az, ao)

    d1, d2 = 0.05, 0.14
    markers = [mk(43, (0.0, 0.0))]
    markers += [mk(5 + k, (sx * d1, sy * d1)) for k, (sx, sy) in enumerate([(1, 1), (-1, 1), (-1, -1), (1, -1)])]
    markers += [mk(1 + k, (sx * d2, sy * d2)) for k, (sx, sy) in enumerate([(1, 1), (-1, 1), (-1, -1), (1, -1)])]
    markers.append(mk(68, (0.0, -0.33)))
    layout = PadLayout(tuple(markers))
    return layout if scale == 1.0 else layout.scaled(scale)


@dataclass(frozen=True)
class Detection:
    marker_id: int
    corners_px: np.ndarray  # (4, 2)
    corners_pad: np.ndarray  # (4, 3)


def detect_markers(layout: PadLayout, pad_pose: FramePose, uav_p, uav_euler, mount: CameraMount,
                   intr: CameraIntrinsics, grid: OccupancyGrid | None = None,
                   pixel_sigma: float = 0.0, rng: np.random.Generator | None = None) -> list:
    """Visible markers under the range table, image bounds and line-of-sight tests."""
    cam = camera_pose_in_world(uav_p, uav_euler, mount)
    world_to_cam = cam.inverse()
    cam_in_pad = pad_pose.inverse().apply(cam.translation)
    out = []
    for m in layout.markers:
        rel = cam_in_pad - np.array([m.center[0], m.center[1], 0.0])
        if not m.in_detect_range(rel):
            continue
        corners_pad = m.corners()
        corners_w = corners_pad @ pad_pose.rotation.T + pad_pose.translation
        pc = corners_w @ world_to_cam.rotation.T + world_to_cam.translation
        if np.any(pc[:, 2] <= 1e-9):
            continue
        uv = project_camera_points(intr, pc)
        if not np.all(intr.inside(uv)):
            continue
        if grid is not None and grid.has_obstacles:
            centre_w = pad_pose.apply([m.center[0], m.center[1], 0.0])
            if raycast(grid, cam.translation, centre_w) is not None:
                continue
        out.append(Detection(m.id, uv, corners_pad))
    if pixel_sigma > 0 and out:
        if rng is None:
            raise ValueError("pixel noise needs an rng")
        out = [Detection(d.marker_id, d.corners_px + pixel_sigma * rng.standard_normal((4, 2)), d.corners_pad)
               for d in out]
    return out


# --------------------------------------------------------------------------- PnP


@dataclass(frozen=True)
class RelativePoseEstimate:
    pad_in_body: np.ndarray  # P^b of the pad centre, m
    yaw: float  # pad yaw relative to body, rad
    rms_px: float
    n_markers: int
    R_pad_to_cam: np.ndarray
    t_pad_to_cam: np.ndarray
    iterations: int = 0
    marker_ids: tuple = ()


def apply_body_transform(P_m, R_mc, t_mc, mount: CameraMount) -> np.ndarray:
    """``P^b = R_C^B ((R_M^C P^m + t_M^C) + Offset^c)``."""
    return mount.rotation @ ((np.asarray(R_mc) @ np.asarray(P_m, dtype=float) + np.asarray(t_mc)) + mount.offset)


def reprojection_residuals(intr: CameraIntrinsics, R, t, pts3, uv) -> np.ndarray:
    pc = pts3 @ R.T + t
    return (uv - project_camera_points(intr, pc)).ravel()


def _homography_init(intr: CameraIntrinsics, pts3, uv):
    """Planar pose from a DLT homography (all pad points have z = 0)."""
    Kinv = np.linalg.inv(intr.K)
    xn = (np.column_stack([uv, np.ones(len(uv))]) @ Kinv.T)[:, :2]
    X = pts3[:, :2]

    def normaliser(a):
        c = a.mean(axis=0)
        s = math.sqrt(2.0) / max(np.mean(np.linalg.norm(a - c, axis=1)), 1e-12)
        return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])

    Tx, Tu = normaliser(X), normaliser(xn)
    Xh = np.column_stack([X, np.ones(len(X))]) @ Tx.T
    uh = np.column_stack([xn, np.ones(len(xn))]) @ Tu.T
    rows = []
    for (x, y, w), (u, v, _) in zip(Xh, uh):
        rows.append([x, y, w, 0, 0, 0, -u * x, -u * y, -u * w])
        rows.append([0, 0, 0, x, y, w, -v * x, -v * y, -v * w])
    _, _, vt = np.linalg.svd(np.asarray(rows))
    H = np.linalg.inv(Tu) @ vt[-1].reshape(3, 3) @ Tx
    lam = 2.0 / (np.linalg.norm(H[:, 0]) + np.linalg.norm(H[:, 1]))
    H = H * lam
    if H[2, 2] < 0:
        H = -H
    r1, r2, t = H[:, 0], H[:, 1], H[:, 2]
    R = np.column_stack([r1, r2, np.cross(r1, r2)])
    U, _, Vt = np.linalg.svd(R)
    R = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
    return R, t


def solve_pnp(intr: CameraIntrinsics, pts3, uv, R0=None, t0=None, max_iter: int = 50, tol: float = 1e-10):
    """Gauss-Newton on SE(3) with Levenberg damping when a step increases the cost.

    Returns ``(R, t, rms, iterations, converged)``.
    """
    pts3 = np.asarray(pts3, dtype=float)
    uv = np.asarray(uv, dtype=float)
    if R0 is None or t0 is None:
        R, t = _homography_init(intr, pts3, uv)
    else:
        R, t = np.asarray(R0, dtype=float), np.asarray(t0, dtype=float)
    fx, fy, g = intr.fx, intr.fy, intr.skew
    mu = 0.0
    try:
        r = reprojection_residuals(intr, R, t, pts3, uv)
    except BehindCamera:
        R, t = _homography_init(intr, pts3, uv)
        r = reprojection_residuals(intr, R, t, pts3, uv)
    cost = r @ r
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pr = pts3 @ R.T
        pc = pr + t
        X, Y, Z = pc[:, 0], pc[:, 1], pc[:, 2]
        n = len(pc)
        dproj = np.zeros((n, 2, 3))
        dproj[:, 0, 0] = fx / Z
        dproj[:, 0, 1] = g / Z
        dproj[:, 0, 2] = -(fx * X + g * Y) / Z**2
        dproj[:, 1, 1] = fy / Z
        dproj[:, 1, 2] = -fy * Y / Z**2
        dpc = np.zeros((n, 3, 6))
        for k in range(n):
            dpc[k, :, :3] = -skew(pr[k])
            dpc[k, :, 3:] = np.eye(3)
        J = -np.einsum("nij,njk->nik", dproj, dpc).reshape(-1, 6)
        A = J.T @ J
        b = -J.T @ r
        while True:
            step = np.linalg.solve(A + mu * np.diag(np.diag(A)), b)
            R_new = rotation_from_rotvec(step[:3]) @ R
            t_new = t + step[3:]
            try:
                r_new = reprojection_residuals(intr, R_new, t_new, pts3, uv)
                cost_new = r_new @ r_new
            except BehindCamera:
                cost_new = math.inf
            if cost_new <= cost or np.linalg.norm(step) < tol:
                break
            mu = 1e-4 if mu == 0.0 else mu * 10.0
            if mu > 1e12:
                break
        if cost_new <= cost:
            R, t, r, cost = R_new, t_new, r_new, cost_new
            mu = 0.0 if mu <= 1e-4 else mu / 10.0
        if np.linalg.norm(step) < tol:
            converged = True
            break
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    r = reprojection_residuals(intr, R, t, pts3, uv)
    rms = math.sqrt(float(r @ r) / len(pts3))
    return R, t, rms, it, converged


def _stack(detections, layout: PadLayout):
    pts = np.vstack([layout.by_id(d.marker_id).corners() if d.corners_pad is None else d.corners_pad
                     for d in detections])
    uv = np.vstack([d.corners_px for d in detections])
    return pts, uv


def _make_estimate(R, t, rms, it, used, mount: CameraMount) -> RelativePoseEstimate:
    pb = apply_body_transform(np.zeros(3), R, t, mount)
    R_mb = mount.rotation @ R
    return RelativePoseEstimate(pb, math.atan2(R_mb[1, 0], R_mb[0, 0]), rms, len(used), R, t, it,
                                tuple(d.marker_id for d in used))


def estimate_relative_pose(detections, layout: PadLayout, intr: CameraIntrinsics, mount: CameraMount,
                           initial_guess=None) -> RelativePoseEstimate:
    """Pad pose relative to the UAV body from marker corner observations.

    Solves once over all detections, then re-solves over the markers whose
    range band (from that first solution) is *active*, when there are any.
    ``initial_guess`` is an optional ``(R_pad_to_cam, t_pad_to_cam)`` pair.
    Raises ``NotConverged`` with the last iterate attached.
    """
    if not detections:
        raise NoDetections("no markers visible")
    R0, t0 = (None, None) if initial_guess is None else initial_guess
    pts, uv = _stack(detections, layout)
    R, t, rms, it, ok = solve_pnp(intr, pts, uv, R0, t0)
    used = list(detections)
    # camera position in the pad frame, then per-marker active-band test
    cam_in_pad = -R.T @ t
    active = [d for d in detections
              if layout.by_id(d.marker_id).in_active_range(
                  cam_in_pad - np.array([*layout.by_id(d.marker_id).center, 0.0]))]
    if active and len(active) < len(detections):
        pts, uv = _stack(active, layout)
        R, t, rms, it2, ok = solve_pnp(intr, pts, uv, R, t)
        it += it2
        used = active
    est = _make_estimate(R, t, rms, it, used, mount)
    if not ok:
        raise NotConverged("PnP did not converge in 50 iterations", est)
    return est


def pose_error(R_est, t_est, R_true, t_true) -> tuple:
    return float(np.linalg.norm(np.asarray(t_est) - t_true)), rotation_angle(np.asarray(R_est).T @ R_true)


def corner_table(layout: PadLayout, pad_pose: FramePose, uav_p, uav_euler, mount: CameraMount,
                 intr: CameraIntrinsics) -> list:
    """Rows ``(id, corner, u, v, in_range, in_image)`` for every marker corner (debug aid)."""
    cam = camera_pose_in_world(uav_p, uav_euler, mount)
    cam_in_pad = pad_pose.inverse().apply(cam.translation)
    rows = []
    for m in layout.markers:
        in_range = m.in_detect_range(cam_in_pad - np.array([m.center[0], m.center[1], 0.0]))
        for k, c in enumerate(m.corners()):
            try:
                u, v = project_point(intr, cam, pad_pose.apply(c))
                inside = bool(intr.inside([u, v])[0])
            except BehindCamera:
                u = v = math.nan
                inside = False
            rows.append((m.id, k, float(u), float(v), bool(in_range), inside))
    return rows
