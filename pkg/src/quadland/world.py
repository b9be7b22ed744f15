"""Static obstacles on a voxel grid, the moving landing platform, and raycasting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import FramePose, rot_z


class EmptyBounds(ValueError):
    pass


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(lo > hi):
            raise ValueError("obstacle min corner must be <= max corner")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_center(cls, center, size) -> "Obstacle":
        c = np.asarray(center, dtype=float)
        h = np.asarray(size, dtype=float) / 2.0
        return cls(c - h, c + h)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def footprint_area(self) -> float:
        d = self.hi - self.lo
        return float(d[0] * d[1])


def dilation_cells(inflation: float, resolution: float) -> int:
    # tolerance keeps e.g. 0.3/0.15 = 2.0000000000000004 from rounding up to 3
    return int(math.ceil(inflation / resolution - 1e-9))


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    origin: np.ndarray
    resolution: float
    raw: np.ndarray  # bool[nx, ny, nz]
    inflated: np.ndarray  # bool[nx, ny, nz]
    inflation: float = 0.0

    @property
    def shape(self) -> tuple:
        return self.raw.shape

    @property
    def upper(self) -> np.ndarray:
        return self.origin + np.asarray(self.shape) * self.resolution

    def index_of(self, p) -> np.ndarray:
        """Integer cell index of a point (may be out of bounds)."""
        return np.floor((np.asarray(p, dtype=float) - self.origin) / self.resolution).astype(int)

    def in_bounds(self, idx) -> bool:
        idx = np.asarray(idx)
        return bool(np.all(idx >= 0) and np.all(idx < np.asarray(self.shape)))

    def center_of(self, idx) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def occupied_index(self, idx, inflated: bool = True) -> bool:
        if not self.in_bounds(idx):
            return False
        grid = self.inflated if inflated else self.raw
        return bool(grid[tuple(idx)])

    def is_occupied(self, p, inflated: bool = True) -> bool:
        """Occupancy of the cell containing ``p``; outside the map counts as free."""
        return self.occupied_index(self.index_of(p), inflated)

    def occupied_many(self, pts, inflated: bool = True) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx = np.floor((pts - self.origin) / self.resolution).astype(int)
        ok = np.all((idx >= 0) & (idx < np.asarray(self.shape)), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        grid = self.inflated if inflated else self.raw
        out[ok] = grid[idx[ok, 0], idx[ok, 1], idx[ok, 2]]
        return out

    @property
    def has_obstacles(self) -> bool:
        return bool(self.inflated.any())


def grid_from_obstacles(obstacles, bounds, resolution: float, inflation: float) -> OccupancyGrid:
    """Voxelise boxes by cell-center membership, then dilate by ceil(inflation/res) cells (Chebyshev)."""
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    if inflation < 0:
        raise ValueError("inflation must be >= 0")
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    if np.any(hi - lo <= 0):
        raise EmptyBounds(f"degenerate bounds {lo} .. {hi}")
    shape = tuple(int(n) for n in np.maximum(1, np.ceil((hi - lo) / resolution - 1e-9)))
    axes = [lo[k] + (np.arange(shape[k]) + 0.5) * resolution for k in range(3)]
    raw = np.zeros(shape, dtype=bool)
    for ob in obstacles:
        masks = [(a >= ob.lo[k]) & (a <= ob.hi[k]) for k, a in enumerate(axes)]
        raw |= masks[0][:, None, None] & masks[1][None, :, None] & masks[2][None, None, :]
    r = dilation_cells(inflation, resolution)
    if r > 0 and raw.any():
        inflated = ndimage.binary_dilation(raw, structure=np.ones((3, 3, 3), bool), iterations=r)
    else:
        inflated = raw.copy()
    return OccupancyGrid(lo, float(resolution), raw, inflated, float(inflation))


def raycast(grid: OccupancyGrid, start, end):
    """First point where segment ``start -> end`` enters an inflated-occupied cell, or None.

    Amanatides-Woo voxel traversal. If the start cell itself is occupied the
    start point is returned.
    """
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    if not grid.has_obstacles:
        return None
    d = b - a
    res = grid.resolution
    # clip the segment to the grid box so traversal starts inside it
    t0, t1 = 0.0, 1.0
    lo, hi = grid.origin, grid.upper
    for k in range(3):
        if abs(d[k]) < 1e-15:
            if a[k] < lo[k] or a[k] >= hi[k]:
                return None
            continue
        ta = (lo[k] - a[k]) / d[k]
        tb = (hi[k] - a[k]) / d[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    p0 = a + t0 * d
    idx = np.minimum(np.maximum(grid.index_of(p0), 0), np.asarray(grid.shape) - 1)
    step = np.zeros(3, dtype=int)
    t_max = np.full(3, math.inf)
    t_delta = np.full(3, math.inf)
    for k in range(3):
        if abs(d[k]) < 1e-15:
            continue
        if d[k] > 0:
            step[k] = 1
            t_max[k] = (lo[k] + (idx[k] + 1) * res - a[k]) / d[k]
            t_delta[k] = res / d[k]
        elif d[k] < 0:
            step[k] = -1
            t_max[k] = (lo[k] + idx[k] * res - a[k]) / d[k]
            t_delta[k] = -res / d[k]
    t = t0
    shape = grid.shape
    occ = grid.inflated
    while True:
        if occ[idx[0], idx[1], idx[2]]:
            return a + t * d
        k = int(np.argmin(t_max))
        t = t_max[k]
        if t > t1:
            return None
        idx[k] += step[k]
        if idx[k] < 0 or idx[k] >= shape[k]:
            return None
        t_max[k] += t_delta[k]


@dataclass(frozen=True)
class PlatformState:
    """Landing-pad pose on the ground vehicle; moves in the plane z = const."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    heading: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        v = np.asarray(self.velocity, dtype=float).reshape(3).copy()
        v[2] = 0.0
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)

    @property
    def surface_height(self) -> float:
        return float(self.position[2])

    def pose(self) -> FramePose:
        """Pad frame -> world frame."""
        return FramePose(rot_z(self.heading), self.position)


def platform_advance(platform: PlatformState, dt: float) -> PlatformState:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    return PlatformState(platform.position + platform.velocity * dt, platform.heading, platform.velocity)


def kmh(speed_kmh: float) -> float:
    return speed_kmh / 3.6


@dataclass(frozen=True)
class PathSegment:
    duration: float
    velocity: tuple  # m/s, world frame


class PlatformPath:
    """Piecewise-constant velocity schedule; the last segment's velocity holds forever."""

    def __init__(self, segments):
        self.segments = [s if isinstance(s, PathSegment) else PathSegment(*s) for s in segments]
        for s in self.segments:
            if s.duration < 0:
                raise ValueError("segment duration must be >= 0")

    def velocity_at(self, t: float) -> np.ndarray:
        if not self.segments:
            return np.zeros(3)
        acc = 0.0
        for s in self.segments:
            acc += s.duration
            if t < acc:
                return np.asarray(s.velocity, dtype=float)
        return np.asarray(self.segments[-1].velocity, dtype=float)
