"""Grid search front end: 26-connected A* and anchor-pair generation."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..world import OccupancyGrid


class NoPath(RuntimeError):
    pass


class StartOccupied(ValueError):
    pass


class GoalOccupied(ValueError):
    pass


_OFFSETS = np.array([o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)])
_STEP_COST = np.linalg.norm(_OFFSETS, axis=1)


def astar_path(grid: OccupancyGrid, start, goal, max_expansions: int = 400_000) -> np.ndarray:
    """Cell-centre polyline from the start cell to the goal cell on the inflated grid.

    Euclidean heuristic; heap ties are broken by insertion order, so the
    result is deterministic.
    """
    s = tuple(int(i) for i in grid.index_of(start))
    g = tuple(int(i) for i in grid.index_of(goal))
    if not grid.in_bounds(s) or grid.inflated[s]:
        raise StartOccupied(f"start {np.round(start, 3)} is occupied or outside the map")
    if not grid.in_bounds(g) or grid.inflated[g]:
        raise GoalOccupied(f"goal {np.round(goal, 3)} is occupied or outside the map")
    shape = grid.shape
    occ = grid.inflated
    res = grid.resolution
    goal_arr = np.asarray(g, dtype=float)

    def h(c):
        return res * math.sqrt((c[0] - goal_arr[0]) ** 2 + (c[1] - goal_arr[1]) ** 2 + (c[2] - goal_arr[2]) ** 2)

    counter = itertools.count()
    g_score = {s: 0.0}
    parent = {s: None}
    closed = set()
    heap = [(h(s), next(counter), s)]
    expansions = 0
    offsets = [tuple(int(v) for v in o) for o in _OFFSETS]
    costs = [res * float(c) for c in _STEP_COST]
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == g:
            break
        closed.add(cur)
        expansions += 1
        if expansions > max_expansions:
            raise NoPath("expansion budget exhausted")
        gc = g_score[cur]
        cx, cy, cz = cur
        for (dx, dy, dz), step in zip(offsets, costs):
            nx, ny, nz = cx + dx, cy + dy, cz + dz
            if nx < 0 or ny < 0 or nz < 0 or nx >= shape[0] or ny >= shape[1] or nz >= shape[2]:
                continue
            if occ[nx, ny, nz]:
                continue
            nb = (nx, ny, nz)
            if nb in closed:
                continue
            cand = gc + step
            if cand < g_score.get(nb, math.inf):
                g_score[nb] = cand
                parent[nb] = cur
                heapq.heappush(heap, (cand + h(nb), next(counter), nb))
    else:
        raise NoPath("open set exhausted")
    cells = []
    node = g
    while node is not None:
        cells.append(node)
        node = parent[node]
    cells.reverse()
    return np.array([grid.center_of(c) for c in cells])


def path_length(path) -> float:
    path = np.asarray(path)
    return float(np.sum(np.linalg.norm(np.diff(path, axis=0), axis=1)))


@dataclass(frozen=True, eq=False)
class AnchorPair:
    index: int  # control point
    point: np.ndarray  # on the obstacle surface
    direction: np.ndarray  # unit, from the control point toward free space
    segment: int = 0

    def distance(self, Q) -> float:
        return float((np.asarray(Q)[self.index] - self.point) @ self.direction)


def surface_point(grid: OccupancyGrid, q, target, tol: float = 1e-4):
    """Occupied-boundary point on segment [q, target] closest to ``target``.

    Walks from ``target`` (free) back toward ``q`` and bisects the first
    free/occupied transition. Returns None when the segment is clear.
    """
    q = np.asarray(q, dtype=float)
    target = np.asarray(target, dtype=float)
    length = float(np.linalg.norm(q - target))
    if length < 1e-12:
        return None
    u = (q - target) / length
    step = grid.resolution / 4.0
    n = int(math.ceil(length / step))
    free_s = 0.0
    hit_s = None
    for k in range(1, n + 1):
        s = min(k * step, length)
        if grid.is_occupied(target + s * u):
            hit_s = s
            break
        free_s = s
    if hit_s is None:
        return None
    lo, hi = free_s, hit_s
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if grid.is_occupied(target + mid * u):
            hi = mid
        else:
            lo = mid
    return target + hi * u


def colliding_runs(flags) -> list:
    """Maximal runs of True in a boolean sequence as (first, last) index pairs."""
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def generate_anchors(Q, path, grid: OccupancyGrid, indices, segment: int = 0) -> list:
    """Anchor pairs for the control points ``indices`` against one A* detour ``path``.

    Direction: from Q_i toward the nearest path vertex (lowest index on ties).
    Anchor point: obstacle boundary on that segment, nearest the path.
    """
    Q = np.asarray(Q, dtype=float)
    path = np.asarray(path, dtype=float)
    anchors = []
    for i in indices:
        q = Q[i]
        dist = np.linalg.norm(path - q, axis=1)
        j = int(np.argmin(dist))
        if dist[j] < 1e-9:
            continue
        p = surface_point(grid, q, path[j])
        if p is None:
            continue
        v = (path[j] - q) / dist[j]
        anchors.append(AnchorPair(int(i), p, v, segment))
    return anchors
