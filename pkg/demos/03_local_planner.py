"""
B-spline local planner around a box
===================================

Plan through the box scene, then inspect anchors, costs, limits and timing.
Writes ``planner_box.png`` when matplotlib is available.
"""

import json
from pathlib import Path

import numpy as np

from quadland.planner import PlanRequest, derivative_points, plan
from quadland.world import Obstacle, grid_from_obstacles

scene = json.loads((Path(__file__).parent / "scenes" / "box_scene.json").read_text())
w = scene["world"]
boxes = [Obstacle.from_center(o["center"], o["size"]) for o in w["obstacles"]]
grid = grid_from_obstacles(boxes, w["bounds"], w["resolution"], w["inflation"])
req = PlanRequest(scene["start"], scene["goal"], scene["horizon"], grid=grid)

result = plan(req)
traj = result.trajectory
print(f"anchors: {len(result.anchors)}  iterations: {result.iterations}  converged: {result.converged}")
print(f"timing ms: init {result.init_ms:.2f}, optimise {result.optimize_ms:.1f}, refine {result.refine_ms:.1f}")
print("costs:", {k: round(v, 6) for k, v in result.costs.items()})

V, A, J = derivative_points(traj.control_points, traj.dt)
print(f"duration {traj.duration:.2f} s, max |v| {np.abs(V).max():.2f}, |a| {np.abs(A).max():.2f}, "
      f"|j| {np.abs(J).max():.2f} (per axis)")

t = np.linspace(0, traj.duration, 400)
pts = traj.sample(t)
print("samples in inflated cells:", int(grid.occupied_many(pts).sum()))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    occ = np.argwhere(grid.inflated[:, :, grid.index_of([0, 0, 0.6])[2]])
    xy = grid.origin[:2] + (occ[:, :2] + 0.5) * grid.resolution
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.scatter(xy[:, 0], xy[:, 1], s=12, marker="s", c="0.7", label="inflated cells (z=0.6)")
    ax.plot(pts[:, 0], pts[:, 1], label="trajectory")
    ax.plot(*result.reference.control_points[:, :2].T, "x", ms=4, label="control points")
    ax.set_aspect("equal")
    ax.legend(loc="lower right")
    fig.savefig("planner_box.png", dpi=120)
    print("wrote planner_box.png")
