"""
Take-off over an obstacle
=========================

The ``obstacle_demo`` preset places a 0.6 x 1.2 x 1.2 m box between the
take-off point and the pad. Check the flown path against the inflated grid.
"""

import numpy as np

from quadland.sim import load_preset, run_scenario

cfg = load_preset("obstacle_demo")
metrics, logs = run_scenario(cfg)
grid = cfg.world.grid()
box = cfg.world.obstacles[0]

p = np.array([log.state.p for log in logs])
inside = grid.occupied_many(p)
# distance from each tick to the raw box surface (0 inside)
gap = np.linalg.norm(np.maximum(np.maximum(box.lo - p, p - box.hi), 0.0), axis=1)
print(f"replans {metrics.replanning_count}, mean planning {metrics.mean_planning_time_ms:.1f} ms")
print(f"ticks in inflated cells: {int(inside.sum())} of {len(p)}")
print(f"closest approach to the box: {gap.min():.2f} m (inflation {grid.inflation} m)")
print(f"landing success {metrics.landing_success}, offset {metrics.final_offset_m:.3f} m, "
      f"obstacle density {metrics.obstacle_density:.3f} per m^2")
