"""Quadrotor take-off, tracking and landing on a moving pad.

Subpackages and modules:

- ``geometry``: rotations, Euler kinematics, rigid frame transforms
- ``vehicle``: rigid-body dynamics, RK4 integration, cascaded PID controller
- ``world``: voxel occupancy grid, raycasting, the moving platform
- ``perception``: pinhole camera, nested marker pad, PnP pose estimation
- ``planner``: B-spline trajectory planning without a distance field
- ``mission``: take-off / track / land state machine
- ``sim``: scenario configs, the closed-loop simulation, metrics and outputs
"""

__version__ = "0.1.0"
