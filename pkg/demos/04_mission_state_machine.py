"""
Mission state machine on scripted inputs
========================================

Step the pure transition function by hand to see each phase change and
what it emits.
"""

import numpy as np

from quadland.mission import MissionConfig, MissionEvent, MissionState, PadObservation, mission_step
from quadland.vehicle import RigidBodyState

cfg = MissionConfig(preset_point=(0.0, 0.0, 1.5))
pad = np.array([0.3, 0.0, 0.0])

script = [
    ("climbing", RigidBodyState([0, 0, 0.8], [0, 0, 0.5]), False, MissionEvent()),
    ("at preset", RigidBodyState([0, 0, 1.5]), False, MissionEvent()),
    ("pad seen", RigidBodyState([0, 0, 1.5]), True, MissionEvent()),
    ("land command", RigidBodyState([0.2, 0, 1.2], [0.3, 0, -0.3]), True, MissionEvent(land_command=True)),
    ("low over pad", RigidBodyState([0.3, 0, 0.15], [0, 0, -0.3]), True, MissionEvent()),
    ("skids down", RigidBodyState([0.3, 0, 0.1]), True, MissionEvent(touchdown=True)),
]

state = MissionState()
for k, (label, uav, seen, event) in enumerate(script):
    clock = 0.5 * (k + 1)
    obs = PadObservation(pad, 0.0, 0.4, clock) if seen else None
    state, out = mission_step(state, uav, obs, cfg, event, clock)
    kind = type(out).__name__ if out is not None else "none"
    print(f"{label:14s} -> {state.phase.value:8s} output={kind}")
