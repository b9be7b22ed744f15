"""
Quadrotor dynamics and the cascaded controller
==============================================

Hover equilibrium, RK4 convergence and a closed-loop altitude step.
"""

import numpy as np

from quadland.vehicle import (
    ControlCommand,
    ControllerGains,
    RigidBodyState,
    Setpoint,
    VehicleParams,
    controller_update,
    dynamics_derivative,
    hover_command,
    integrate_step,
)

params = VehicleParams()
gains = ControllerGains()

# level attitude with thrust m*g is an equilibrium
d = dynamics_derivative(RigidBodyState([0, 0, 2]), hover_command(params), params)
print("hover derivative norm:", np.linalg.norm(d.to_vector()))

# RK4 is fourth order: halving dt cuts the error about 16x
s0 = RigidBodyState([0, 0, 1], [0.5, -0.2, 0.1], [0.1, -0.05, 0.3], [1.0, -0.8, 2.0])
cmd = ControlCommand(16.0, [0.02, -0.01, 0.005])


def fly(dt, T=0.3):
    s = s0
    for _ in range(int(round(T / dt))):
        s = integrate_step(s, cmd, params, dt)
    return s.to_vector()


ref = fly(1e-5)
for dt in (0.02, 0.01, 0.005):
    print(f"dt={dt:<6} error={np.abs(fly(dt) - ref).max():.3e}")

# closed loop: climb from 1 m to 2 m
dt = 0.005
state, cs = RigidBodyState([0, 0, 1]), None
for k in range(int(5.0 / dt)):
    cmd, cs = controller_update(Setpoint([0, 0, 2]), state, gains, params, dt, cs)
    state = integrate_step(state, cmd, params, dt)
    if k % 100 == 99:
        print(f"t={(k + 1) * dt:4.1f} s  z={state.p[2]:.3f} m  thrust={cmd.thrust:.2f} N")
