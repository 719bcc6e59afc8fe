"""Receding-horizon quaternion LQR steering a rotation rate to rest.

Each 1.6 s plan is followed for 0.8 s before re-planning from the state
reached. The closed loop is a lightly damped oscillation, so the rate norm
decays in swings rather than monotonically.

Run with ``python demos/attitude_control.py``.
"""

import numpy as np

from hrcalc.experiments import flight

params = flight.FlightParams(duration_s=20.0)
print(f"closed-loop spectral radius {flight.closed_loop_radius(params):.4f}")
res = flight.run(params, seed=1)
norms = np.linalg.norm(res.states[:, 0], axis=-1)
per_second = int(round(1.0 / params.dt))
for t in range(0, len(norms), 2 * per_second):
    print(f"t = {t * params.dt:5.1f} s   |phi| = {norms[t]:.2e}")
print(f"total cost {res.stage_costs.sum():.3f}")
