"""One-step prediction of a tumbling body's orientation.

Euler angles wrap at +-pi and jump by 2 pi; the rotation quaternion moves
smoothly. A widely linear QLMS predictor on the quaternion is compared with
four independent real LMS filters on its components.

Run with ``python demos/rotation_prediction.py``.
"""

import numpy as np

from hrcalc.experiments import motion

params = motion.MotionParams()
wins = 0
for seed in range(10):
    res = motion.run(params, seed)
    mse_qlms, mse_real = res.mse(params.burn_in)
    wins += mse_qlms < mse_real
    print(f"seed {seed}: QLMS {mse_qlms:.2e}  real LMS {mse_real:.2e}")
print(f"QLMS better in {wins}/10 runs")

res = motion.run(params, 0)
yaw_jump = np.max(np.abs(np.diff(res.angles[:, 2])))
q_step = np.max(np.linalg.norm(np.diff(res.q, axis=0), axis=-1))
print(f"largest yaw step {yaw_jump:.2f} rad, largest quaternion step {q_step:.3f}")

# A much finer sampling step makes consecutive samples nearly equal; there
# the real baseline's per-channel adaptation holds its own.
fine = motion.MotionParams(dt=0.01)
mse_qlms, mse_real = motion.run(fine, 0).mse(fine.burn_in)
print(f"dt = 0.01: QLMS {mse_qlms:.2e}  real LMS {mse_real:.2e}")
