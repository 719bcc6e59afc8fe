"""Frequency and unbalance tracking of a three-phase supply through a fault.

Phase a sags to 20% and phases b and c shift by +-20 degrees halfway
through the run. The positive- and negative-sequence estimates separate
the balanced part of the signal from the unbalance the fault creates.

Run with ``python demos/three_phase_fault.py``.
"""

from hrcalc.experiments import three_phase

params = three_phase.ThreePhaseParams(steps=3000, fault_step=1500, noise_std=0.01)
res = three_phase.run(params, seed=0)
print(" time s   f_hat Hz   |q+|    |q-|")
for t in range(0, params.steps, 250):
    qp = float((res.q_plus[t] ** 2).sum() ** 0.5)
    print(f"{t * params.dt:7.3f}  {res.f_hat[t]:9.4f}  {qp:6.3f}  {res.q_minus_norm[t]:6.3f}")
