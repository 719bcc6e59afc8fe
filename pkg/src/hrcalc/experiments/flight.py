"""Receding-horizon quaternion LQR for a rotating rigid body.

The orientation rate ``phi`` and its derivative ``phidot`` follow a double
integrator driven by the quaternion input ``u``. Each segment solves a
finite-horizon LQR problem, applies the first half of the inputs and then
re-plans from the state reached.
"""

from dataclasses import dataclass

import numpy as np

from .. import linalg as ql
from .. import lqr
from .. import quaternion as qt
from .common import child_rng


@dataclass
class FlightParams:
    dt: float = 0.04
    horizon_s: float = 1.6
    applied_s: float = 0.8
    duration_s: float = 8.0
    q_scale: float = 1.0
    t_scale: float = 50.0
    r_diag: float = 10.0
    r_offdiag: float = 1.875
    init_scale: float = 1.0


def problem(params):
    """Augmented double-integrator LQR problem over one planning horizon."""
    dt = params.dt
    F = ql.augment_matrix(qt.from_real(np.array([[1.0, dt], [0.0, 1.0]])))
    B = ql.augment_matrix(qt.from_real(np.array([[dt ** 2 / 2.0], [dt]])))
    Q = params.q_scale * ql.qeye(8)
    T = params.t_scale * ql.qeye(8)
    R = qt.from_real(params.r_diag * np.eye(4) - params.r_offdiag * np.ones((4, 4)))
    steps = int(round(params.horizon_s / dt))
    return lqr.LqrProblem(F, B, Q, R, T, steps + 1)


@dataclass
class FlightResult:
    states: np.ndarray      # (n+1, 2, 4) base states (phi, phidot)
    inputs: np.ndarray      # (n, 4)
    stage_costs: np.ndarray  # (n,)


def initial_state(params, seed):
    """Random pure-quaternion rate at rest."""
    rng = child_rng(seed, 0)
    phi = qt.pure(params.init_scale * rng.standard_normal(3))
    return np.stack([phi, np.zeros(4)])


def run(params, seed=0, x0=None):
    prob = problem(params)
    apply = int(round(params.applied_s / params.dt))
    total = int(round(params.duration_s / params.dt))
    x = ql.augment(initial_state(params, seed) if x0 is None else np.asarray(x0, dtype=float))
    states, inputs, costs = [x], [], []
    while len(inputs) < total:
        sol = lqr.lqr_backward(prob)
        for n in range(min(apply, total - len(inputs))):
            u = ql.qmatvec(sol.G[n], x)
            costs.append(lqr.quadratic(x, prob.Q) + lqr.quadratic(u, prob.R))
            x = ql.qmatvec(prob.F, x) + ql.qmatvec(prob.B, u)
            states.append(x)
            inputs.append(u)
    base_states = ql.deaugment(np.stack(states), strict=False)
    base_inputs = ql.deaugment(np.stack(inputs), strict=False)[:, 0]
    return FlightResult(base_states, base_inputs, np.array(costs))


def closed_loop_radius(params):
    """Spectral radius of the first-stage closed loop ``F + B G``."""
    prob = problem(params)
    sol = lqr.lqr_backward(prob)
    return ql.spectral_radius(prob.F + ql.qmatmul(prob.B, sol.G[0]))


COLUMNS = (["step"] + [f"phi_{c}" for c in "rijk"] + [f"phidot_{c}" for c in "rijk"]
           + [f"u_{c}" for c in "rijk"] + ["stage_cost", "cumulative_cost"])


def rows(result):
    total = 0.0
    for n in range(len(result.inputs)):
        total += result.stage_costs[n]
        yield (n, *result.states[n, 0], *result.states[n, 1], *result.inputs[n],
               result.stage_costs[n], total)
