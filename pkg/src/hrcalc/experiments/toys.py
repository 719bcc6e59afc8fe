"""Small synthetic runs behind the qlms, kalman, diffusion, federated, qnn-train and lqr commands."""

from dataclasses import dataclass

import numpy as np

from .. import filters as fl
from .. import fusion
from .. import io as hio
from .. import linalg as ql
from .. import lqr
from .. import qnn
from .. import quaternion as qt
from . import network
from .common import ConfigError, child_rng


# -- QLMS system identification ---------------------------------------------

@dataclass
class QlmsParams:
    taps: int = 2
    steps: int = 500
    noise_std: float = 0.05
    step_fraction: float = 0.1


QLMS_COLUMNS = ["step", "err_r", "err_i", "err_j", "err_k", "err_norm", "weight_error"]


def qlms_identification(params, seed=0):
    """Identify a random widely linear plant from white quaternion regressors.

    Yields one row per step with the a-priori error and the weight error norm.
    """
    rng = child_rng(seed, 0)
    w_true = qt.random_quaternion(rng, (4 * params.taps,), 0.5)
    z = qt.random_quaternion(rng, (params.steps, params.taps))
    y = fl.wl_output(w_true, z) + params.noise_std * qt.random_quaternion(rng, params.steps)
    filt = fl.LmsFilter.zeros(params.taps, fl.suggest_gamma(z, params.step_fraction))
    for n in range(params.steps):
        filt, err = fl.qlms_step(filt, z[n], y[n])
        yield (n, *err, float(np.linalg.norm(err)), float(np.linalg.norm(filt.w - w_true)))


# -- Kalman tracking ---------------------------------------------------------

@dataclass
class KalmanParams:
    steps: int = 100
    dt: float = 0.1
    process_var: float = 0.01
    obs_var: float = 0.1
    init_var: float = 1.0
    model: str = ""


def kalman_matrices(params):
    """Base transition and observation; a model file may supply ``[F]`` and ``[H]`` blocks."""
    if params.model:
        try:
            _, blocks = hio.read_model(params.model)
        except OSError as exc:
            raise ConfigError(f"cannot read model file: {exc}") from exc
        if "F" not in blocks or "H" not in blocks:
            raise ConfigError("model file needs [F] and [H] blocks")
        return blocks["F"], blocks["H"]
    F = qt.from_real(np.array([[1.0, params.dt], [0.0, 1.0]]))
    H = qt.from_real(np.array([[1.0, 0.0]]))
    return F, H


def kalman_columns(n):
    return (["step"] + [f"err{s}_{c}" for s in range(n) for c in "rijk"]
            + ["trace_M", "gain_norm"])


def kalman_tracking(params, seed=0):
    """Track a linear quaternion state from noisy observations.

    Yields the estimation error of every state entry, the real trace of the
    augmented error covariance and the Frobenius norm of the gain.
    """
    F, H = kalman_matrices(params)
    n, p = F.shape[0], H.shape[0]
    model = fl.augmented_model(F, H, params.process_var * np.eye(4 * n), params.obs_var * np.eye(4 * p))
    rng = child_rng(seed, 0)
    x = np.sqrt(params.init_var) * rng.standard_normal((n, 4))
    state = fl.KalmanState(np.zeros((4 * n, 4)),
                           ql.augmented_covariance(params.init_var * np.eye(4 * n)))
    for t in range(params.steps):
        x = ql.qmatvec(F, x) + np.sqrt(params.process_var) * rng.standard_normal((n, 4))
        y = ql.qmatvec(H, x) + np.sqrt(params.obs_var) * rng.standard_normal((p, 4))
        state = fl.kalman_step(model, state, ql.augment(y))
        err = ql.deaugment(state.x_hat, strict=False) - x
        yield (t, *err.reshape(-1), ql.trace_real(state.M), float(np.linalg.norm(state.G)))


# -- diffusion and federated traces -----------------------------------------

NETWORK_COLUMNS = ["round", "agent", "mse", "consensus_distance"]


def diffusion_trace(params, seed=0):
    """Per-step squared error of each agent and the spread of their estimates.

    Agents form a ring unless ``params.topology`` names a topology file;
    ``params.diffusion`` false runs them without combination.
    """
    if params.topology:
        try:
            net = hio.read_topology(params.topology)
        except OSError as exc:
            raise ConfigError(f"cannot read topology file: {exc}") from exc
    else:
        net = fusion.AgentNetwork.ring(params.agents)
    if net.n_agents != params.agents:
        raise ConfigError(f"topology has {net.n_agents} agents, configuration {params.agents}")
    weights = net.weights if params.diffusion else np.eye(params.agents)
    model, gains, covs = network.ring_gains(params, weights)
    truth, obs = network.ring_data(params, seed)
    obs = ql.augment(obs)
    x = np.zeros((params.agents, 8, 4))
    for t in range(params.steps):
        state = fl.KalmanState(ql.qmatvec(model.F, x), None)
        state = fl.kalman_update_fixed(model, state, obs[t], gains[t], covs[t])
        x = np.tensordot(weights, state.x_hat, axes=(1, 0))
        base = ql.deaugment(x, strict=False)
        spread = fusion.consensus_distance(base)
        for l in range(params.agents):
            yield (t, l, float(np.sum((base[l] - truth[t]) ** 2) / base[l].size), spread)


def federated_trace(params, seed=0):
    """Per-round distance of each agent's local weights to the pooled optimum.

    ``mse`` is the mean squared weight error after the local update and before
    the push; ``consensus_distance`` is the spread of those local weights.
    """
    w_true, shards = network.federated_data(params, seed)
    w_opt = fl.wl_mmse_fit(np.concatenate([s[0] for s in shards]),
                           np.concatenate([s[1] for s in shards]))
    gamma = min(fl.suggest_gamma(z, params.step_fraction) for z, _ in shards)
    rng = child_rng(seed, 1)
    center = np.zeros((4 * params.taps, 4))
    agents = [fl.LmsFilter.zeros(params.taps, gamma) for _ in range(params.agents)]
    for r in range(params.rounds):
        active = rng.random(params.agents) < params.participation
        if not active.any():
            active[rng.integers(params.agents)] = True
        center, agents, local = fusion.federated_round(center, agents, active, shards,
                                                       return_local=True)
        local = np.stack(local)
        spread = fusion.consensus_distance(local)
        for l in range(params.agents):
            yield (r, l, float(np.mean((local[l] - w_opt) ** 2)), spread)


# -- QNN training ------------------------------------------------------------

@dataclass
class QnnParams:
    task: str = "linear"
    trainer: str = "rules"
    hidden: int = 2
    batch: int = 20
    steps: int = 200
    gamma: float = 1e-3
    checkpoint: str = ""


QNN_COLUMNS = ["step", "J", "grad_norm"]


def qnn_setup(params, seed=0):
    rng = child_rng(seed, 0)
    if params.task == "linear":
        x, d = qnn.linear_teacher_task(2, 1, params.batch, rng)
        net = qnn.QnnNetwork.init([2, 1], seed=seed, activation="identity", gamma=params.gamma)
    elif params.task == "tanh":
        x, d = qnn.tanh_teacher_task(params.batch, rng)
        net = qnn.QnnNetwork.init([2, params.hidden, 1], seed=seed, gamma=params.gamma)
    else:
        raise ConfigError(f"unknown task {params.task!r}; use 'linear' or 'tanh'")
    if params.trainer not in ("rules", "numeric"):
        raise ConfigError(f"unknown trainer {params.trainer!r}; use 'rules' or 'numeric'")
    return net, x, d


def qnn_training(params, seed=0, log=None):
    """Train and return the final network; rows are appended to ``log``.

    For the closed-form trainer ``grad_norm`` is the norm of the parameter
    change divided by the step size.
    """
    net, x, d = qnn_setup(params, seed)
    log = [] if log is None else log
    for n in range(params.steps):
        if params.trainer == "rules":
            new, j = qnn.train_step(net, x, d)
            g = float(np.linalg.norm(qnn._flatten(new) - qnn._flatten(net))) / params.gamma
        else:
            new, j, g = qnn.numeric_grad_train_step(net, x, d)
        log.append((n, j, g))
        net = new
    return net


# -- LQR ---------------------------------------------------------------------

@dataclass
class LqrParams:
    states: int = 2
    inputs: int = 1
    horizon: int = 30
    radius: float = 1.1
    r_scale: float = 1.0
    t_scale: float = 1.0


def lqr_problem(params, seed=0):
    """Random strictly linear problem with an open-loop spectral radius of ``radius``."""
    rng = child_rng(seed, 0)
    F = qt.random_quaternion(rng, (params.states, params.states))
    F = params.radius * F / ql.spectral_radius(F)
    B = qt.random_quaternion(rng, (params.states, params.inputs))
    return lqr.LqrProblem(
        ql.augment_matrix(F), ql.augment_matrix(B),
        ql.qeye(4 * params.states), params.r_scale * ql.qeye(4 * params.inputs),
        params.t_scale * ql.qeye(4 * params.states), params.horizon), rng


def lqr_columns(params):
    return (["step"] + [f"x{s}_{c}" for s in range(params.states) for c in "rijk"]
            + [f"u{s}_{c}" for s in range(params.inputs) for c in "rijk"]
            + ["stage_cost", "cumulative_cost", "cost_to_go"])


def lqr_trajectory(params, seed=0):
    """Closed-loop rollout; the last row carries the terminal cost and zero input."""
    prob, rng = lqr_problem(params, seed)
    sol = lqr.lqr_backward(prob)
    x0 = ql.augment(qt.random_quaternion(rng, params.states))
    traj = lqr.simulate_closed_loop(prob, sol, x0)
    states = ql.deaugment(traj.states, strict=False)
    inputs = ql.deaugment(traj.inputs, strict=False)
    total = 0.0
    for n in range(prob.N):
        total += traj.stage_costs[n]
        u = inputs[n] if n < prob.N - 1 else np.zeros((params.inputs, 4))
        yield (n, *states[n].reshape(-1), *u.reshape(-1), traj.stage_costs[n], total,
               traj.cost_to_go[n])
