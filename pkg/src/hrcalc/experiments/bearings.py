"""Bearings-only target tracking by a network of direction sensors.

Each agent sits at a fixed position ``L`` and observes the unit direction
``(q - L) / |q - L|`` to the target position ``q`` (pure quaternions). The
target follows a nearly-constant-velocity model with white acceleration.
Every agent runs an extended Kalman filter; with diffusion the estimates are
mixed with the neighbours after each local update.

All agents are filtered together: states carry a leading agent axis and the
HR Jacobians are evaluated in one vectorised call.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .. import filters as fl
from .. import fusion
from .. import io as hio
from .. import linalg as ql
from .. import quaternion as qt
from .common import ConfigError, child_rng


@dataclass
class BearingsParams:
    agents: int = 20
    edges: int = 43
    cube: float = 24.0
    dt: float = 0.04
    accel_var: float = 10.0
    obs_var: float = 1e-4
    steps: int = 100
    init_pos_std: float = 1.0
    init_vel_std: float = 0.5
    noiseless: bool = False
    burn_in: int = 25
    topology: str = ""
    diffusion: bool = True


def _real_block_cov(pos_var, vel_var, cross=0.0, real_var=1e-10):
    """Component-major real covariance of the state (position, velocity)."""
    c = np.zeros((8, 8))
    for comp in range(4):
        idx = [comp * 2, comp * 2 + 1]
        if comp == 0:
            c[np.ix_(idx, idx)] = real_var * np.eye(2)
        else:
            c[np.ix_(idx, idx)] = [[pos_var, cross], [cross, vel_var]]
    return c


def model(params):
    """Augmented transition matrix and process-noise covariance."""
    base = qt.from_real(np.array([[1.0, params.dt], [0.0, 1.0]]))
    F = ql.augment_matrix(base)
    q = 0.0 if params.noiseless else params.accel_var
    dt = params.dt
    cov = _real_block_cov(q * dt ** 4 / 4.0, q * dt ** 2, q * dt ** 3 / 2.0)
    return F, ql.augmented_covariance(cov)


def make_observer(sensors):
    """Direction observation for stacked agent states (..., A, 2, 4)."""
    sensors = np.asarray(sensors)[:, None, :]

    def observe(s):
        d = s[..., 0:1, :] - sensors
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    return observe


@dataclass
class Scenario:
    network: fusion.AgentNetwork
    sensors: np.ndarray
    truth: np.ndarray          # (steps+1, 2, 4)
    observations: np.ndarray   # (steps, A, 1, 4)
    init: np.ndarray           # (A, 2, 4)


def make_scenario(params, seed):
    rng = child_rng(seed, 0)
    if params.topology:
        try:
            network = hio.read_topology(params.topology)
        except OSError as exc:
            raise ConfigError(f"cannot read topology file: {exc}") from exc
        if network.n_agents != params.agents:
            raise ConfigError(f"topology has {network.n_agents} agents, configuration {params.agents}")
    else:
        network = fusion.random_connected_network(params.agents, params.edges, child_rng(seed, 1))
    sensors = qt.pure(rng.uniform(0.0, params.cube, (params.agents, 3)))
    pos = qt.pure(np.full(3, params.cube / 2.0) + rng.uniform(-2.0, 2.0, 3))
    vel = qt.pure(rng.standard_normal(3))
    truth = [np.stack([pos, vel])]
    dt = params.dt
    for _ in range(params.steps):
        a = 0.0 if params.noiseless else np.sqrt(params.accel_var) * rng.standard_normal(3)
        a = qt.pure(a)
        pos = pos + vel * dt + a * dt ** 2 / 2.0
        vel = vel + a * dt
        truth.append(np.stack([pos, vel]))
    truth = np.stack(truth)
    inside = np.all((truth[:, 0, 1:] >= 0.0) & (truth[:, 0, 1:] <= params.cube))
    if not inside:
        warnings.warn("target left the surveillance cube", RuntimeWarning)
    observe = make_observer(sensors)
    clean = observe(np.broadcast_to(truth[1:, None], (params.steps, params.agents, 2, 4)))
    if params.noiseless:
        obs = clean
    else:
        obs = clean + np.sqrt(params.obs_var) * qt.pure(
            rng.standard_normal((params.steps, params.agents, 1, 3)))
    if params.noiseless:
        init = np.broadcast_to(truth[0], (params.agents, 2, 4)).copy()
    else:
        init = truth[0] + np.stack([
            qt.pure(params.init_pos_std * rng.standard_normal((params.agents, 3))),
            qt.pure(params.init_vel_std * rng.standard_normal((params.agents, 3))),
        ], axis=1)
    return Scenario(network, sensors, truth, obs, init)


@dataclass
class BearingsResult:
    errors: np.ndarray  # (steps, A) position error norms
    estimates: np.ndarray
    scenario: Scenario


def run(params, seed=0, diffusion=True, scenario=None):
    """Filter the scenario with or without the combination step."""
    sc = make_scenario(params, seed) if scenario is None else scenario
    F, sigma_v = model(params)
    sigma_w = ql.augmented_covariance(np.eye(4) * params.obs_var)
    observe = make_observer(sc.sensors)
    a = params.agents
    init_cov = _real_block_cov(params.init_pos_std ** 2, params.init_vel_std ** 2, real_var=1e-6)
    if params.noiseless:
        init_cov = _real_block_cov(1e-6, 1e-6, real_var=1e-6)
    M0 = np.broadcast_to(ql.augmented_covariance(init_cov), (a, 8, 8, 4)).copy()
    state = fl.KalmanState(ql.augment(sc.init), M0)
    lin = fl.StateSpaceModel(F, np.zeros((4, 8, 4)), sigma_v, sigma_w)
    weights = sc.network.weights if diffusion else np.eye(a)
    errors = np.empty((params.steps, a))
    estimates = np.empty((params.steps, a, 2, 4))
    for t in range(params.steps):
        state = fl.kalman_predict(lin, state)
        state = fl.ekf_update(observe, state, ql.augment(sc.observations[t]), sigma_w)
        state = fusion.combine_stacked(weights, state)
        base = ql.deaugment(state.x_hat, strict=False)
        estimates[t] = base
        errors[t] = np.linalg.norm(base[:, 0] - sc.truth[t + 1, 0], axis=-1)
    return BearingsResult(errors, estimates, sc)


def worst_agent(network):
    """Agent with the fewest neighbours (lowest index on ties)."""
    return int(np.argmin(network.degrees))


def compare(params, seed):
    """RMS position error of the worst-connected agent with and without diffusion."""
    sc = make_scenario(params, seed)
    agent = worst_agent(sc.network)
    out = []
    for diffusion in (True, False):
        res = run(params, seed, diffusion, sc)
        out.append(float(np.sqrt(np.mean(res.errors[params.burn_in:, agent] ** 2))))
    return tuple(out)


COLUMNS = ["step", "agent", "pos_error", "x_r", "x_i", "x_j", "x_k"]


def rows(result):
    for t in range(result.errors.shape[0]):
        for l in range(result.errors.shape[1]):
            yield (t, l, result.errors[t, l], *result.estimates[t, l, 0])
