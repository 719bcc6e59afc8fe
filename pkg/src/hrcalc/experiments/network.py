"""Distributed estimation scenarios: a diffusion Kalman ring and federated QLMS.

Ring: eight agents on a cycle track a 2-state quaternion process; agent ``l``
observes only coordinate ``l mod 2``. The covariance recursion does not depend
on the data, so the gains are computed once per mode and every Monte-Carlo
seed only propagates estimates.

Federated: a global widely linear plant generates heterogeneous shards; a
centre averages the agents' QLMS weights every round.
"""

from dataclasses import dataclass
import math

import numpy as np

from .. import filters as fl
from .. import fusion
from .. import linalg as ql
from .. import quaternion as qt
from .common import child_rng


@dataclass
class RingParams:
    agents: int = 8
    steps: int = 200
    burn_in: int = 100
    coupling: float = 0.2
    decay: float = 0.9
    process_var: float = 0.1
    obs_var: float = 1.0
    init_var: float = 1.0
    diffusion: bool = True
    topology: str = ""


def ring_model(params):
    """Augmented transition, per-agent observation matrices and noise covariances."""
    base = np.array([[params.decay, params.coupling], [-params.coupling, params.decay]])
    F = ql.augment_matrix(qt.from_real(base))
    H = np.stack([ql.augment_matrix(qt.from_real(np.eye(2)[l % 2][None, :]))
                  for l in range(params.agents)])
    sigma_v = ql.augmented_covariance(params.process_var * np.eye(8))
    sigma_w = ql.augmented_covariance(params.obs_var * np.eye(4))
    return F, H, sigma_v, sigma_w


def ring_gains(params, weights):
    """Data-independent gain and covariance sequences for stacked agents."""
    F, H, sigma_v, sigma_w = ring_model(params)
    model = fl.StateSpaceModel(F, H, sigma_v, sigma_w)
    m0 = ql.augmented_covariance(params.init_var * np.eye(8))
    state = fl.KalmanState(np.zeros((params.agents, 8, 4)),
                           np.broadcast_to(m0, (params.agents, 8, 8, 4)).copy())
    gains, covs = [], []
    for _ in range(params.steps):
        state = fl.kalman_update(model, fl.kalman_predict(model, state), np.zeros((params.agents, 4, 4)))
        state = fusion.combine_stacked(weights, state)
        gains.append(state.G)
        covs.append(state.M)
    return model, gains, covs


def ring_data(params, seed):
    """Truth (steps, 2, 4) and per-agent observations (steps, A, 1, 4)."""
    rng = child_rng(seed, 0)
    base = np.array([[params.decay, params.coupling], [-params.coupling, params.decay]])
    x = np.sqrt(params.init_var) * rng.standard_normal((2, 4))
    truth, obs = [], []
    coord = np.arange(params.agents) % 2
    for _ in range(params.steps):
        x = np.tensordot(base, x, axes=(1, 0)) + np.sqrt(params.process_var) * rng.standard_normal((2, 4))
        truth.append(x)
        noise = np.sqrt(params.obs_var) * rng.standard_normal((params.agents, 4))
        obs.append((x[coord] + noise)[:, None, :])
    return np.stack(truth), np.stack(obs)


def ring_mse(params, seeds, diffusion=True, network=None):
    """Steady-state network-average MSE for each seed.

    Returns
    -------
    ndarray, shape (len(seeds),)
    """
    network = fusion.AgentNetwork.ring(params.agents) if network is None else network
    weights = network.weights if diffusion else np.eye(params.agents)
    model, gains, covs = ring_gains(params, weights)
    data = [ring_data(params, s) for s in seeds]
    truth = np.stack([d[0] for d in data])       # (S, T, 2, 4)
    obs = ql.augment(np.stack([d[1] for d in data]))  # (S, T, A, 4, 4)
    x = np.zeros((len(seeds), params.agents, 8, 4))
    sq = np.zeros((len(seeds), params.agents))
    for t in range(params.steps):
        state = fl.KalmanState(ql.qmatvec(model.F, x), None)
        state = fl.kalman_update_fixed(model, state, obs[:, t], gains[t], covs[t])
        x = np.tensordot(weights, state.x_hat, axes=(1, 1)).transpose(1, 0, 2, 3)
        if t >= params.burn_in:
            err = ql.deaugment(x, strict=False) - truth[:, t, None]
            sq += np.sum(err ** 2, axis=(-2, -1))
    return sq.mean(axis=1) / (params.steps - params.burn_in)


def sign_test_pvalue(wins, n):
    """One-sided binomial sign test ``P(X >= wins)`` for ``X ~ Bin(n, 1/2)``."""
    return math.fsum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0 ** n


@dataclass
class FederatedParams:
    agents: int = 5
    taps: int = 2
    shard_size: int = 20
    rounds: int = 20
    noise_std: float = 0.3
    participation: float = 0.8
    step_fraction: float = 0.1


def federated_data(params, seed):
    """Plant weights and heterogeneous shards ``[(z (N, M, 4), y (N, 4)), ...]``."""
    rng = child_rng(seed, 0)
    w_true = qt.random_quaternion(rng, (4 * params.taps,), 0.5)
    shards = []
    for l in range(params.agents):
        scale = 0.5 + rng.uniform(0.0, 1.0)
        offset = qt.random_quaternion(rng, (params.taps,), 0.5)
        z = offset + scale * qt.random_quaternion(rng, (params.shard_size, params.taps))
        y = fl.wl_output(w_true, z) + params.noise_std * qt.random_quaternion(rng, params.shard_size)
        shards.append((z, y))
    return w_true, shards


@dataclass
class FederatedResult:
    center_error: float
    isolated_errors: np.ndarray
    center: np.ndarray
    w_opt: np.ndarray
    history: np.ndarray  # (rounds, agents) distance of each agent to w_opt


def federated(params, seed):
    """Run federated rounds and the isolated baselines against the pooled fit."""
    w_true, shards = federated_data(params, seed)
    z_all = np.concatenate([s[0] for s in shards])
    y_all = np.concatenate([s[1] for s in shards])
    w_opt = fl.wl_mmse_fit(z_all, y_all)
    # the smallest per-shard step keeps every local recursion stable
    gamma = min(fl.suggest_gamma(z, params.step_fraction) for z, _ in shards)
    rng = child_rng(seed, 1)
    center = np.zeros((4 * params.taps, 4))
    agents = [fl.LmsFilter.zeros(params.taps, gamma) for _ in range(params.agents)]
    history = np.empty((params.rounds, params.agents))
    for r in range(params.rounds):
        active = rng.random(params.agents) < params.participation
        if not active.any():
            active[rng.integers(params.agents)] = True
        center, agents = fusion.federated_round(center, agents, active, shards)
        history[r] = [np.linalg.norm(a.w - w_opt) for a in agents]
    isolated = []
    for z, y in shards:
        filt = fl.LmsFilter.zeros(params.taps, gamma)
        for _ in range(params.rounds):
            for n in range(len(y)):
                filt, _ = fl.qlms_step(filt, z[n], y[n])
        isolated.append(np.linalg.norm(filt.w - w_opt))
    return FederatedResult(float(np.linalg.norm(center - w_opt)), np.array(isolated),
                           center, w_opt, history)
