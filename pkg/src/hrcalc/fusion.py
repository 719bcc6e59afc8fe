"""Sensor networks: estimate fusion, diffusion and federated averaging."""

from dataclasses import dataclass, replace
import math

import numpy as np

from . import linalg as ql
from .errors import DimensionError, StructureError
from .filters import KalmanState, LmsFilter, qlms_step


def metropolis_weights(adjacency):
    """Metropolis combination weights ``1 / (1 + max(deg_l, deg_m))``.

    The diagonal takes the remainder so every row sums to one.
    """
    adj = np.asarray(adjacency, dtype=bool)
    deg = adj.sum(axis=1)
    n = adj.shape[0]
    w = np.zeros((n, n))
    for l in range(n):
        for m in np.flatnonzero(adj[l]):
            w[l, m] = 1.0 / (1.0 + max(deg[l], deg[m]))
        w[l, l] = 1.0 - math.fsum(w[l])
    return w


@dataclass
class AgentNetwork:
    """Undirected agent graph with row-stochastic combination weights."""
    n_agents: int
    adjacency: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.shape != (self.n_agents, self.n_agents):
            raise DimensionError("adjacency shape does not match the agent count")
        if np.any(adj != adj.T) or np.any(np.diag(adj)):
            raise StructureError("adjacency must be symmetric without self loops")
        if np.any(self.weights < 0) or np.any(np.abs(self.weights.sum(axis=1) - 1.0) > 1e-12):
            raise StructureError("combination weights must be non-negative with unit row sums")
        self.adjacency = adj

    @classmethod
    def from_edges(cls, n_agents, edges, weights=None):
        adj = np.zeros((n_agents, n_agents), dtype=bool)
        for a, b in edges:
            if a == b or not (0 <= a < n_agents and 0 <= b < n_agents):
                raise StructureError(f"invalid edge ({a}, {b})")
            adj[a, b] = adj[b, a] = True
        w = metropolis_weights(adj) if weights is None else np.asarray(weights, dtype=float)
        return cls(n_agents, adj, w)

    @classmethod
    def ring(cls, n_agents):
        return cls.from_edges(n_agents, [(l, (l + 1) % n_agents) for l in range(n_agents)])

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1)

    @property
    def edges(self):
        a, b = np.nonzero(np.triu(self.adjacency))
        return list(zip(a.tolist(), b.tolist()))

    def neighbours(self, agent):
        """Neighbourhood of ``agent`` including itself."""
        return np.flatnonzero(self.adjacency[agent] | (np.arange(self.n_agents) == agent))

    def is_connected(self):
        seen = {0}
        stack = [0]
        while stack:
            for m in np.flatnonzero(self.adjacency[stack.pop()]):
                if m not in seen:
                    seen.add(int(m))
                    stack.append(int(m))
        return len(seen) == self.n_agents


def random_connected_network(n_agents, n_edges, rng, min_degree_one=True):
    """Random connected graph with an exact edge count.

    Built from a random spanning tree plus extra edges. With
    ``min_degree_one`` agent 0 is kept as a leaf so the network has a
    worst-connected member.
    """
    most = n_agents * (n_agents - 1) // 2
    if min_degree_one:
        most = (n_agents - 1) * (n_agents - 2) // 2 + 1
    if n_edges < n_agents - 1 or n_edges > most:
        raise StructureError("edge count incompatible with a connected simple graph")
    order = rng.permutation(np.arange(1, n_agents)) if min_degree_one else rng.permutation(n_agents)
    edges = set()
    nodes = list(order)
    for idx in range(1, len(nodes)):
        parent = nodes[rng.integers(idx)]
        edges.add(tuple(sorted((int(nodes[idx]), int(parent)))))
    if min_degree_one:
        edges.add((0, int(nodes[rng.integers(len(nodes))])))
    candidates = [(a, b) for a in range(n_agents) for b in range(a + 1, n_agents)
                  if (a, b) not in edges and not (min_degree_one and a == 0)]
    extra = rng.choice(len(candidates), size=n_edges - len(edges), replace=False)
    for idx in sorted(extra):
        edges.add(candidates[idx])
    return AgentNetwork.from_edges(n_agents, sorted(edges))


# -- fusion ----------------------------------------------------------------

def fuse_weighted(estimates, weights):
    """Convex combination ``sum_l w_l x_l`` of per-agent estimates.

    Parameters
    ----------
    estimates : ndarray, shape (L, ..., 4)
    weights : array_like, shape (L,)
        Non-negative and summing to one.
    """
    estimates = np.asarray(estimates, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != estimates.shape[:1]:
        raise DimensionError("one weight per estimate is required")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise StructureError("fusion weights must be non-negative and sum to one")
    return np.tensordot(weights, estimates, axes=(0, 0))


def optimal_fusion_gain(covariances):
    """``(sum_l Sigma_l^-1)^-1``."""
    info = sum(ql.qinverse(c) for c in covariances)
    return ql.qinverse(info)


def fuse_covariance_weighted(estimates, covariances, prior=None, gain=None):
    """Covariance-weighted fusion ``psi - G sum_l Sigma_l^-1 (psi - x_l)``.

    Parameters
    ----------
    estimates : sequence of ndarray (n, 4)
        Per-sensor augmented estimates.
    covariances : sequence of ndarray (n, n, 4)
        Their error covariances.
    prior : ndarray (n, 4), optional
        Prior estimate ``psi``; zero by default.
    gain : ndarray (n, n, 4), optional
        Fusion gain; defaults to :func:`optimal_fusion_gain`.
    """
    estimates = [np.asarray(x, dtype=float) for x in estimates]
    if len(estimates) != len(covariances):
        raise DimensionError("one covariance per estimate is required")
    psi = np.zeros_like(estimates[0]) if prior is None else np.asarray(prior, dtype=float)
    g = optimal_fusion_gain(covariances) if gain is None else gain
    corr = sum(ql.qmatvec(ql.qinverse(c), psi - x) for x, c in zip(estimates, covariances))
    return psi - ql.qmatvec(g, corr)


def _get_estimate(state):
    if isinstance(state, KalmanState):
        return state.x_hat
    if isinstance(state, LmsFilter):
        return state.w
    raise TypeError(f"unsupported agent state {type(state).__name__}")


def _set_estimate(state, value):
    if isinstance(state, KalmanState):
        return replace(state, x_hat=value)
    return replace(state, w=value)


def combine(network, states, mix_covariance=True):
    """Combination stage: each agent takes the weighted mean of its neighbourhood.

    For Kalman agents the error covariances are mixed with the same weights
    (``mix_covariance``); keeping them purely local lets an agent's
    covariance drift away from the accuracy of its combined estimate.
    """
    est = np.stack([_get_estimate(s) for s in states])
    mixed = np.tensordot(network.weights, est, axes=(1, 0))
    out = [_set_estimate(s, mixed[l]) for l, s in enumerate(states)]
    if mix_covariance and states and isinstance(states[0], KalmanState):
        covs = np.tensordot(network.weights, np.stack([s.M for s in states]), axes=(1, 0))
        out = [replace(s, M=covs[l]) for l, s in enumerate(out)]
    return out


def combine_stacked(weights, state, mix_covariance=True):
    """:func:`combine` for a single KalmanState whose arrays carry a leading agent axis."""
    x = np.tensordot(weights, state.x_hat, axes=(1, 0))
    m = np.tensordot(weights, state.M, axes=(1, 0)) if mix_covariance else state.M
    return replace(state, x_hat=x, M=m)


def diffusion_round(network, states, observations, local_step, mix_covariance=True):
    """Adapt-then-combine diffusion round.

    Parameters
    ----------
    network : AgentNetwork
    states : list of KalmanState or LmsFilter
    observations : sequence
        One observation per agent, passed to ``local_step``.
    local_step : callable
        ``local_step(agent, state, observation) -> state``.
    """
    if len(states) != network.n_agents or len(observations) != network.n_agents:
        raise DimensionError("one state and one observation per agent are required")
    adapted = [local_step(l, s, o) for l, (s, o) in enumerate(zip(states, observations))]
    return combine(network, adapted, mix_covariance)


def consensus_distance(states):
    """Mean distance of agent estimates from their average.

    ``states`` is a list of agent states or an array of stacked estimates.
    """
    if isinstance(states, np.ndarray):
        est = states
    else:
        est = np.stack([_get_estimate(s) for s in states])
    centre = est.mean(axis=0)
    return float(np.mean(np.sqrt(np.sum((est - centre) ** 2, axis=(1, 2)))))


def federated_round(center, agents, active, batches, epochs=1, return_local=False):
    """One federated averaging round.

    Active agents run QLMS over their batch starting from the current centre,
    the centre fuses their weights in proportion to batch size, and the
    result is pushed back to every agent.

    Parameters
    ----------
    center : ndarray (4M, 4)
    agents : list of LmsFilter
    active : sequence of bool
    batches : list of (regressors (N, M, 4), targets (N, 4))

    Returns
    -------
    (ndarray, list of LmsFilter)
        With ``return_local`` a third item lists each agent's weights after
        its local update and before the push (inactive agents unchanged).
    """
    updated = []
    local = [a.w for a in agents]
    counts = []
    for l, agent in enumerate(agents):
        if not active[l]:
            continue
        filt = replace(agent, w=np.array(center, copy=True))
        z, y = batches[l]
        for _ in range(epochs):
            for n in range(len(y)):
                filt, _ = qlms_step(filt, z[n], y[n])
        updated.append(filt.w)
        local[l] = filt.w
        counts.append(len(y))
    if updated:
        counts = np.asarray(counts, dtype=float)
        center = fuse_weighted(np.stack(updated), counts / counts.sum())
    agents = [replace(a, w=np.array(center, copy=True)) for a in agents]
    if return_local:
        return center, agents, local
    return center, agents
