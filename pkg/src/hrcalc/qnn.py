"""Fully connected quaternion-valued neural networks.

Each layer computes ``y = W x + b`` followed by an activation applied to the
quaternion entries. Two trainers are provided: the closed-form update rules
(:func:`train_step`) and plain HR* gradient descent with numerically
differentiated cost (:func:`numeric_grad_train_step`).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import hr
from . import linalg as ql
from . import quaternion as qt
from .errors import DimensionError, DivergenceError


def split_tanh(q):
    return np.tanh(q)


def identity(q):
    return q


def split_sigmoid(q):
    return 1.0 / (1.0 + np.exp(-q))


ACTIVATIONS = {"split_tanh": split_tanh, "identity": identity, "split_sigmoid": split_sigmoid}


@dataclass
class Layer:
    W: np.ndarray  # (N_out, N_in, 4)
    b: np.ndarray  # (N_out, 4)


@dataclass
class QnnNetwork:
    """Layered network; ``activation`` names an entry of :data:`ACTIVATIONS`."""
    layers: list
    activation: str = "split_tanh"
    gamma: float = 0.01
    seed: int = 0
    steps: int = 0

    @classmethod
    def init(cls, sizes, seed=0, activation="split_tanh", gamma=0.01):
        """Uniform initialisation in ``+-1/sqrt(4 N_in)`` for every real component."""
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = np.random.default_rng(seed)
        layers = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(4.0 * n_in)
            W = rng.uniform(-bound, bound, (n_out, n_in, 4))
            b = rng.uniform(-bound, bound, (n_out, 4))
            layers.append(Layer(W, b))
        return cls(layers, activation, gamma, seed)

    @property
    def sizes(self):
        return [self.layers[0].W.shape[1]] + [l.W.shape[0] for l in self.layers]

    @property
    def act(self):
        return ACTIVATIONS[self.activation]


@dataclass
class ForwardTrace:
    """Layer inputs ``xs[0]`` .. outputs ``xs[L]`` and pre-activations ``ys[1..L]``."""
    xs: list
    ys: list = field(default_factory=list)


def _forward(Ws, bs, x, act):
    xs = [x]
    ys = []
    for W, b in zip(Ws, bs):
        y = ql.qmatvec(W, xs[-1]) + b
        ys.append(y)
        xs.append(act(y))
    return xs, ys


def forward(net, x0):
    """Forward pass; ``x0`` is (N0, 4) or a batch (B, N0, 4)."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-2:] != (net.sizes[0], 4):
        raise DimensionError(f"input must end in ({net.sizes[0]}, 4), got {x0.shape}")
    xs, ys = _forward([l.W for l in net.layers], [l.b for l in net.layers], x0, net.act)
    return ForwardTrace(xs, ys)


def cost(net, x0, d):
    """``J = 1/2 sum |d - x_L|^2`` summed over the batch."""
    out = forward(net, x0).xs[-1]
    return 0.5 * float(np.sum((np.asarray(d) - out) ** 2))


def backward(net, trace, d):
    """Deltas of the closed-form rules.

    ``delta_L = d - x_L``; for hidden layers
    ``delta_l[m] = sum_n conj(W_{l+1}[n, m] x_{l+1}[n]) delta_{l+1}[n]``,
    the weight matrix rows being scaled on the right by the next layer's
    output.
    """
    deltas = [np.asarray(d, dtype=float) - trace.xs[-1]]
    for idx in range(len(net.layers) - 1, 0, -1):
        W = net.layers[idx].W
        x_next = trace.xs[idx + 1]
        scaled = qt.mul(W, x_next[..., :, None, :])  # W[n, m] x[n]
        deltas.insert(0, np.sum(qt.mul(qt.conj(scaled), deltas[0][..., :, None, :]), axis=-3))
    return deltas


def _sum_involutions(q):
    return sum(ql.involute(q, z) for z in range(4))


def train_step(net, x0, d):
    """One update with the closed-form rules.

    Output layer: ``W += gamma delta x^H``, ``b += gamma delta``. Hidden
    layers use the sum of the four involutions of ``delta`` in place of
    ``delta``. A batch input accumulates the per-sample updates.

    Returns
    -------
    (QnnNetwork, float)
        Updated network and the cost before the update.
    """
    trace = forward(net, x0)
    j = 0.5 * float(np.sum((np.asarray(d) - trace.xs[-1]) ** 2))
    deltas = backward(net, trace, d)
    n_layers = len(net.layers)
    layers = []
    for idx, layer in enumerate(net.layers):
        delta = deltas[idx]
        if idx < n_layers - 1:
            delta = _sum_involutions(delta)
        x_prev = trace.xs[idx]
        dW = ql.qouter(delta, x_prev)
        db = delta
        if dW.ndim > 3:
            dW = dW.reshape((-1,) + dW.shape[-3:]).sum(axis=0)
            db = db.reshape((-1,) + db.shape[-2:]).sum(axis=0)
        layers.append(Layer(layer.W + net.gamma * dW, layer.b + net.gamma * db))
    out = replace(net, layers=layers, steps=net.steps + 1)
    _check_finite(out)
    return out, j


def _check_finite(net):
    for layer in net.layers:
        if not (np.all(np.isfinite(layer.W)) and np.all(np.isfinite(layer.b))):
            raise DivergenceError(f"network parameters diverged at step {net.steps}", net.steps)


def _flatten(net):
    parts = []
    for layer in net.layers:
        parts.append(layer.W.reshape(-1, 4))
        parts.append(layer.b.reshape(-1, 4))
    return np.concatenate(parts)


def _unflatten(net, theta):
    """Split flat parameters (..., P, 4) into per-layer (W, b) with leading axes kept."""
    lead = theta.shape[:-2]
    Ws, bs = [], []
    pos = 0
    for layer in net.layers:
        n = layer.W.shape[0] * layer.W.shape[1]
        Ws.append(theta[..., pos:pos + n, :].reshape(lead + layer.W.shape))
        pos += n
        n = layer.b.shape[0]
        bs.append(theta[..., pos:pos + n, :].reshape(lead + layer.b.shape))
        pos += n
    return Ws, bs


def cost_function(net, x0, d):
    """Cost as a function of flat parameters, vectorised over parameter probes."""
    x0 = np.asarray(x0, dtype=float)
    d = np.asarray(d, dtype=float)
    if x0.ndim == 2:
        x0 = x0[None]
        d = d[None]

    def f(theta):
        Ws, bs = _unflatten(net, theta)
        # parameters (P, ...) against batch (B, ...)
        Ws = [W[:, None] for W in Ws]
        bs = [b[:, None] for b in bs]
        xs, _ = _forward(Ws, bs, x0[None], net.act)
        return 0.5 * np.sum((d[None] - xs[-1]) ** 2, axis=(1, 2, 3))

    return f


def parameter_gradient(net, x0, d, h=1e-6):
    """Numerical HR* gradient of the cost with respect to every parameter (flat)."""
    return hr.hr_derivative(cost_function(net, x0, d), _flatten(net), conjugate=True,
                            h=h, vectorized=True)


def numeric_grad_train_step(net, x0, d, h=1e-6):
    """``theta <- theta - gamma dJ/dtheta*`` with the gradient from finite differences.

    Returns
    -------
    (QnnNetwork, float, float)
        Updated network, the cost before the update and the gradient norm.
    """
    grad = parameter_gradient(net, x0, d, h)
    theta = _flatten(net) - net.gamma * grad
    Ws, bs = _unflatten(net, theta)
    out = replace(net, layers=[Layer(W, b) for W, b in zip(Ws, bs)], steps=net.steps + 1)
    _check_finite(out)
    return out, cost(net, x0, d), float(np.linalg.norm(grad))


def linear_teacher_task(n_in, n_out, batch, rng):
    """Inputs (B, n_in, 4) and targets of a random strictly linear layer ``W x + b``."""
    W = qt.random_quaternion(rng, (n_out, n_in), 0.5)
    b = qt.random_quaternion(rng, n_out, 0.5)
    x = qt.random_quaternion(rng, (batch, n_in))
    return x, ql.qmatvec(W, x) + b


def tanh_teacher_task(batch, rng):
    """Toy regression for a 2-2-1 network: targets from a random split-tanh teacher."""
    teacher = QnnNetwork.init([2, 2, 1], seed=int(rng.integers(2 ** 31)))
    x = qt.random_quaternion(rng, (batch, 2))
    return x, forward(teacher, x).xs[-1]
