"""Compiling a single-qubit rotation into a sequence of admissible gates.

Qubit states are unit pure quaternions and a gate is a unit quaternion
``mu`` acting as ``q -> mu q conj(mu)``. A circuit of depth ``D`` applies
stages ``mu_1`` first and ``mu_D`` last. Compilation minimises the mean
squared output error over a probe set plus a depth penalty: gradient descent
on continuous stage quaternions (HR* gradients), then projection of each
stage onto the gate set with a one-stage lookahead.
"""

from dataclasses import dataclass

import numpy as np

from .. import hr
from .. import quaternion as qt
from ..errors import ContractError
from .common import child_rng

_S = np.sqrt(0.5)

# name -> (axis, rotation angle)
DEFAULT_GATES = {
    "X": (qt.I, np.pi),
    "Y": (qt.J, np.pi),
    "Z": (qt.K, np.pi),
    "H": (qt.pure([_S, 0.0, _S]), np.pi),
    "S": (qt.K, np.pi / 2.0),
    "T": (qt.K, np.pi / 4.0),
    "RX90": (qt.I, np.pi / 2.0),
    "RY90": (qt.J, np.pi / 2.0),
}


def gate(axis, angle):
    """Unit quaternion rotating qubit states by ``angle`` about ``axis``."""
    return qt.axis_angle(axis, angle / 2.0)


def gate_table(gates=None):
    gates = DEFAULT_GATES if gates is None else gates
    if not gates:
        raise ContractError("the gate set must not be empty")
    names = list(gates)
    return names, np.stack([gate(*gates[n]) for n in names])


def apply_circuit(stages, q):
    """Apply stage quaternions (D, 4) in order to states ``q`` (..., 4)."""
    total = qt.ONE
    for mu in stages:
        total = qt.mul(mu, total)
    return qt.mul3(total, q, qt.conj(total))


def probe_states(n, seed=0):
    rng = child_rng(seed, 0)
    theta = np.arccos(rng.uniform(-1.0, 1.0, n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return qt.qubit_to_quaternion(theta, phi)


def residual(stages, target, probes):
    """Mean squared output error of the circuit against the target rotation."""
    want = qt.mul3(target, probes, qt.conj(target))
    got = apply_circuit(stages, probes)
    return float(np.mean(np.sum((got - want) ** 2, axis=-1)))


def _batched_cost(fixed, target, probes):
    """Cost of free stages (P, F, 4), appended after the ``fixed`` ones."""
    want = qt.mul3(target, probes, qt.conj(target))

    def cost(free):
        free = free / np.linalg.norm(free, axis=-1, keepdims=True)
        total = np.broadcast_to(qt.ONE, free.shape[:-2] + (4,))
        for mu in fixed:
            total = qt.mul(mu, total)
        for d in range(free.shape[-2]):
            total = qt.mul(free[..., d, :], total)
        t = total[..., None, :]
        got = qt.mul3(t, probes, qt.conj(t))
        return np.mean(np.sum((got - want) ** 2, axis=-1), axis=-1)

    return cost


def descend(target, probes, depth, fixed=(), steps=200, rate=0.1, starts=2, rng=None):
    """Gradient descent on ``depth`` free unit stages after ``fixed`` ones.

    The steepest-descent direction of a real cost is ``-d cost / d p*``; the
    stages are renormalised after every step. The gradient grows with the
    number of stages, so the step is ``rate / depth``.

    Returns
    -------
    (ndarray (depth, 4), float)
        Best stages over the random starts and their residual.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    cost = _batched_cost(np.asarray(fixed).reshape(-1, 4), target, probes)
    best, best_val = None, np.inf
    for _ in range(starts):
        p = qt.random_unit(rng, depth)
        for _ in range(steps):
            g = hr.hr_gradient(cost, p, vectorized=True).d_q_conj
            p = p - (rate / depth) * 4.0 * g
            p = p / np.linalg.norm(p, axis=-1, keepdims=True)
        val = float(cost(p[None])[0])
        if val < best_val:
            best, best_val = p, val
    return best, best_val


@dataclass
class Compiled:
    depth: int
    gates: list
    pre_residual: float
    post_residual: float
    objective: float


def nearest_gates(stages, table):
    """Index of the closest gate for each stage; ``mu`` and ``-mu`` are the same rotation."""
    return np.argmax(np.abs(np.asarray(stages) @ table.T), axis=-1)


def project(target, probes, continuous, names, table, steps=100, rate=0.1, rng=None):
    """Project stages onto the gate set, one stage at a time with lookahead.

    For each stage every gate is tried: the remaining stages are re-optimised
    continuously, rounded to their nearest gates, and the candidate giving
    the smallest residual is kept.
    """
    depth = len(continuous)
    chosen = []
    for d in range(depth):
        best, best_val = None, np.inf
        for idx in range(len(table)):
            fixed = [table[c] for c in chosen] + [table[idx]]
            rest = depth - d - 1
            if rest == 0:
                val = residual(np.stack(fixed), target, probes)
            else:
                tail, _ = descend(target, probes, rest, fixed, steps=steps, rate=rate, starts=1, rng=rng)
                rounded = table[nearest_gates(tail, table)]
                val = residual(np.concatenate([np.stack(fixed), rounded]), target, probes)
            if val < best_val - 1e-15:
                best, best_val = idx, val
        chosen.append(best)
    stages = table[chosen]
    return [names[c] for c in chosen], residual(stages, target, probes)


@dataclass
class QubitParams:
    target: str = "H S"
    max_depth: int = 3
    penalty: float = 1e-3
    probes: int = 16
    steps: int = 200
    rate: float = 0.1
    starts: int = 2
    tie_tol: float = 1e-9


def target_rotation(sequence, gates=None):
    """Unit quaternion of a space-separated gate sequence, first gate leftmost."""
    gates = DEFAULT_GATES if gates is None else gates
    total = qt.ONE
    for name in sequence.split():
        if name not in gates:
            raise ContractError(f"unknown gate {name!r}")
        total = qt.mul(gate(*gates[name]), total)
    return total


def compile_circuit(params, seed=0, target=None, gates=None):
    """Compile for every depth up to ``max_depth`` and pick the best objective.

    Returns
    -------
    (Compiled, list of Compiled)
        The selected circuit and the per-depth results. A deeper circuit is
        only preferred when it lowers the objective by more than ``tie_tol``.
    """
    names, table = gate_table(gates)
    target = target_rotation(params.target, gates) if target is None else target
    probes = probe_states(params.probes, seed)
    rng = child_rng(seed, 1)
    results = []
    for depth in range(1, params.max_depth + 1):
        cont, pre = descend(target, probes, depth, steps=params.steps, rate=params.rate,
                            starts=params.starts, rng=rng)
        chosen, post = project(target, probes, cont, names, table, rate=params.rate, rng=rng)
        results.append(Compiled(depth, chosen, pre, post, post + params.penalty * depth))
    best = results[0]
    for r in results[1:]:
        if r.objective < best.objective - params.tie_tol:
            best = r
    return best, results


COLUMNS = ["depth", "gates", "pre_residual", "post_residual", "objective", "selected"]


def rows(best, results):
    for r in results:
        yield (r.depth, "+".join(r.gates), r.pre_residual, r.post_residual, r.objective,
               int(r.depth == best.depth))
