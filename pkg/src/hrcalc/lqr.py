"""Finite-horizon quaternion LQR in the augmented domain.

The horizon has ``N`` stages indexed ``0 .. N-1``. Inputs ``u_0 .. u_{N-2}``
are applied and the terminal state ``x_{N-1}`` is weighted by ``T``::

    J = x_{N-1}^H T x_{N-1} + sum_{n<N-1} (x_n^H Q x_n + u_n^H R u_n)

so ``P[0]`` is the cost-to-go matrix of the initial state.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from . import linalg as ql
from .errors import ConvergenceError, DimensionError, StructureError


@dataclass
class LqrProblem:
    F: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    T: np.ndarray
    N: int

    def __post_init__(self):
        n = self.F.shape[0]
        p = self.B.shape[1]
        if self.F.shape[:2] != (n, n) or self.B.shape[0] != n:
            raise DimensionError("F must be square and B must share its rows")
        for name, mat, size in (("Q", self.Q, n), ("T", self.T, n), ("R", self.R, p)):
            if mat.shape[:2] != (size, size):
                raise DimensionError(f"{name} must be {size}x{size}")
            if not ql.is_hermitian(mat, 1e-9):
                raise StructureError(f"{name} must be Hermitian")
        if ql.min_eigenvalue(self.Q) < -1e-10 or ql.min_eigenvalue(self.T) < -1e-10:
            raise StructureError("Q and T must be positive semidefinite")
        if ql.min_eigenvalue(self.R) <= 0:
            raise StructureError("R must be positive definite")
        if self.N < 2:
            raise DimensionError("horizon must have at least two stages")


@dataclass
class LqrSolution:
    """Cost-to-go matrices ``P[n]``, their input-reduced forms ``S[n]`` and gains ``G[n]``.

    ``S[n] = (P[n]^-1 + B R^-1 B^H)^-1``, evaluated in the equivalent form
    ``P - P B (R + B^H P B)^-1 B^H P`` which also holds for singular ``P``.
    """
    P: list
    S: list
    G: list


def _quad(a, m):
    """``a^H m a``."""
    return ql.qmatmul(ql.qmatmul(ql.hermitian(a), m), a)


def input_reduced(P, B, R):
    pb = ql.qmatmul(P, B)
    inner = R + ql.qmatmul(ql.hermitian(B), pb)
    return ql.symmetrize(P - ql.qmatmul(ql.qmatmul(pb, ql.qinverse(inner)), ql.hermitian(pb)))


def lqr_backward(problem):
    """Backward Riccati recursion from ``P[N-1] = T``.

    ``P[n] = F^H S[n+1] F + Q`` and
    ``G[n] = -(R + B^H P[n+1] B)^-1 B^H P[n+1] F``. Each ``P`` is
    re-symmetrised to suppress round-off drift.
    """
    F, B, Q, R = problem.F, problem.B, problem.Q, problem.R
    N = problem.N
    P = [None] * N
    S = [None] * N
    G = [None] * (N - 1)
    P[-1] = ql.symmetrize(problem.T)
    S[-1] = input_reduced(P[-1], B, R)
    bh = ql.hermitian(B)
    for n in range(N - 2, -1, -1):
        inner = R + ql.qmatmul(ql.qmatmul(bh, P[n + 1]), B)
        G[n] = -ql.qmatmul(ql.qinverse(inner), ql.qmatmul(ql.qmatmul(bh, P[n + 1]), F))
        P[n] = ql.symmetrize(_quad(F, S[n + 1]) + Q)
        S[n] = input_reduced(P[n], B, R)
    return LqrSolution(P, S, G)


def lqr_input(problem, solution, n, x):
    """Optimal input ``-R^-1 B^H S[n+1] F x`` at stage ``n``.

    Independent of :attr:`LqrSolution.G`, which produces the same input.
    """
    rb = ql.qmatmul(ql.qinverse(problem.R), ql.hermitian(problem.B))
    return -ql.qmatvec(ql.qmatmul(ql.qmatmul(rb, solution.S[n + 1]), problem.F), x)


def quadratic(x, m):
    """Real value of ``x^H m x``."""
    return float(np.sum(ql.qmatvec(m, x) * x))


@dataclass
class Trajectory:
    states: np.ndarray     # (N, n, 4)
    inputs: np.ndarray     # (N-1, p, 4)
    stage_costs: np.ndarray
    cost: float
    cost_to_go: np.ndarray  # x_n^H P[n] x_n


def simulate_closed_loop(problem, solution, x0, noise=None, input_offsets=None):
    """Roll out ``x_{n+1} = F x_n + B u_n + v_n`` with ``u_n = G[n] x_n``.

    Parameters
    ----------
    noise : ndarray (N-1, n, 4), optional
        Additive process noise (augmented).
    input_offsets : ndarray (N-1, p, 4), optional
        Perturbations added to the optimal inputs, for optimality checks.
    """
    N = problem.N
    x = np.asarray(x0, dtype=float)
    states = [x]
    inputs = []
    stage = []
    for n in range(N - 1):
        u = ql.qmatvec(solution.G[n], x)
        if input_offsets is not None:
            u = u + input_offsets[n]
        stage.append(quadratic(x, problem.Q) + quadratic(u, problem.R))
        x = ql.qmatvec(problem.F, x) + ql.qmatvec(problem.B, u)
        if noise is not None:
            x = x + noise[n]
        states.append(x)
        inputs.append(u)
    stage.append(quadratic(x, problem.T))
    states = np.stack(states)
    ctg = np.array([quadratic(states[n], solution.P[n]) for n in range(N)])
    return Trajectory(states, np.stack(inputs), np.array(stage), float(np.sum(stage)), ctg)


def lqr_steady_state(F, B, Q, R, tol=1e-10, max_iter=100000):
    """Iterate the Riccati recursion to its fixed point.

    Returns
    -------
    (P, G, iterations, residual, closed_loop_radius)
    """
    P = np.array(Q, copy=True)
    bh = ql.hermitian(B)
    for it in range(1, max_iter + 1):
        new = ql.symmetrize(_quad(F, input_reduced(P, B, R)) + Q)
        residual = float(np.max(np.abs(new - P)))
        P = new
        if residual < tol:
            break
    else:
        raise ConvergenceError("Riccati iteration did not converge", max_iter, residual)
    inner = R + ql.qmatmul(ql.qmatmul(bh, P), B)
    G = -ql.qmatmul(ql.qinverse(inner), ql.qmatmul(ql.qmatmul(bh, P), F))
    rho = ql.spectral_radius(F + ql.qmatmul(B, G))
    if rho >= 1.0:
        warnings.warn(f"closed loop not stable (rho={rho:.4g})", RuntimeWarning)
    return P, G, it, residual, rho


def real_lqr_backward(F, B, Q, R, T, N):
    """Textbook real-valued Riccati recursion, used as an independent check."""
    P = [None] * N
    P[-1] = T
    for n in range(N - 2, -1, -1):
        Pn = P[n + 1]
        K = np.linalg.solve(R + B.T @ Pn @ B, B.T @ Pn @ F)
        P[n] = Q + F.T @ Pn @ F - F.T @ Pn @ B @ K
        P[n] = 0.5 * (P[n] + P[n].T)
    return P
