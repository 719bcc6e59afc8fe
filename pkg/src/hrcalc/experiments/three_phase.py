"""Frequency and unbalance tracking of three-phase voltages.

The three phase voltages form the pure quaternion
``q = i v_a + j v_b + k v_c``. Any such signal at a single frequency lies in
a plane and can be written ``q = q+ - q-`` where ``q+`` rotates by
``phi = exp(n 2 pi f dT)`` and ``q-`` by ``conj(phi)`` about the plane
normal ``n``. A balanced system has ``q- = 0``. The tracker is an extended
Kalman filter on the state ``(phi, q+, q-)`` with HR-linearised dynamics.
"""

from dataclasses import dataclass

import numpy as np

from .. import filters as fl
from .. import linalg as ql
from .. import quaternion as qt
from .common import ConfigError, child_rng

# Orientation chosen so that the phase sequence a, b(+120 deg), c(+240 deg)
# rotates positively about it.
NORMAL_AXIS = qt.pure(-np.ones(3) / np.sqrt(3.0))


@dataclass
class ThreePhaseParams:
    f: float = 50.0
    dt: float = 1e-3
    steps: int = 1500
    f_init: float = 49.5
    noise_std: float = 0.0
    fault_step: int = -1
    fault_va: float = 0.2
    fault_shift_b_deg: float = 20.0
    fault_shift_c_deg: float = -20.0
    q_phi: float = 1e-8
    q_seq: float = 3e-5
    r_floor: float = 1e-2


def validate(params):
    """Reject a non-positive step or a sampling rate below twice the frequency."""
    if not params.dt > 0.0:
        raise ConfigError("dt must be positive")
    if not params.f * params.dt < 0.5:
        raise ConfigError("f * dt must be below 0.5")
    if params.steps < 1 or params.noise_std < 0.0:
        raise ConfigError("steps must be positive and noise_std non-negative")


def signal(params, rng=None):
    """Phase voltages as pure quaternions, shape (steps, 4), with optional fault and noise."""
    validate(params)
    n = np.arange(params.steps)
    theta = 2.0 * np.pi * params.f * params.dt * n
    va = np.ones(params.steps)
    shift_b = np.zeros(params.steps)
    shift_c = np.zeros(params.steps)
    if params.fault_step >= 0:
        after = n >= params.fault_step
        va[after] = params.fault_va
        shift_b[after] = np.deg2rad(params.fault_shift_b_deg)
        shift_c[after] = np.deg2rad(params.fault_shift_c_deg)
    q = qt.quat(0.0 * theta, va * np.sin(theta),
                np.sin(theta + shift_b + 2.0 * np.pi / 3.0),
                np.sin(theta + shift_c + 4.0 * np.pi / 3.0))
    if params.noise_std > 0.0:
        rng = rng if rng is not None else np.random.default_rng(0)
        q = q + params.noise_std * qt.pure(rng.standard_normal((params.steps, 3)))
    return q


def transition(s):
    """``(phi, q+, q-) -> (phi, phi q+, conj(phi) q-)``; accepts stacked states."""
    phi = s[..., 0:1, :]
    return np.concatenate([phi, qt.mul(phi, s[..., 1:2, :]),
                           qt.mul(qt.conj(phi), s[..., 2:3, :])], axis=-2)


def observe(s):
    """``q = q+ - q-``."""
    return s[..., 1:2, :] - s[..., 2:3, :]


def frequency_estimate(phi, dt):
    """``atan(|Im phi| / Re phi) / (2 pi dT)``."""
    phi = np.asarray(phi, dtype=float)
    return np.arctan2(np.linalg.norm(phi[..., 1:], axis=-1), phi[..., 0]) / (2.0 * np.pi * dt)


@dataclass
class TrackResult:
    f_hat: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray
    signal: np.ndarray

    @property
    def q_minus_norm(self):
        return np.linalg.norm(self.q_minus, axis=-1)


def track(params, observations):
    """Run the extended Kalman filter over ``observations`` (steps, ..., 4).

    Leading axes after the first are independent runs filtered together.
    """
    observations = np.asarray(observations, dtype=float)
    lead = observations.shape[1:-1]
    x0 = np.stack([qt.qexp(NORMAL_AXIS * 2.0 * np.pi * params.f_init * params.dt),
                   np.zeros(4), np.zeros(4)])
    m0 = ql.augmented_covariance(np.diag(np.tile([1e-4, 1.0, 1.0], 4)))
    state = fl.KalmanState(np.broadcast_to(ql.augment(x0), lead + (12, 4)).copy(),
                           np.broadcast_to(m0, lead + m0.shape).copy())
    sigma_v = ql.augmented_covariance(
        np.diag(np.tile([params.q_phi, params.q_seq, params.q_seq], 4)))
    r = max(params.noise_std ** 2, params.r_floor)
    sigma_w = ql.augmented_covariance(np.eye(4) * r)
    n = len(observations)
    f_hat = np.empty((n,) + lead)
    q_plus = np.empty((n,) + lead + (4,))
    q_minus = np.empty((n,) + lead + (4,))
    for t, y in enumerate(observations):
        state = fl.ekf_predict(transition, state, sigma_v)
        state = fl.ekf_update(observe, state, ql.augment(y[..., None, :]), sigma_w)
        base = ql.deaugment(state.x_hat, strict=False)
        f_hat[t] = frequency_estimate(base[..., 0, :], params.dt)
        q_plus[t] = base[..., 1, :]
        q_minus[t] = base[..., 2, :]
    return TrackResult(f_hat, q_plus, q_minus, observations)


def run(params, seed=0):
    return track(params, signal(params, child_rng(seed, 0)))


def bias_study(params, seeds, burn_in):
    """Mean frequency error after ``burn_in`` for each seed; the seeds are filtered together."""
    obs = np.stack([signal(params, child_rng(s, 0)) for s in seeds], axis=1)
    res = track(params, obs)
    return np.mean(res.f_hat[burn_in:], axis=0) - params.f


def rows(result):
    for t in range(len(result.f_hat)):
        yield (t, result.f_hat[t], *result.q_plus[t], *result.q_minus[t],
               float(np.linalg.norm(result.q_minus[t])))


COLUMNS = ["step", "f_hat", "qp_r", "qp_i", "qp_j", "qp_k",
           "qm_r", "qm_i", "qm_j", "qm_k", "qm_norm"]
