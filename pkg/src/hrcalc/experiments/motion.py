"""One-step-ahead prediction of body rotation from Euler-angle tracks.

Synthetic roll, pitch and yaw tracks are wrapped to ``(-pi, pi]`` and mapped
to the rotation quaternion ``exp(k yaw/2) exp(j pitch/2) exp(i roll/2)``.
A widely linear QLMS predictor is compared with a quadrivariate real LMS
baseline that treats the four components as independent real channels.
"""

from dataclasses import dataclass

import numpy as np

from .. import filters as fl
from .. import quaternion as qt
from .common import child_rng


@dataclass
class MotionParams:
    steps: int = 2000
    dt: float = 0.05
    taps: int = 2
    yaw_rate: float = 1.5
    wobble: float = 0.6
    noise_std: float = 0.01
    step_fraction: float = 0.1
    burn_in: int = 1000


def wrap(angle):
    """Wrap to ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - angle, 2.0 * np.pi)


def euler_tracks(params, rng):
    """Smooth roll, pitch, yaw tracks (steps, 3); yaw drifts through +-pi."""
    t = params.dt * np.arange(params.steps)
    freqs = rng.uniform(0.1, 0.5, 3)
    phases = rng.uniform(0.0, 2.0 * np.pi, 3)
    amp = params.wobble * rng.uniform(0.5, 1.0, 3)
    ang = amp * np.sin(2.0 * np.pi * freqs * t[:, None] + phases)
    ang[:, 2] += params.yaw_rate * t + rng.uniform(-np.pi, np.pi)
    ang += params.noise_std * rng.standard_normal(ang.shape)
    return wrap(ang)


def euler_to_quaternion(angles, continuous=True):
    """``exp(k yaw/2) exp(j pitch/2) exp(i roll/2)`` for (..., 3) angle rows.

    The half angles make a 2 pi wrap of any angle flip the sign of the
    quaternion. With ``continuous`` the sign of each sample is chosen to stay
    on the same hemisphere as its predecessor, which removes those jumps
    without changing the rotation represented.
    """
    angles = np.asarray(angles, dtype=float)
    roll = qt.axis_angle(qt.I, angles[..., 0] / 2.0)
    pitch = qt.axis_angle(qt.J, angles[..., 1] / 2.0)
    yaw = qt.axis_angle(qt.K, angles[..., 2] / 2.0)
    q = qt.mul3(yaw, pitch, roll)
    if continuous and q.ndim == 2:
        q = q.copy()
        for n in range(1, len(q)):
            if np.dot(q[n], q[n - 1]) < 0.0:
                q[n] = -q[n]
    return q


def regressors(q, taps):
    """Past-sample regressors (N-taps, taps, 4) and targets (N-taps, 4)."""
    n = len(q)
    z = np.stack([q[taps - 1 - m:n - 1 - m] for m in range(taps)], axis=1)
    return z, q[taps:]


def qlms_predict(z, y, gamma):
    filt = fl.LmsFilter.zeros(z.shape[1], gamma)
    preds = np.empty_like(y)
    for n in range(len(y)):
        preds[n] = filt.predict(z[n])
        filt, _ = fl.qlms_step(filt, z[n], y[n])
    return preds


def real_lms_predict(z, y, mu):
    """Four independent real LMS filters, one per quaternion component."""
    w = np.zeros((4, z.shape[1]))
    preds = np.empty_like(y)
    for n in range(len(y)):
        x = z[n].T  # (4 channels, taps)
        preds[n] = np.sum(w * x, axis=1)
        w = w + mu * (y[n] - preds[n])[:, None] * x
    return preds


@dataclass
class MotionResult:
    angles: np.ndarray
    q: np.ndarray
    qlms_pred: np.ndarray
    real_pred: np.ndarray
    targets: np.ndarray

    def mse(self, burn_in):
        eq = np.sum((self.qlms_pred[burn_in:] - self.targets[burn_in:]) ** 2, axis=-1)
        er = np.sum((self.real_pred[burn_in:] - self.targets[burn_in:]) ** 2, axis=-1)
        return float(np.mean(eq)), float(np.mean(er))


def run(params, seed=0, angles=None):
    rng = child_rng(seed, 0)
    angles = euler_tracks(params, rng) if angles is None else np.asarray(angles, dtype=float)
    q = euler_to_quaternion(angles)
    z, y = regressors(q, params.taps)
    gamma = fl.suggest_gamma(z, params.step_fraction)
    # same fraction of the stability bound for each real channel
    rho = max(np.linalg.eigvalsh(z[:, :, c].T @ z[:, :, c] / len(z)).max() for c in range(4))
    mu = 2.0 * params.step_fraction / rho
    return MotionResult(angles, q, qlms_predict(z, y, gamma), real_lms_predict(z, y, mu), y)


COLUMNS = ["step", "roll", "pitch", "yaw", "q_r", "q_i", "q_j", "q_k",
           "qlms_err", "real_err", "phase_true", "phase_qlms", "phase_real"]


def phase(q):
    """Polar angle ``atan2(|Im q|, Re q)``; zero for the zero quaternion."""
    q = np.asarray(q, dtype=float)
    return np.arctan2(np.linalg.norm(q[..., 1:], axis=-1), q[..., 0])


def rows(result, taps):
    pt, pq, pr = phase(result.targets), phase(result.qlms_pred), phase(result.real_pred)
    eq = np.linalg.norm(result.qlms_pred - result.targets, axis=-1)
    er = np.linalg.norm(result.real_pred - result.targets, axis=-1)
    for n in range(len(result.targets)):
        t = n + taps
        yield (t, *result.angles[t], *result.q[t], eq[n], er[n], pt[n], pq[n], pr[n])
