"""Independent real-valued reference computations used by several test files."""

import numpy as np

from hrcalc import linalg as ql


def real_linear_map(fn, m):
    """Real matrix of a real-linear map on quaternion vectors of length ``m``."""
    cols = []
    for c in range(4 * m):
        e = np.zeros(4 * m)
        e[c] = 1.0
        cols.append(ql.real_components(fn(ql.from_real_components(e))))
    return np.stack(cols, axis=1)


def batch_estimate(phi, obs_map, prior_mean, prior_cov, noise_cov, observations):
    """Generalised least squares for ``x_n = phi^n s`` observed as ``obs_map x_n + w``.

    All arguments are real; returns the estimate of ``phi^N s`` with N the
    number of observations.
    """
    info = np.linalg.inv(prior_cov)
    rhs = info @ prior_mean
    wi = np.linalg.inv(noise_cov)
    power = np.eye(len(prior_mean))
    for y in observations:
        power = phi @ power
        a = obs_map @ power
        info = info + a.T @ wi @ a
        rhs = rhs + a.T @ wi @ y
    return power @ np.linalg.solve(info, rhs)


def random_spd(rng, n, floor=0.1):
    a = rng.standard_normal((n, n))
    return a @ a.T / n + floor * np.eye(n)
