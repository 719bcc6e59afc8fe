"""Widely linear adaptive filters and Kalman filtering in the augmented domain.

Regressors ``z`` are base quaternion vectors of shape (M, 4); filters work on
their augmented form ``z^a`` (4M, 4). Kalman models are specified directly in
the augmented domain: state, input and observation vectors are augmented and
the model matrices act on them from the left.
"""

from dataclasses import dataclass, field, replace
import warnings

import numpy as np

from . import hr
from . import linalg as ql
from . import quaternion as qt
from .errors import DimensionError, DivergenceError, NumericError


# -- QLMS ------------------------------------------------------------------

@dataclass
class LmsFilter:
    """Widely linear QLMS filter with output ``w^T z^a``.

    Attributes
    ----------
    w : ndarray, shape (4M, 4)
        Weights multiplying the augmented regressor from the left.
    gamma : float
        Step size.
    steps : int
        Number of updates applied so far.
    """
    w: np.ndarray
    gamma: float
    steps: int = 0

    @classmethod
    def zeros(cls, m, gamma):
        return cls(np.zeros((4 * m, 4)), gamma)

    def predict(self, z):
        return wl_output(self.w, z)


def wl_output(w, z):
    """Widely linear output ``sum_n w_n z^a_n``."""
    return ql.qdot(w, ql.augment(z))


def qlms_step(filt, z, y):
    """One QLMS update ``w <- w + gamma e conj(z^a)`` with ``e = y - w^T z^a``.

    Returns
    -------
    (LmsFilter, ndarray)
        Updated filter and the a-priori error.

    Raises
    ------
    DivergenceError
        If the weights become non-finite.
    """
    z = np.asarray(z, dtype=float)
    if 4 * z.shape[-2] != filt.w.shape[0]:
        raise DimensionError(f"regressor length {z.shape[-2]} does not match weights {filt.w.shape}")
    za = ql.augment(z)
    err = np.asarray(y, dtype=float) - ql.qdot(filt.w, za)
    w = filt.w + filt.gamma * qt.mul(err, qt.conj(za))
    if not np.all(np.isfinite(w)):
        raise DivergenceError(f"QLMS diverged at step {filt.steps}", filt.steps)
    return replace(filt, w=w, steps=filt.steps + 1), err


def regressor_covariance(regressors):
    """Uncentred augmented covariance ``E[z^a z^aH]`` of regressor samples (N, M, 4)."""
    za = ql.augment(np.asarray(regressors, dtype=float))
    return ql.qouter(za, za).mean(axis=0)


def qlms_recursion_matrix(cov_za):
    """Block-diagonal ``diag(S, S^i, S^j, S^k)`` driving the weight-error recursion."""
    return ql.augment_matrix(cov_za)


def qlms_error_covariance_step(sigma, gamma, g):
    """``(I - gamma G) Sigma (I - gamma G)^H``."""
    n = sigma.shape[0]
    t = ql.qeye(n) - gamma * g
    return ql.qmatmul(ql.qmatmul(t, sigma), ql.hermitian(t))


def qlms_stability(regressors, gamma):
    """Spectral radius of the regressor covariance and whether ``gamma rho < 2``."""
    rho = ql.spectral_radius(regressor_covariance(regressors))
    return rho, bool(gamma * rho < 2.0)


def suggest_gamma(regressors, fraction=0.1):
    """Step size ``fraction * 2 / rho`` from a dry run over sample regressors."""
    rho, _ = qlms_stability(regressors, 1.0)
    return 2.0 * fraction / rho


def wl_mmse_fit(regressors, targets):
    """Least-squares widely linear weights from the augmented normal equations.

    Solves ``w^T R = p`` with ``R = sum z^a z^aH`` and ``p = sum y conj(z^a)^T``.

    Parameters
    ----------
    regressors : ndarray, shape (N, M, 4)
    targets : ndarray, shape (N, 4)

    Returns
    -------
    ndarray, shape (4M, 4)
    """
    regressors = np.asarray(regressors, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if regressors.ndim == 2:
        regressors = regressors[:, None, :]
    za = ql.augment(regressors)
    gram = ql.qouter(za, za).sum(axis=0)
    cross = qt.mul(targets[:, None, :], qt.conj(za)).sum(axis=0)
    # conj(w) = R^-1 p^H since R is Hermitian
    w_conj = ql.qmatvec(ql.qinverse(gram), qt.conj(cross))
    return qt.conj(w_conj)


# -- nonlinear element ------------------------------------------------------

def squared_norm(e):
    return np.sum(np.asarray(e) ** 2, axis=-1)


@dataclass
class NonlinearElement:
    """``y = h(w^T z^a)`` trained by a numerical HR* gradient."""
    w: np.ndarray
    gamma: float
    activation: callable = None
    steps: int = 0


def nonlinear_step(elem, z, y, metric=squared_norm, h=None):
    """``w <- w - gamma grad_{w*} d(h(w^T z^a) - y)`` with a numeric gradient.

    Returns
    -------
    (NonlinearElement, float)
        Updated element and the cost before the update.
    """
    act = elem.activation or (lambda v: v)
    za = ql.augment(np.asarray(z, dtype=float))
    y = np.asarray(y, dtype=float)

    def cost(w):
        out = act(np.sum(qt.mul(w, za), axis=-2))
        return metric(out - y)

    grad = hr.hr_derivative(cost, elem.w, conjugate=True, h=h, vectorized=True)
    w = elem.w - elem.gamma * grad
    if not np.all(np.isfinite(w)):
        raise DivergenceError(f"nonlinear element diverged at step {elem.steps}", elem.steps)
    return replace(elem, w=w, steps=elem.steps + 1), float(cost(elem.w[None])[0])


# -- Kalman filtering ------------------------------------------------------

@dataclass
class StateSpaceModel:
    """Augmented-domain linear model ``x' = F x + B u + v``, ``y = H x + w``."""
    F: np.ndarray
    H: np.ndarray
    Sigma_v: np.ndarray
    Sigma_w: np.ndarray
    B: np.ndarray = None

    def __post_init__(self):
        n = self.F.shape[-2]
        if self.F.shape[-3:-1] != (n, n) or self.Sigma_v.shape[-3:-1] != (n, n):
            raise DimensionError("F and Sigma_v must be square and agree")
        p = self.H.shape[-3]
        if self.H.shape[-2] != n or self.Sigma_w.shape[-3:-1] != (p, p):
            raise DimensionError("H and Sigma_w do not agree with the state")


@dataclass
class KalmanState:
    x_hat: np.ndarray
    M: np.ndarray
    G: np.ndarray = None
    step: int = 0


def project_augmented(va):
    """Closest augmented vector: average the four blocks mapped back to base."""
    va = np.asarray(va, dtype=float)
    m = va.shape[-2] // 4
    base = sum(ql.involute(va[..., z * m:(z + 1) * m, :], z) for z in range(4)) / 4.0
    return ql.augment(base)


def augmented_model(F, H, cov_v, cov_w, B=None):
    """Augmented model from strictly linear base matrices.

    ``cov_v`` and ``cov_w`` are covariances of the real components of the
    base noises (component-major order).
    """
    return StateSpaceModel(
        ql.augment_matrix(F), ql.augment_matrix(H),
        ql.augmented_covariance(cov_v), ql.augmented_covariance(cov_w),
        None if B is None else ql.augment_matrix(B))


def kalman_predict(model, state, u=None):
    """``x <- F x + B u``, ``M <- F M F^H + Sigma_v`` (``u`` augmented)."""
    x = ql.qmatvec(model.F, state.x_hat)
    if u is not None:
        if model.B is None:
            raise DimensionError("model has no input matrix")
        x = x + ql.qmatvec(model.B, u)
    m = ql.qmatmul(ql.qmatmul(model.F, state.M), ql.hermitian(model.F)) + model.Sigma_v
    return replace(state, x_hat=x, M=ql.symmetrize(m))


def kalman_gain(M_prior, H, Sigma_w):
    """``G = M H^H (H M H^H + Sigma_w)^-1``."""
    mh = ql.qmatmul(M_prior, ql.hermitian(H))
    s = ql.qmatmul(H, mh) + Sigma_w
    return ql.qmatmul(mh, ql.qinverse(s))


def information_update(M_prior, H, Sigma_w):
    """Posterior covariance ``((M^-)^-1 + H^H Sigma_w^-1 H)^-1``.

    Falls back to ``(I - G H) M^-`` when the prior covariance is too
    ill-conditioned to invert (for example an exactly known state).
    """
    hs = ql.qmatmul(ql.hermitian(H), ql.qinverse(Sigma_w))
    try:
        info = ql.qinverse(M_prior) + ql.qmatmul(hs, H)
        return ql.symmetrize(ql.qinverse(info))
    except NumericError:
        g = kalman_gain(M_prior, H, Sigma_w)
        n = M_prior.shape[-2]
        return ql.symmetrize(ql.qmatmul(ql.qeye(n) - ql.qmatmul(g, H), M_prior))


def kalman_update(model, state, y):
    """Measurement update with augmented observation ``y``.

    Raises
    ------
    DivergenceError
        If the estimate becomes non-finite.
    """
    g = kalman_gain(state.M, model.H, model.Sigma_w)
    innov = y - ql.qmatvec(model.H, state.x_hat)
    x = state.x_hat + ql.qmatvec(g, innov)
    m = information_update(state.M, model.H, model.Sigma_w)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
        raise DivergenceError(f"Kalman filter diverged at step {state.step}", state.step)
    return KalmanState(x, m, g, state.step + 1)


def kalman_update_fixed(model, state, y, gain, M_post):
    """Measurement update with a precomputed gain and posterior covariance.

    The covariance recursion does not depend on the data, so Monte-Carlo
    runs can share it and only propagate the estimates.
    """
    innov = y - ql.qmatvec(model.H, state.x_hat)
    return KalmanState(state.x_hat + ql.qmatvec(gain, innov), M_post, gain, state.step + 1)


def kalman_step(model, state, y, u=None):
    return kalman_update(model, kalman_predict(model, state, u), y)


def lyapunov_step(M, rotscale, shift):
    """``R M R^H + S`` for quaternion matrices, or ``R M R^T + S`` for real ones."""
    M = np.asarray(M, dtype=float)
    rotscale = np.asarray(rotscale, dtype=float)
    if M.ndim == 2:
        return rotscale @ M @ rotscale.T + shift
    return ql.qmatmul(ql.qmatmul(rotscale, M), ql.hermitian(rotscale)) + shift


def error_covariance_step(M, F, H, G, Sigma_v, Sigma_w):
    """Covariance of the error after one predict/update cycle with a fixed gain.

    ``e' = (I - G H)(F e + v) - G w`` so
    ``M' = T F M F^H T^H + T Sigma_v T^H + G Sigma_w G^H`` with ``T = I - G H``.
    """
    n = F.shape[0]
    t = ql.qeye(n) - ql.qmatmul(G, H)
    tf = ql.qmatmul(t, F)
    out = lyapunov_step(M, tf, ql.qmatmul(ql.qmatmul(t, Sigma_v), ql.hermitian(t)))
    return out + ql.qmatmul(ql.qmatmul(G, Sigma_w), ql.hermitian(G))


@dataclass
class RiccatiResult:
    M: np.ndarray
    M_prior: np.ndarray
    G: np.ndarray
    iterations: int
    residual: float
    closed_loop_radius: float
    history: list = field(default_factory=list)


def riccati_fixed_point(model, M0=None, tol=1e-12, max_iter=100000):
    """Iterate ``M <- ((F M F^H + Sigma_v)^-1 + H^H Sigma_w^-1 H)^-1`` to a fixed point.

    Warns (RuntimeWarning) if ``rho((I - G H) F) >= 1`` at the fixed point.
    """
    n = model.F.shape[0]
    M = ql.qeye(n) if M0 is None else M0
    residual = np.inf
    for it in range(1, max_iter + 1):
        prior = lyapunov_step(M, model.F, model.Sigma_v)
        new = information_update(prior, model.H, model.Sigma_w)
        residual = float(np.max(np.abs(new - M)))
        M = new
        if residual < tol:
            break
    prior = ql.symmetrize(lyapunov_step(M, model.F, model.Sigma_v))
    g = kalman_gain(prior, model.H, model.Sigma_w)
    closed = ql.qmatmul(ql.qeye(n) - ql.qmatmul(g, model.H), model.F)
    rho = ql.spectral_radius(closed)
    if rho >= 1.0:
        warnings.warn(f"steady-state error dynamics not contractive (rho={rho:.4g})", RuntimeWarning)
    return RiccatiResult(M, prior, g, it, residual, rho)


# -- extended Kalman filter --------------------------------------------------

def ekf_predict(transition, state, Sigma_v):
    """Propagate an augmented estimate through a nonlinear base-domain map.

    ``transition`` maps (n, 4) to (n, 4); its augmented Jacobian linearises
    the covariance propagation.
    """
    base = ql.deaugment(state.x_hat, strict=False)
    F = hr.augmented_jacobian(transition, base, vectorized=True)
    x = ql.augment(transition(base))
    m = ql.qmatmul(ql.qmatmul(F, state.M), ql.hermitian(F)) + Sigma_v
    return replace(state, x_hat=x, M=ql.symmetrize(m))


def ekf_update(observe, state, y, Sigma_w):
    """Measurement update with a nonlinear base-domain observation map.

    ``y`` is the augmented observation.
    """
    base = ql.deaugment(state.x_hat, strict=False)
    H = hr.augmented_jacobian(observe, base, vectorized=True)
    g = kalman_gain(state.M, H, Sigma_w)
    innov = y - ql.augment(observe(base))
    x = project_augmented(state.x_hat + ql.qmatvec(g, innov))
    m = information_update(state.M, H, Sigma_w)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
        raise DivergenceError(f"extended Kalman filter diverged at step {state.step}", state.step)
    return KalmanState(x, m, g, state.step + 1)


def error_summary(x_hat, x_true):
    """Squared error norm between augmented estimate and base truth."""
    return float(np.sum((ql.deaugment(x_hat, strict=False) - x_true) ** 2))
