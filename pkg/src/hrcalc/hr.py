"""Numerical HR calculus for functions of quaternion variables.

Derivatives are assembled from central-difference partials with respect to
the four real components of each variable. For a rotating quaternion ``mu``
the derivative with respect to ``q^mu`` is

    d f / d q^mu   = 1/4 sum_u conj(mu u mu^-1) df/dq_u
    d f / d q^mu*  = 1/4 sum_u (mu u mu^-1) df/dq_u

where ``u`` runs over ``1, i, j, k`` and the units multiply the partials
from the left. ``mu`` in ``{1, i, j, k}`` gives the standard HR and HR*
derivatives. A function ``f`` takes an array of shape (M, 4) and returns a
quaternion of shape (4,) (a real scalar is promoted).
"""

from dataclasses import dataclass

import numpy as np

from . import linalg as ql
from . import quaternion as qt
from .errors import ContractError, DivergenceError, QuaternionDomainError

UNITS = qt.UNITS
DEFAULT_REL_STEP = 1e-5


def default_step(at):
    return DEFAULT_REL_STEP * max(1.0, float(np.linalg.norm(at)))


def _as_point(at):
    at = np.asarray(at, dtype=float)
    if at.ndim == 1:
        at = at[None, :]
    if at.ndim != 2 or at.shape[-1] != 4:
        raise ValueError(f"evaluation point must have shape (M, 4), got {at.shape}")
    return at


def _promote(value):
    value = np.asarray(value, dtype=float)
    if value.shape[-1:] != (4,):
        value = qt.from_real(value)
    return value


def real_partials(f, at, h=None, vectorized=False):
    """Central-difference partials of ``f`` with respect to every real component.

    Parameters
    ----------
    f : callable
        ``f(q)`` with ``q`` of shape (M, 4). With ``vectorized=True`` it must
        accept a stack of points (P, M, 4) and return (P, 4) or (P,).
    at : array_like, shape (M, 4)
    h : float, optional
        Step size, default ``1e-5 * max(1, |at|)``.

    Returns
    -------
    ndarray, shape (4, M, 4)
        ``out[u, m]`` is the partial derivative of ``f`` with respect to
        component ``u`` of variable ``m``; a quaternion.
    """
    at = _as_point(at)
    h = default_step(at) if h is None else float(h)
    m = at.shape[0]
    eye = np.eye(4 * m).reshape(4 * m, m, 4) * h
    # probe order: (component u, variable m) flattened from the (m, u) identity
    probes = np.concatenate([at + eye, at - eye], axis=0)
    if vectorized:
        vals = _promote(f(probes))
    else:
        vals = np.stack([_promote(f(p)) for p in probes])
    if not np.all(np.isfinite(vals)):
        raise DivergenceError("non-finite function value while differencing")
    diff = (vals[:4 * m] - vals[4 * m:]) / (2.0 * h)  # index = m*4 + u
    return np.swapaxes(diff.reshape(m, 4, 4), 0, 1)


def _rotated_units(mu):
    mu = qt.asquat(mu)
    if qt.norm(mu) == 0.0:
        raise QuaternionDomainError("rotating quaternion must be nonzero")
    return qt.similarity(UNITS, mu)


def derivative_from_partials(partials, mu=qt.ONE, conjugate=False, side="left"):
    """Combine real partials into the derivative with respect to ``q^mu`` (or ``q^mu*``).

    ``side="left"`` puts the units to the left of the partials (the HR
    convention); ``side="right"`` gives the left-derivative variant used for
    Jacobians and the conjugate rule.
    """
    units = _rotated_units(mu)
    if not conjugate:
        units = qt.conj(units)
    units = units[:, None, :]
    if side == "left":
        terms = qt.mul(units, partials)
    else:
        terms = qt.mul(partials, units)
    return 0.25 * terms.sum(axis=0)


def hr_derivative(f, at, mu=qt.ONE, conjugate=False, h=None, vectorized=False):
    """HR derivative of ``f`` with respect to ``q^mu`` (``conjugate`` for ``q^mu*``).

    ``mu`` may be any nonzero quaternion; returns shape (M, 4).
    """
    p = real_partials(f, at, h, vectorized)
    return derivative_from_partials(p, mu, conjugate)


def left_hr_derivative(f, at, mu=qt.ONE, conjugate=False, h=None, vectorized=False):
    """Derivative with the units multiplied on the right of the partials."""
    p = real_partials(f, at, h, vectorized)
    return derivative_from_partials(p, mu, conjugate, side="right")


@dataclass
class HRGradient:
    """HR derivatives ``d/dq^z`` and HR* derivatives ``d/dq^z*`` for z in 1, i, j, k."""
    d_q: np.ndarray
    d_qi: np.ndarray
    d_qj: np.ndarray
    d_qk: np.ndarray
    d_q_conj: np.ndarray
    d_qi_conj: np.ndarray
    d_qj_conj: np.ndarray
    d_qk_conj: np.ndarray

    @property
    def hr(self):
        """Stacked HR derivatives, shape (4M, 4)."""
        return np.concatenate([self.d_q, self.d_qi, self.d_qj, self.d_qk])

    @property
    def hr_conj(self):
        """Stacked HR* derivatives, the gradient with respect to ``q^a*``."""
        return np.concatenate([self.d_q_conj, self.d_qi_conj, self.d_qj_conj, self.d_qk_conj])

    def scaled(self, factor):
        return HRGradient(*(factor * getattr(self, name) for name in self.__dataclass_fields__))


def gradient_from_partials(p):
    derivs = [derivative_from_partials(p, UNITS[z]) for z in range(4)]
    derivs += [derivative_from_partials(p, UNITS[z], conjugate=True) for z in range(4)]
    return HRGradient(*derivs)


def hr_gradient(f, at, h=None, vectorized=False):
    """All eight HR / HR* derivatives of ``f`` at ``at``."""
    return gradient_from_partials(real_partials(f, at, h, vectorized))


def partials_from_gradient(grad_conj):
    """Recover real partials from the stacked HR* derivatives by inverting ``A/4``.

    Returns shape (4, M, 4) like :func:`real_partials`.
    """
    g = np.asarray(grad_conj, dtype=float)
    m = g.shape[0] // 4
    a = ql.build_augmentation_matrix(m)
    # (A/4)^-1 = A^H
    p = ql.qmatvec(ql.hermitian(a), g)
    return p.reshape(4, m, 4)


def check_crf(f, at, h=None):
    """Residual of the Cauchy-Riemann-Fueter condition,
    ``|df/dq_r + i df/dq_i + j df/dq_j + k df/dq_k|``."""
    p = real_partials(f, at, h)
    s = qt.mul(UNITS[:, None, :], p).sum(axis=0)
    return float(np.linalg.norm(s))


def product_rule_derivative(f, g, at, xi, h=None, conjugate=False):
    """Right-hand side of the product rule for ``f(q) g(q)``.

    ``f d g / d q^(conj(f) xi) + (d f / d q^xi) g`` evaluated numerically.
    The rotating quaternion ``conj(f) xi`` is in general not pure; it is used
    through ``mu q mu^-1``, which is insensitive to its scale.

    Raises
    ------
    QuaternionDomainError
        If ``|f(at)|`` is below 1e-12, where the rotated axis is undefined.
    """
    fv = _promote(f(_as_point(at)))
    if qt.norm(fv) < 1e-12:
        raise QuaternionDomainError("product rule axis undefined: f(q) vanishes")
    mu = qt.mul(qt.conj(fv), xi)
    dg = hr_derivative(g, at, mu, conjugate, h)
    df = hr_derivative(f, at, xi, conjugate, h)
    gv = _promote(g(_as_point(at)))
    return qt.mul(fv, dg) + qt.mul(df, gv)


def rotation_rule_check(f, at, nu, xi, h=None):
    """Residual ``|(df/dq^xi)^nu - d f^nu / d q^(nu xi)|`` for a nonzero ``nu``."""
    nu = qt.asquat(nu)
    lhs = qt.similarity(hr_derivative(f, at, xi, h=h), nu)

    def f_nu(q):
        return qt.similarity(_promote(f(q)), nu)

    rhs = hr_derivative(f_nu, at, qt.mul(nu, xi), h=h)
    return float(np.linalg.norm(lhs - rhs))


def taylor_first_order(f, x, dx, h=None):
    """First-order expansion ``f(x) + (dx^a)^H grad_{x^a*} f``.

    Returns
    -------
    predicted, actual : ndarray, shape (4,)
    """
    x = _as_point(x)
    dx = _as_point(dx)
    grad = hr_gradient(f, x, h).hr_conj
    pred = _promote(f(x)) + np.sum(qt.mul(qt.conj(ql.augment(dx)), grad), axis=0)
    return pred, _promote(f(x + dx))


def taylor_remainder_slope(f, x, dx, scales=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3), h=None):
    """Log-log slope of the first-order remainder ``|f(x + t dx) - expansion|`` in ``t``.

    A smooth ``f`` gives a slope of 2.

    Returns
    -------
    (float, ndarray)
        Fitted slope and the remainders at each scale.
    """
    x = _as_point(x)
    dx = _as_point(dx)
    rem = []
    for t in scales:
        pred, actual = taylor_first_order(f, x, t * dx, h)
        rem.append(float(np.linalg.norm(pred - actual)))
    rem = np.array(rem)
    slope = np.polyfit(np.log(np.asarray(scales, dtype=float)), np.log(rem), 1)[0]
    return float(slope), rem


def chain_rule_real_inner(g, fr, at, h=None, tol=1e-12):
    """HR gradient of ``fr(g(q))`` for real ``g`` and real ``fr`` via the chain rule.

    ``d fr(g) / d q^mu* = d g / d q^mu* * fr'(g)``.

    Raises
    ------
    ContractError
        If ``g`` is not real-valued at ``at`` or its neighbourhood probes.
    """
    at = _as_point(at)
    h = default_step(at) if h is None else h

    def g_checked(q):
        v = _promote(g(q))
        if np.max(np.abs(v[..., 1:])) > tol * max(1.0, abs(v[..., 0])):
            raise ContractError("inner function must be real-valued")
        return v

    grad = hr_gradient(g_checked, at, h)
    g0 = float(g_checked(at)[0])
    hs = 1e-6 * max(1.0, abs(g0))
    dfr = (float(fr(g0 + hs)) - float(fr(g0 - hs))) / (2.0 * hs)
    return grad.scaled(dfr)


def jacobian_real(f, at, h=None, vectorized=False):
    """Real Jacobian of a map from quaternion vectors to quaternion vectors.

    Rows and columns follow the component-major order of
    :func:`linalg.real_components`. ``at`` may carry leading batch axes
    (requires ``vectorized``); the result then has shape (..., 4K, 4M).
    """
    at = np.asarray(at, dtype=float)
    if at.ndim == 1:
        at = at[None, :]
    lead = at.shape[:-2]
    if lead and not vectorized:
        raise ValueError("batched evaluation points require a vectorized function")
    if h is None:
        h = DEFAULT_REL_STEP * max(1.0, float(np.max(np.linalg.norm(at, axis=(-2, -1)))))
    m = at.shape[-2]
    eye = (np.eye(4 * m) * h).reshape((4 * m,) + (1,) * len(lead) + (m, 4))
    probes = np.concatenate([at + eye, at - eye], axis=0)
    if vectorized:
        vals = np.asarray(f(probes), dtype=float)
    else:
        vals = np.stack([np.asarray(f(p), dtype=float) for p in probes])
    if vals.ndim == 1 + len(lead) + 1:
        vals = vals[..., None, :]
    if not np.all(np.isfinite(vals)):
        raise DivergenceError("non-finite function value while differencing")
    diff = (vals[:4 * m] - vals[4 * m:]) / (2.0 * h)  # (m*4+u, ..., K, 4)
    out_real = ql.real_components(diff)  # (m*4+u, ..., 4K)
    # reorder the differenced variable to component-major (u*m + m)
    out_real = out_real.reshape((m, 4) + out_real.shape[1:])
    out_real = np.swapaxes(out_real, 0, 1).reshape((4 * m,) + out_real.shape[2:])
    return np.moveaxis(out_real, 0, -1)


def augmented_jacobian(f, at, h=None, vectorized=False):
    """Augmented-domain Jacobian ``J`` with ``d f^a ~= J d q^a``.

    ``f`` maps (M, 4) to (K, 4); the result has shape (4K, 4M, 4). Entry
    blocks are left derivatives of ``f^z`` with respect to ``q^w``.
    """
    jr = jacobian_real(f, at, h, vectorized)
    k4, m4 = jr.shape[-2:]
    a_out = ql.build_augmentation_matrix(k4 // 4)
    a_in = ql.build_augmentation_matrix(m4 // 4)
    return 0.25 * ql.qmatmul(ql.qmatmul(a_out, qt.from_real(jr)), ql.hermitian(a_in))


def mean_from_aqcf(samples, xi, h=1e-4):
    """Recover the sample mean from the numeric HR* derivative of the
    characteristic function at ``s = 0``.

    The derivative equals ``xi^-1``-rotated mean over four, so the mean is
    ``((4 / xi) dPhi/ds*)`` followed by the involution about ``xi``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[:, None, :]
    m = samples.shape[1]

    def phi(s):
        return ql.aqcf_eval(samples, s, xi)

    d = hr_derivative(phi, np.zeros((m, 4)), qt.ONE, conjugate=True, h=h, vectorized=True)
    scaled = qt.mul(4.0 * qt.inv(xi), d)
    return qt.involution(scaled, xi)


def correlation_from_aqcf(samples, xi, z1, z2, h=1e-3):
    """Second HR* derivative of the characteristic function at ``s = 0``.

    Returns the (M, M) quaternion matrix ``d^2 Phi / ds^z1* ds^z2*``, which
    equals ``-1/16 E[q^z1 (q^z2)^T]``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[:, None, :]
    m = samples.shape[1]
    mu1, mu2 = UNITS[z1], UNITS[z2]

    def inner(s):
        def phi(t):
            return ql.aqcf_eval(samples, t, xi)
        return hr_derivative(phi, s, mu2, conjugate=True, h=h, vectorized=True)

    # outer derivative of each entry of the inner derivative
    out = np.zeros((m, m, 4))
    zero = np.zeros((m, 4))
    eye = np.eye(4 * m).reshape(4 * m, m, 4) * h
    plus = np.stack([inner(zero + e) for e in eye])
    minus = np.stack([inner(zero - e) for e in eye])
    diff = (plus - minus) / (2.0 * h)  # (m_outer*4 + u, m_inner, 4)
    p = np.swapaxes(diff.reshape(m, 4, m, 4), 0, 1)  # (u, m_outer, m_inner, 4)
    units = _rotated_units(mu1)[:, None, None, :]
    out = 0.25 * qt.mul(units, p).sum(axis=0)
    return out
