"""Invariant suites of the library, reported as ``suite,name,residual,limit`` lines.

Every check returns the largest residual it observed; a check passes when
the residual does not exceed its limit. Failures never stop the run.
"""

from dataclasses import dataclass
import math

import numpy as np

from .. import filters as fl
from .. import fusion
from .. import hr
from .. import linalg as ql
from .. import lqr
from .. import qnn
from .. import quaternion as qt
from .common import child_rng

N_SAMPLES = 200


@dataclass
class CheckResult:
    suite: str
    name: str
    residual: float
    limit: float
    error: str = ""

    @property
    def passed(self):
        return not self.error and bool(self.residual <= self.limit)

    def line(self):
        return f"{self.suite},{self.name},{self.residual!r},{self.limit!r}"


def _max(x):
    return float(np.max(np.abs(x)))


# -- algebra ---------------------------------------------------------------

def algebra_product_table(rng):
    u = qt.UNITS
    expected = np.array([
        [u[0], u[1], u[2], u[3]],
        [u[1], -u[0], u[3], -u[2]],
        [u[2], -u[3], -u[0], u[1]],
        [u[3], u[2], -u[1], -u[0]],
    ])
    return _max(qt.mul(u[:, None, :], u[None, :, :]) - expected)


def algebra_norm_multiplicative(rng):
    a, b = qt.random_quaternion(rng, (2, N_SAMPLES))
    return _max(qt.norm(qt.mul(a, b)) - qt.norm(a) * qt.norm(b))


def algebra_conjugate_product(rng):
    a, b = qt.random_quaternion(rng, (2, N_SAMPLES))
    return _max(qt.mul(a, b) - qt.conj(qt.mul(qt.conj(b), qt.conj(a))))


def algebra_double_involution(rng):
    q = qt.random_quaternion(rng, N_SAMPLES)
    axis = qt.random_unit_pure(rng, N_SAMPLES)
    return _max(qt.involution(qt.involution(q, axis), axis) - q)


def algebra_conjugate_from_involutions(rng):
    q = qt.random_quaternion(rng, N_SAMPLES)
    return _max(qt.conj_from_involutions(q) - qt.conj(q))


def algebra_dual_homomorphism(rng):
    a, b = qt.random_quaternion(rng, (2, N_SAMPLES))
    return _max(qt.matrix_dual(qt.mul(a, b)) - qt.matrix_dual(a) @ qt.matrix_dual(b))


def algebra_polar_roundtrip(rng):
    q = qt.random_quaternion(rng, N_SAMPLES)
    return _max(qt.from_polar(qt.to_polar(q)) - q)


def algebra_rotation_norm(rng):
    q = qt.imag(qt.random_quaternion(rng, N_SAMPLES))
    out = qt.rotate(q, qt.random_unit_pure(rng, N_SAMPLES), rng.uniform(-np.pi, np.pi, N_SAMPLES))
    return max(_max(qt.norm(out) - qt.norm(q)), _max(qt.real(out)))


# -- augmentation ----------------------------------------------------------

def augmentation_inverse(rng):
    worst = 0.0
    for m in (1, 2, 5):
        a = ql.build_augmentation_matrix(m)
        worst = max(worst, _max(ql.qmatmul(a, 0.25 * ql.hermitian(a)) - ql.qeye(4 * m)))
    return worst


def augmentation_maps_components(rng):
    q = qt.random_quaternion(rng, (20, 3))
    a = ql.build_augmentation_matrix(3)
    return _max(ql.qmatvec(a, qt.from_real(ql.real_components(q))) - ql.augment(q))


def augmentation_embedding_homomorphism(rng):
    a = qt.random_quaternion(rng, (20, 3, 4))
    b = qt.random_quaternion(rng, (20, 4, 2))
    return _max(ql.real_embed(ql.qmatmul(a, b)) - ql.real_embed(a) @ ql.real_embed(b))


def augmentation_inverse_matrix(rng):
    a = qt.random_quaternion(rng, (3, 3)) + 3.0 * ql.qeye(3)
    return _max(ql.qmatmul(a, ql.qinverse(a)) - ql.qeye(3))


# -- hr calculus -----------------------------------------------------------

def hr_conjugate_derivative_of_identity(rng):
    q = qt.random_quaternion(rng, 1)
    d = hr.hr_derivative(lambda x: x[0], q, conjugate=True)
    return _max(d - np.array([-0.5, 0.0, 0.0, 0.0]))


def hr_fueter_regular(rng):
    q = qt.random_quaternion(rng, 1)
    # q_i - i q_r is annihilated by the Cauchy-Riemann-Fueter operator
    return hr.check_crf(lambda x: qt.from_real(x[0, 1]) - qt.I * x[0, 0], q)


def hr_qlms_gradient(rng):
    worst = 0.0
    for _ in range(100):
        z = qt.random_quaternion(rng, 2)
        w = qt.random_quaternion(rng, 8)
        y = qt.random_quaternion(rng)

        def cost(wv):
            e = y - ql.qdot(wv, ql.augment(z))
            return np.sum(e ** 2, axis=-1)

        num = hr.hr_derivative(cost, w, conjugate=True, vectorized=True)
        e = y - ql.qdot(w, ql.augment(z))
        closed = -0.5 * qt.mul(e, qt.conj(ql.augment(z)))
        worst = max(worst, _max(num - closed) / max(1.0, _max(closed)))
    return worst


def hr_product_rule(rng):
    q = qt.random_quaternion(rng, 1)
    a, b = qt.random_quaternion(rng, 2)
    f = lambda x: qt.mul(a, x[0]) + b
    g = lambda x: qt.mul(x[0], x[0])
    lhs = hr.hr_derivative(lambda x: qt.mul(f(x), g(x)), q)
    rhs = hr.product_rule_derivative(f, g, q, qt.ONE)
    return _max(lhs - rhs)


def hr_chain_rule(rng):
    q = qt.random_quaternion(rng, 1)
    g = lambda x: qt.from_real(np.sum(x[..., 0, :] ** 2, axis=-1))
    fr = np.sin
    chained = hr.chain_rule_real_inner(g, fr, q).d_q_conj
    direct = hr.hr_gradient(lambda x: qt.from_real(np.sin(np.sum(x[..., 0, :] ** 2, axis=-1))), q).d_q_conj
    return _max(chained - direct)


def hr_rotation_rule(rng):
    q = qt.random_quaternion(rng, 1)
    return hr.rotation_rule_check(lambda x: qt.mul(x[0], x[0]), q,
                                  qt.random_quaternion(rng), qt.I)


def hr_taylor_slope(rng):
    q = qt.random_quaternion(rng, 1)
    dq = qt.random_quaternion(rng, 1)
    slope, _ = hr.taylor_remainder_slope(lambda x: qt.mul3(x[0], x[0], x[0]), q, dq)
    return abs(slope - 2.0)


def hr_jacobian_consistency(rng):
    q = qt.random_quaternion(rng, 2)
    dq = 1e-3 * qt.random_quaternion(rng, 2)
    f = lambda x: qt.mul(x[..., 0:1, :], x[..., 1:2, :])
    jac = hr.augmented_jacobian(f, q, vectorized=True)
    # the product is bilinear, so the central difference is exact
    diff = ql.augment(f(q + dq)) - ql.augment(f(q - dq))
    return _max(diff - 2.0 * ql.qmatvec(jac, ql.augment(dq))) / _max(dq)


# -- filters ---------------------------------------------------------------

def _random_model(rng, n=2, p=1):
    F = ql.augment_matrix(0.5 * qt.random_quaternion(rng, (n, n)))
    H = ql.augment_matrix(qt.random_quaternion(rng, (p, n)))
    cv = rng.standard_normal((4 * n, 4 * n))
    cw = rng.standard_normal((4 * p, 4 * p))
    sv = ql.augmented_covariance(cv @ cv.T / (4 * n) + 0.1 * np.eye(4 * n))
    sw = ql.augmented_covariance(cw @ cw.T / (4 * p) + 0.1 * np.eye(4 * p))
    return fl.StateSpaceModel(F, H, sv, sw)


def filters_gain_forms(rng):
    model = _random_model(rng)
    m_prior = ql.symmetrize(model.Sigma_v + ql.qeye(8))
    gain = fl.kalman_gain(m_prior, model.H, model.Sigma_w)
    m_post = fl.information_update(m_prior, model.H, model.Sigma_w)
    info_gain = ql.qmatmul(ql.qmatmul(m_post, ql.hermitian(model.H)), ql.qinverse(model.Sigma_w))
    return _max(gain - info_gain)


def filters_riccati_fixed_point(rng):
    model = _random_model(rng)
    res = fl.riccati_fixed_point(model)
    return res.residual


def filters_riccati_scalar(rng):
    model = fl.augmented_model(qt.from_real(np.eye(1)), qt.from_real(np.eye(1)),
                               np.eye(4), np.eye(4))
    res = fl.riccati_fixed_point(model)
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    # the posterior variance of each real component solves m = (m + 1) / (m + 2)
    return abs(ql.trace_real(res.M) / 16.0 - golden)


def filters_qlms_stability_bound(rng):
    z = qt.random_quaternion(rng, (200, 2))
    rho, stable = fl.qlms_stability(z, 1.9 / ql.spectral_radius(fl.regressor_covariance(z)))
    return 0.0 if stable else 1.0


# -- fusion ----------------------------------------------------------------

def fusion_metropolis_rows(rng):
    net = fusion.random_connected_network(12, 20, rng)
    return max(abs(math.fsum(row) - 1.0) for row in net.weights)


def fusion_isotropic_reduction(rng):
    est = [qt.random_quaternion(rng, 4) for _ in range(3)]
    w = rng.uniform(0.5, 2.0, 3)
    w = w / w.sum()
    covs = [ql.qeye(4) / wl for wl in w]
    return _max(fusion.fuse_covariance_weighted(est, covs) - fusion.fuse_weighted(np.stack(est), w))


# -- qnn -------------------------------------------------------------------

def qnn_output_update_direction(rng):
    net = qnn.QnnNetwork.init([3, 2], seed=int(rng.integers(2 ** 31)), activation="identity", gamma=1.0)
    x = qt.random_quaternion(rng, 3)
    d = qt.random_quaternion(rng, 2)
    stepped, _ = qnn.train_step(net, x, d)
    rule = stepped.layers[0].W - net.layers[0].W
    grad = qnn.parameter_gradient(net, x, d)[:6].reshape(2, 3, 4)
    direction = -grad / np.linalg.norm(grad)
    return _max(rule / np.linalg.norm(rule) - direction)


def qnn_split_commutes(rng):
    q = qt.random_quaternion(rng, N_SAMPLES)
    worst = 0.0
    for z in (1, 2, 3):
        worst = max(worst, _max(qnn.split_tanh(ql.involute(q, z)) - ql.involute(qnn.split_tanh(q), z)))
    return worst


# -- lqr -------------------------------------------------------------------

def _random_lqr(rng, n=2, p=1, N=12):
    F = ql.augment_matrix(0.6 * qt.random_quaternion(rng, (n, n)))
    B = ql.augment_matrix(qt.random_quaternion(rng, (n, p)))
    Q = ql.augmented_covariance(np.eye(4 * n))
    R = ql.augmented_covariance(np.eye(4 * p))
    T = ql.augmented_covariance(2.0 * np.eye(4 * n))
    return lqr.LqrProblem(F, B, Q, R, T, N)


def lqr_cost_certificate(rng):
    prob = _random_lqr(rng)
    sol = lqr.lqr_backward(prob)
    x0 = ql.augment(qt.random_quaternion(rng, 2))
    traj = lqr.simulate_closed_loop(prob, sol, x0)
    return abs(traj.cost - lqr.quadratic(x0, sol.P[0])) / traj.cost


def lqr_input_forms(rng):
    prob = _random_lqr(rng)
    sol = lqr.lqr_backward(prob)
    x = ql.augment(qt.random_quaternion(rng, 2))
    return max(_max(ql.qmatvec(sol.G[n], x) - lqr.lqr_input(prob, sol, n, x))
               for n in range(prob.N - 1))


def lqr_real_oracle(rng):
    prob = _random_lqr(rng)
    sol = lqr.lqr_backward(prob)
    emb = [ql.real_embed(m) for m in (prob.F, prob.B, prob.Q, prob.R, prob.T)]
    P_real = lqr.real_lqr_backward(*emb, prob.N)
    return max(_max(ql.real_embed(p) - pr) for p, pr in zip(sol.P, P_real))


SUITES = {
    "algebra": [
        ("product_table", algebra_product_table, 0.0),
        ("norm_multiplicative", algebra_norm_multiplicative, 1e-12),
        ("conjugate_product", algebra_conjugate_product, 1e-12),
        ("double_involution", algebra_double_involution, 1e-12),
        ("conjugate_from_involutions", algebra_conjugate_from_involutions, 1e-12),
        ("dual_homomorphism", algebra_dual_homomorphism, 1e-12),
        ("polar_roundtrip", algebra_polar_roundtrip, 1e-12),
        ("rotation_preserves_norm", algebra_rotation_norm, 1e-12),
    ],
    "augmentation": [
        ("inverse_is_quarter_hermitian", augmentation_inverse, 1e-12),
        ("maps_components", augmentation_maps_components, 1e-12),
        ("embedding_homomorphism", augmentation_embedding_homomorphism, 1e-11),
        ("matrix_inverse", augmentation_inverse_matrix, 1e-10),
    ],
    "hr": [
        ("dq_dqconj", hr_conjugate_derivative_of_identity, 1e-8),
        ("fueter_regular", hr_fueter_regular, 1e-8),
        ("qlms_gradient", hr_qlms_gradient, 1e-6),
        ("product_rule", hr_product_rule, 1e-5),
        ("rotation_rule", hr_rotation_rule, 1e-5),
        ("chain_rule", hr_chain_rule, 1e-5),
        ("taylor_remainder_slope_minus_two", hr_taylor_slope, 0.1),
        ("jacobian_central_difference", hr_jacobian_consistency, 1e-6),
    ],
    "filters": [
        ("gain_forms", filters_gain_forms, 1e-8),
        ("riccati_fixed_point", filters_riccati_fixed_point, 1e-10),
        ("riccati_scalar_golden", filters_riccati_scalar, 1e-9),
        ("qlms_stability_bound", filters_qlms_stability_bound, 0.0),
    ],
    "fusion": [
        ("metropolis_row_sums", fusion_metropolis_rows, 0.0),
        ("isotropic_reduction", fusion_isotropic_reduction, 1e-10),
    ],
    "qnn": [
        ("output_update_direction", qnn_output_update_direction, 1e-5),
        ("split_commutes_with_involutions", qnn_split_commutes, 0.0),
    ],
    "lqr": [
        ("cost_certificate", lqr_cost_certificate, 1e-6),
        ("input_forms", lqr_input_forms, 1e-8),
        ("real_oracle", lqr_real_oracle, 1e-8),
    ],
}


def run(seed=0, suites=None):
    """Run the named suites (all by default); never raises for a failing check."""
    results = []
    names = list(SUITES) if suites is None else suites
    for s_idx, suite in enumerate(names):
        for c_idx, (name, fn, limit) in enumerate(SUITES[suite]):
            rng = child_rng(seed, 100 * s_idx + c_idx)
            try:
                results.append(CheckResult(suite, name, float(fn(rng)), limit))
            except Exception as exc:  # report and continue
                results.append(CheckResult(suite, name, float("inf"), limit,
                                           f"{type(exc).__name__}: {exc}"))
    return results
