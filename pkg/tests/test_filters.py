import numpy as np
import pytest

from hrcalc import filters as fl
from hrcalc import linalg as ql
from hrcalc import quaternion as qt
from hrcalc.errors import DimensionError, DivergenceError

from oracles import batch_estimate, random_spd, real_linear_map


def close(a, b, tol):
    np.testing.assert_allclose(a, b, rtol=0, atol=tol)


# -- QLMS --------------------------------------------------------------------

def test_mmse_fit_recovers_plant(rng):
    w = qt.random_quaternion(rng, 8)
    z = qt.random_quaternion(rng, (50, 2))
    close(fl.wl_mmse_fit(z, fl.wl_output(w, z)), w, 1e-8)


def test_mmse_fit_of_conjugate(rng):
    z = qt.random_quaternion(rng, (30, 1))
    w = fl.wl_mmse_fit(z, qt.conj(z[:, 0]))
    # conj(q) = (q^i + q^j + q^k - q) / 2
    close(w, qt.from_real([-0.5, 0.5, 0.5, 0.5]), 1e-10)
    close(fl.wl_mmse_fit(z, np.zeros((30, 4))), 0.0, 0.0)


def test_qlms_step_by_hand():
    filt = fl.LmsFilter.zeros(1, 0.25)
    filt, err = fl.qlms_step(filt, qt.ONE[None], qt.ONE)
    close(err, qt.ONE, 0.0)
    close(filt.w, np.tile(0.25 * qt.ONE, (4, 1)), 0.0)
    assert filt.steps == 1


def test_qlms_exact_prediction_leaves_weights(rng):
    w = qt.random_quaternion(rng, 8)
    z = qt.random_quaternion(rng, 2)
    filt, err = fl.qlms_step(fl.LmsFilter(w, 0.1), z, fl.wl_output(w, z))
    close(err, 0.0, 1e-14)
    close(filt.w, w, 1e-14)


def test_qlms_update_is_negative_hr_gradient(rng):
    w = qt.random_quaternion(rng, 4)
    z = qt.random_quaternion(rng, 1)
    y = qt.random_quaternion(rng)
    gamma = 0.05
    new, err = fl.qlms_step(fl.LmsFilter(w, gamma), z, y)
    # cost |e|^2 has HR* gradient -1/2 e conj(z^a): the update is -2 gamma times it
    close(new.w - w, gamma * qt.mul(err, qt.conj(ql.augment(z))), 1e-14)


def test_qlms_rejects_bad_regressor(rng):
    with pytest.raises(DimensionError):
        fl.qlms_step(fl.LmsFilter.zeros(2, 0.1), qt.random_quaternion(rng, 3), qt.ONE)


def test_qlms_divergence_raises(rng):
    filt = fl.LmsFilter.zeros(1, 1e200)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError):
            for _ in range(10):
                filt, _ = fl.qlms_step(filt, 1e100 * qt.random_quaternion(rng, 1), qt.ONE)


def test_qlms_ensemble_weight_error_decays():
    errs = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        w_true = qt.random_quaternion(rng, 8, 0.5)
        z = qt.random_quaternion(rng, (200, 2))
        y = fl.wl_output(w_true, z) + 0.1 * qt.random_quaternion(rng, 200)
        w_opt = fl.wl_mmse_fit(z, y)
        filt = fl.LmsFilter.zeros(2, fl.suggest_gamma(z, 0.1))
        run = []
        for n in range(200):
            filt, _ = fl.qlms_step(filt, z[n], y[n])
            run.append(np.linalg.norm(filt.w - w_opt))
        errs.append(run)
    mean = np.mean(errs, axis=0)
    # strictly decreasing through the transient, then flat at the misadjustment floor
    assert np.all(np.diff(mean[:100:10]) < 0)
    assert mean[-20:].mean() < 0.1 * mean[0]


def test_stability_bound(rng):
    z = qt.random_quaternion(rng, (500, 2))
    rho, ok = fl.qlms_stability(z, 0.1)
    assert rho > 0 and ok == (0.1 * rho < 2)
    gamma = fl.suggest_gamma(z, 0.25)
    assert abs(gamma * rho - 0.5) < 1e-12
    assert not fl.qlms_stability(z, 2.5 / rho)[1]


def test_error_covariance_step_trivial_cases(rng):
    b = qt.random_quaternion(rng, (4, 4))
    sigma = ql.qmatmul(b, ql.hermitian(b))
    close(fl.qlms_error_covariance_step(sigma, 0.0, ql.qeye(4)), sigma, 1e-14)
    close(fl.qlms_error_covariance_step(sigma, 1.0, ql.qeye(4)), 0.0, 0.0)


def test_error_covariance_contraction(rng):
    b = qt.random_quaternion(rng, (4, 4))
    sigma = ql.qmatmul(b, ql.hermitian(b))
    basis, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    g = ql.augmented_covariance(basis @ np.diag(rng.uniform(1.0, 5.0, 4)) @ basis.T)
    ev = np.linalg.eigvalsh(ql.real_embed(g))
    # rho(I - gamma G) = 0.9 attained by the smallest eigenvalue
    gamma = 0.1 / ev.min()
    assert gamma * ev.max() < 1.9
    ratios = []
    for _ in range(200):
        new = fl.qlms_error_covariance_step(sigma, gamma, g)
        ratios.append(ql.trace_real(new) / ql.trace_real(sigma))
        sigma = new
    assert max(ratios[-50:]) <= 0.81 + 1e-9


def test_nonlinear_step_with_identity_is_half_step_qlms(rng):
    w = qt.random_quaternion(rng, 8)
    z = qt.random_quaternion(rng, 2)
    y = qt.random_quaternion(rng)
    elem, _ = fl.nonlinear_step(fl.NonlinearElement(w, 0.2), z, y)
    filt, _ = fl.qlms_step(fl.LmsFilter(w, 0.1), z, y)
    close(elem.w, filt.w, 1e-6)


def test_nonlinear_step_at_minimum(rng):
    w = qt.random_quaternion(rng, 4)
    z = qt.random_quaternion(rng, 1)
    elem, cost = fl.nonlinear_step(fl.NonlinearElement(w, 0.5, np.tanh), z, np.tanh(fl.wl_output(w, z)))
    assert cost < 1e-25
    close(elem.w, w, 1e-10)


def test_nonlinear_split_tanh_descends(rng):
    w_true = qt.random_quaternion(rng, 4, 0.5)
    elem = fl.NonlinearElement(np.zeros((4, 4)), 0.02, np.tanh)
    decreased = 0
    for _ in range(200):
        z = qt.random_quaternion(rng, 1)
        y = np.tanh(fl.wl_output(w_true, z))
        new, before = fl.nonlinear_step(elem, z, y)
        after = float(np.sum((np.tanh(fl.wl_output(new.w, z)) - y) ** 2))
        decreased += after < before
        elem = new
    assert decreased >= 190


# -- Kalman ------------------------------------------------------------------

def _scalar_model(f=1.0, h=1.0, v=0.0, w=1.0):
    """Scalar model with augmented-domain noise covariances ``v I`` and ``w I``."""
    return fl.StateSpaceModel(ql.augment_matrix(qt.from_real([[f]])), ql.augment_matrix(qt.from_real([[h]])),
                              v * ql.qeye(4), w * ql.qeye(4))


def test_predict_trivial_cases(rng):
    x = ql.augment(qt.random_quaternion(rng, 1))
    m = ql.qeye(4)
    model = _scalar_model(1.0, v=0.0)
    st = fl.kalman_predict(model, fl.KalmanState(x, m))
    close(st.x_hat, x, 0.0)
    close(st.M, m, 0.0)
    b = qt.random_quaternion(rng, (1, 1))
    zero = fl.augmented_model(np.zeros((1, 1, 4)), qt.from_real([[1.0]]), 0.3 * np.eye(4),
                              np.eye(4), B=b)
    u = ql.augment(qt.random_quaternion(rng, 1))
    st = fl.kalman_predict(zero, fl.KalmanState(x, m), u)
    close(st.x_hat, ql.qmatvec(zero.B, u), 1e-14)
    close(st.M, zero.Sigma_v, 1e-14)


def test_predict_scalar_by_hand():
    st = fl.kalman_predict(_scalar_model(0.5, v=0.1), fl.KalmanState(np.zeros((4, 4)), ql.qeye(4)))
    close(st.M, 0.35 * ql.qeye(4), 1e-15)


def test_update_without_information(rng):
    x = ql.augment(qt.random_quaternion(rng, 1))
    model = _scalar_model(h=0.0)
    st = fl.kalman_update(model, fl.KalmanState(x, ql.qeye(4)), ql.augment(qt.random_quaternion(rng, 1)))
    close(st.x_hat, x, 0.0)
    close(st.M, ql.qeye(4), 1e-12)


def test_update_scalar_by_hand():
    st = fl.kalman_update(_scalar_model(), fl.KalmanState(np.zeros((4, 4)), ql.qeye(4)),
                          ql.augment(qt.ONE[None]))
    close(st.G, 0.5 * ql.qeye(4), 1e-14)
    close(st.M, 0.5 * ql.qeye(4), 1e-14)
    close(st.x_hat, ql.augment(0.5 * qt.ONE[None]), 1e-14)


def _random_model(rng, n=2, p=1):
    F = ql.augment_matrix(0.5 * qt.random_quaternion(rng, (n, n)))
    H = ql.widely_linear_matrix(*qt.random_quaternion(rng, (4, p, n)))
    return fl.StateSpaceModel(F, H, ql.augmented_covariance(random_spd(rng, 4 * n)),
                              ql.augmented_covariance(random_spd(rng, 4 * p)))


def test_gain_forms_agree(rng):
    for _ in range(10):
        model = _random_model(rng)
        m = ql.augmented_covariance(random_spd(rng, 8))
        g = fl.kalman_gain(m, model.H, model.Sigma_w)
        post = fl.information_update(m, model.H, model.Sigma_w)
        # information form of the gain: M_post H^H Sigma_w^-1
        g_info = ql.qmatmul(ql.qmatmul(post, ql.hermitian(model.H)), ql.qinverse(model.Sigma_w))
        close(g, g_info, 1e-8)
        joseph = ql.qmatmul(ql.qeye(8) - ql.qmatmul(g, model.H), m)
        close(post, joseph, 1e-8)


def test_filter_matches_batch_least_squares(rng):
    f = qt.random_quaternion(rng, (1, 1))
    f = 0.95 * f / qt.norm(f[0, 0])
    hblocks = qt.random_quaternion(rng, (4, 1, 1))
    cw = random_spd(rng, 4)
    c0 = random_spd(rng, 4)
    model = fl.StateSpaceModel(ql.augment_matrix(f), ql.widely_linear_matrix(*hblocks),
                               np.zeros((4, 4, 4)), ql.augmented_covariance(cw))
    m0 = qt.random_quaternion(rng, 1)
    truth = m0 + ql.from_real_components(np.linalg.cholesky(c0) @ rng.standard_normal(4))
    state = fl.KalmanState(ql.augment(m0), ql.augmented_covariance(c0))
    ys = []
    for _ in range(10):
        truth = ql.qmatvec(f, truth)
        y = ql.deaugment(ql.qmatvec(model.H, ql.augment(truth)))
        y = y + ql.from_real_components(np.linalg.cholesky(cw) @ rng.standard_normal(4))
        ys.append(ql.real_components(y))
        state = fl.kalman_step(model, state, ql.augment(y))
    phi = real_linear_map(lambda v: ql.qmatvec(f, v), 1)
    obs = real_linear_map(lambda v: ql.deaugment(ql.qmatvec(model.H, ql.augment(v)), strict=False), 1)
    want = batch_estimate(phi, obs, ql.real_components(m0), c0, cw, ys)
    close(ql.real_components(ql.deaugment(state.x_hat)), want, 1e-6)


def test_lyapunov_cases(rng):
    b = qt.random_quaternion(rng, (3, 3))
    m = ql.qmatmul(b, ql.hermitian(b))
    mu = qt.random_unit(rng)
    rot = mu * np.eye(3)[:, :, None]
    close(ql.trace_real(fl.lyapunov_step(m, rot, np.zeros_like(m))), ql.trace_real(m), 1e-10)
    shift = ql.qeye(3)
    close(fl.lyapunov_step(m, np.zeros_like(m), shift), shift, 0.0)
    assert fl.lyapunov_step(np.eye(1), 0.5 * np.eye(1), np.zeros((1, 1)))[0, 0] == 0.25


def test_riccati_without_process_noise_tends_to_zero():
    model = fl.augmented_model(qt.from_real([[0.5]]), qt.from_real([[1.0]]), np.zeros((4, 4)), np.eye(4))
    res = fl.riccati_fixed_point(model, tol=1e-14)
    close(res.M, 0.0, 1e-12)


def test_riccati_scalar_fixed_point():
    q, r = 0.3, 0.7
    model = _scalar_model(1.0, 1.0, q, r)
    res = fl.riccati_fixed_point(model)
    # m = ((m + q)^-1 + 1/r)^-1  <=>  m^2 + q m - q r = 0
    m = (-q + np.sqrt(q * q + 4 * q * r)) / 2
    close(res.M, m * ql.qeye(4), 1e-10)
    assert res.residual < 1e-10
    assert res.closed_loop_radius < 1


def test_riccati_unique_from_different_seeds(rng):
    model = _random_model(rng)
    a = fl.riccati_fixed_point(model, ql.qeye(8), tol=1e-12)
    b = fl.riccati_fixed_point(model, ql.augmented_covariance(10 * random_spd(rng, 8)), tol=1e-12)
    close(a.M, b.M, 1e-11)


def test_riccati_warns_when_unstabilisable():
    model = fl.augmented_model(qt.from_real([[2.0]]), qt.from_real([[0.0]]), np.eye(4), np.eye(4))
    with pytest.warns(RuntimeWarning):
        fl.riccati_fixed_point(model, max_iter=5)


def test_extended_filter_on_linear_maps_equals_kalman(rng):
    model = _random_model(rng)
    F_base = qt.random_quaternion(rng, (2, 2), 0.5)
    H_base = qt.random_quaternion(rng, (1, 2))
    lin = fl.StateSpaceModel(ql.augment_matrix(F_base), ql.augment_matrix(H_base),
                             model.Sigma_v, model.Sigma_w)
    state = fl.KalmanState(ql.augment(qt.random_quaternion(rng, 2)), ql.qeye(8))
    y = ql.augment(qt.random_quaternion(rng, 1))
    kf = fl.kalman_step(lin, state, y)
    ek = fl.ekf_predict(lambda x: ql.qmatvec(F_base, x), state, lin.Sigma_v)
    ek = fl.ekf_update(lambda x: ql.qmatvec(H_base, x), ek, y, lin.Sigma_w)
    close(ek.x_hat, kf.x_hat, 1e-7)
    close(ek.M, kf.M, 1e-7)
