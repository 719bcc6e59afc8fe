"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the verdict lines next to
the test names.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from hrcalc import cli
from hrcalc import filters as fl
from hrcalc import fusion
from hrcalc import hr
from hrcalc import linalg as ql
from hrcalc import lqr
from hrcalc import qnn
from hrcalc import quaternion as qt
from hrcalc.experiments import bearings, flight, network, three_phase
from hrcalc.experiments.common import child_rng

from cli_configs import SMALL_CONFIGS
from oracles import random_spd


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line for a criterion, then assert every check."""

    def report(number, title, checks, elapsed, limit=None):
        timed = limit is None or elapsed < limit
        passed = all(ok for ok, _ in checks) and timed
        details = "; ".join(text for _, text in checks)
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        with capsys.disabled():
            print(f"\n{'PASS' if passed else 'FAIL'} criterion {number}: {title}: {details}; "
                  f"{elapsed:.1f} s{budget}")
        for ok, text in checks:
            assert ok, text
        assert timed, f"took {elapsed:.1f} s, limit {limit} s"

    return report


def _max(x):
    return float(np.max(np.abs(x)))


# -- 1 ------------------------------------------------------------------------

def test_criterion_1_algebra(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    checks = []
    table = {
        ("I", "I"): -qt.ONE, ("J", "J"): -qt.ONE, ("K", "K"): -qt.ONE,
        ("I", "J"): qt.K, ("J", "K"): qt.I, ("K", "I"): qt.J,
        ("J", "I"): -qt.K, ("K", "J"): -qt.I, ("I", "K"): -qt.J,
    }
    units = {"I": qt.I, "J": qt.J, "K": qt.K}
    exact = all(np.array_equal(qt.mul(units[a], units[b]), v) for (a, b), v in table.items())
    exact &= np.array_equal(qt.mul3(qt.I, qt.J, qt.K), -qt.ONE)
    checks.append((exact, f"product table exact={exact}"))
    a, b = qt.random_quaternion(rng, (2, 1000))
    res = _max(qt.norm(qt.mul(a, b)) - qt.norm(a) * qt.norm(b))
    checks.append((res < 1e-12, f"norm product {res:.1e}"))
    res = _max(qt.mul(a, b) - qt.conj(qt.mul(qt.conj(b), qt.conj(a))))
    checks.append((res < 1e-12, f"conjugate of product {res:.1e}"))
    worst = 0.0
    for axis in (qt.I, qt.J, qt.K, qt.random_unit_pure(rng)):
        worst = max(worst, _max(qt.involution(qt.involution(a, axis), axis) - a))
        worst = max(worst, _max(qt.involution(qt.mul(a, b), axis)
                                - qt.mul(qt.involution(a, axis), qt.involution(b, axis))))
    checks.append((worst < 1e-12, f"double involution {worst:.1e}"))
    res = _max(qt.conj_from_involutions(a) - qt.conj(a))
    checks.append((res < 1e-12, f"conjugate from involutions {res:.1e}"))
    verdict(1, "algebra", checks, time.perf_counter() - start, 1.0)


# -- 2 ------------------------------------------------------------------------

def test_criterion_2_augmentation(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    inv = max(_max(ql.qmatmul(A, 0.25 * ql.hermitian(A)) - ql.qeye(4 * m))
              for m in (1, 2, 5) for A in [ql.build_augmentation_matrix(m)])
    hom = 0.0
    for _ in range(200):
        x, y = qt.random_quaternion(rng, (2, 3, 3))
        hom = max(hom, _max(ql.real_embed(ql.qmatmul(x, y)) - ql.real_embed(x) @ ql.real_embed(y)))
    checks = [(inv < 1e-12, f"A (A^H / 4) = I residual {inv:.1e}"),
              (hom < 1e-11, f"embedding homomorphism {hom:.1e} on 200 pairs")]
    verdict(2, "augmentation", checks, time.perf_counter() - start, 5.0)


# -- 3 ------------------------------------------------------------------------

def test_criterion_3_gradients(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        z = qt.random_quaternion(rng, 3)
        w = qt.random_quaternion(rng, 12)
        y = qt.random_quaternion(rng)

        def cost(wv):
            return np.sum((y - ql.qdot(wv, ql.augment(z))) ** 2, axis=-1)

        numeric = hr.hr_derivative(cost, w, conjugate=True, vectorized=True)
        err = y - ql.qdot(w, ql.augment(z))
        closed = -0.5 * qt.mul(err, qt.conj(ql.augment(z)))
        worst = max(worst, _max(numeric - closed) / _max(closed))
    checks = [(worst < 1e-6, f"QLMS gradient rel {worst:.1e} over 100")]

    q = qt.random_quaternion(rng, (50, 1))
    dq = max(_max(hr.hr_derivative(lambda x: x[..., 0, :], p, conjugate=True) + 0.5 * qt.ONE)
             for p in q)
    checks.append((dq < 1e-8, f"dq/dq* + 1/2 = {dq:.1e}"))

    a, b, c = qt.random_quaternion(rng, 3)
    f = lambda x: qt.mul(a, x[0]) + b
    g = lambda x: qt.mul3(x[0], c, x[0])
    prod = max(_max(hr.hr_derivative(lambda x: qt.mul(f(x), g(x)), q[0], xi, cj)
                    - hr.product_rule_derivative(f, g, q[0], xi, conjugate=cj))
               for xi in qt.UNITS for cj in (False, True))
    rot = hr.rotation_rule_check(lambda x: qt.mul(x[0], x[0]), q[0], qt.random_unit_pure(rng), qt.J)
    outer = lambda x: np.sum(x ** 2, axis=(-2, -1))
    chained = hr.chain_rule_real_inner(outer, lambda u: u ** 2, q[1])
    chain = _max(chained.d_q_conj - np.sum(q[1] ** 2) * q[1])
    checks.append((max(prod, rot, chain) < 1e-5,
                   f"product {prod:.1e}, rotation {rot:.1e}, chain {chain:.1e}"))
    x, dx = qt.random_quaternion(rng, (2, 1))
    slope, _ = hr.taylor_remainder_slope(lambda v: qt.mul3(v[0], v[0], v[0]), x, dx)
    checks.append((abs(slope - 2.0) <= 0.1, f"Taylor remainder slope {slope:.3f}"))
    verdict(3, "gradients", checks, time.perf_counter() - start, 10.0)


# -- 4 ------------------------------------------------------------------------

def _kalman_model(rng):
    """Two-state model with a widely linear observation; also returns the real noise covariances."""
    F = qt.random_quaternion(rng, (2, 2))
    F = 0.9 * F / ql.spectral_radius(F)
    H = ql.widely_linear_matrix(*qt.random_quaternion(rng, (4, 1, 2)))
    cv, cw = random_spd(rng, 8), random_spd(rng, 4)
    model = fl.StateSpaceModel(ql.augment_matrix(F), H, ql.augmented_covariance(cv),
                               ql.augmented_covariance(cw))
    return model, cv, cw


def _batch_check(rng):
    """Filter against real generalised least squares on a 1-state noiseless-dynamics run."""
    f = qt.random_quaternion(rng, (1, 1))
    f = 0.95 * f / qt.norm(f[0, 0])
    hblocks = qt.random_quaternion(rng, (4, 1, 1))
    cw, c0 = random_spd(rng, 4), random_spd(rng, 4)
    model = fl.StateSpaceModel(ql.augment_matrix(f), ql.widely_linear_matrix(*hblocks),
                               np.zeros((4, 4, 4)), ql.augmented_covariance(cw))
    m0 = qt.random_quaternion(rng, 1)
    truth = m0 + ql.from_real_components(np.linalg.cholesky(c0) @ rng.standard_normal(4))
    state = fl.KalmanState(ql.augment(m0), ql.augmented_covariance(c0))
    # real matrices of the maps acting on component vectors
    phi = np.stack([ql.real_components(ql.qmatvec(f, ql.from_real_components(e))) for e in np.eye(4)], 1)
    obs = np.stack([ql.real_components(ql.deaugment(ql.qmatvec(model.H, ql.augment(
        ql.from_real_components(e))), strict=False)) for e in np.eye(4)], 1)
    info = np.linalg.inv(c0)
    rhs = info @ ql.real_components(m0)
    wi = np.linalg.inv(cw)
    power = np.eye(4)
    for _ in range(10):
        truth = ql.qmatvec(f, truth)
        y = ql.deaugment(ql.qmatvec(model.H, ql.augment(truth)))
        y = y + ql.from_real_components(np.linalg.cholesky(cw) @ rng.standard_normal(4))
        state = fl.kalman_step(model, state, ql.augment(y))
        power = phi @ power
        a = obs @ power
        info += a.T @ wi @ a
        rhs += a.T @ wi @ ql.real_components(y)
    batch = power @ np.linalg.solve(info, rhs)
    return _max(ql.real_components(ql.deaugment(state.x_hat)) - batch)


def _monte_carlo_check(rng, runs=2000, steps=50):
    model, cv, cw = _kalman_model(rng)
    c0 = random_spd(rng, 8)
    state = fl.KalmanState(np.zeros((8, 4)), ql.augmented_covariance(c0))
    gains, covs = [], []
    for _ in range(steps):
        state = fl.kalman_update(model, fl.kalman_predict(model, state), np.zeros((4, 4)))
        gains.append(state.G)
        covs.append(state.M)
    cv, cw = np.linalg.cholesky(cv), np.linalg.cholesky(cw)
    truth = ql.from_real_components(rng.standard_normal((runs, 8)) @ np.linalg.cholesky(c0).T)
    x = np.zeros((runs, 8, 4))
    for t in range(steps):
        truth = ql.deaugment(ql.qmatvec(model.F, ql.augment(truth)), strict=False)
        truth = truth + ql.from_real_components(rng.standard_normal((runs, 8)) @ cv.T)
        y = ql.deaugment(ql.qmatvec(model.H, ql.augment(truth)), strict=False)
        y = y + ql.from_real_components(rng.standard_normal((runs, 4)) @ cw.T)
        st = fl.kalman_update_fixed(model, fl.KalmanState(ql.qmatvec(model.F, x), None),
                                    ql.augment(y), gains[t], covs[t])
        x = st.x_hat
    err = ql.real_components(ql.deaugment(x, strict=False) - truth)
    emp = ql.augmented_covariance(err.T @ err / runs)
    m = covs[-1]
    diag = np.sqrt(np.abs(np.einsum("ii->i", m[..., 0])))
    scale = diag[:, None] * diag[None, :]
    return float(np.max(qt.norm(emp - m) / scale))


def test_criterion_4_kalman(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    gains = 0.0
    for _ in range(20):
        model = _kalman_model(rng)[0]
        m = ql.augmented_covariance(random_spd(rng, 8))
        g = fl.kalman_gain(m, model.H, model.Sigma_w)
        post = fl.information_update(m, model.H, model.Sigma_w)
        g_info = ql.qmatmul(ql.qmatmul(post, ql.hermitian(model.H)), ql.qinverse(model.Sigma_w))
        gains = max(gains, _max(g - g_info))
    batch = _batch_check(rng)
    mc = _monte_carlo_check(rng)
    residual, rho = 0.0, 0.0
    for _ in range(5):
        res = fl.riccati_fixed_point(_kalman_model(rng)[0])
        residual, rho = max(residual, res.residual), max(rho, res.closed_loop_radius)
    checks = [(gains < 1e-8, f"gain forms {gains:.1e}"),
              (batch < 1e-6, f"batch least squares {batch:.1e}"),
              (mc < 0.1, f"Monte-Carlo covariance worst {100 * mc:.1f}% of scale"),
              (residual < 1e-10 and rho < 1.0, f"Riccati residual {residual:.1e}, rho {rho:.3f}")]
    verdict(4, "Kalman", checks, time.perf_counter() - start, 60.0)


# -- 5 ------------------------------------------------------------------------

def _lqr_problem(rng, n=2, p=2, N=15):
    F = qt.random_quaternion(rng, (n, n))
    F = 1.1 * F / ql.spectral_radius(F)
    return lqr.LqrProblem(ql.augment_matrix(F), ql.augment_matrix(qt.random_quaternion(rng, (n, p))),
                          ql.augmented_covariance(random_spd(rng, 4 * n)),
                          ql.augmented_covariance(random_spd(rng, 4 * p)),
                          ql.augmented_covariance(random_spd(rng, 4 * n)), N)


def _real_riccati(F, B, Q, R, T, N):
    P = [T]
    for _ in range(N - 1):
        nxt = P[0]
        gain = np.linalg.solve(R + B.T @ nxt @ B, B.T @ nxt @ F)
        P.insert(0, Q + F.T @ nxt @ F - F.T @ nxt @ B @ gain)
    return P


def test_criterion_5_lqr(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    cert, forms, oracle = 0.0, 0.0, 0.0
    for _ in range(10):
        prob = _lqr_problem(rng)
        sol = lqr.lqr_backward(prob)
        x0 = ql.augment(qt.random_quaternion(rng, 2))
        traj = lqr.simulate_closed_loop(prob, sol, x0)
        cert = max(cert, abs(traj.cost - lqr.quadratic(x0, sol.P[0])) / traj.cost)
        for n in range(prob.N - 1):
            forms = max(forms, _max(ql.qmatvec(sol.G[n], x0) - lqr.lqr_input(prob, sol, n, x0)))
        real = _real_riccati(*[ql.real_embed(m) for m in (prob.F, prob.B, prob.Q, prob.R, prob.T)],
                             prob.N)
        oracle = max(oracle, max(_max(ql.real_embed(p) - r) / _max(r) for p, r in zip(sol.P, real)))
    prob = _lqr_problem(rng)
    sol = lqr.lqr_backward(prob)
    x0 = ql.augment(qt.random_quaternion(rng, 2))
    best = lqr.simulate_closed_loop(prob, sol, x0).cost
    lowered = 0
    for _ in range(100):
        offsets = np.zeros((prob.N - 1, 8, 4))
        offsets[rng.integers(prob.N - 1)] = ql.augment(1e-2 * qt.random_quaternion(rng, 2))
        lowered += lqr.simulate_closed_loop(prob, sol, x0, input_offsets=offsets).cost < best
    params = flight.FlightParams(duration_s=40.0)
    rho = flight.closed_loop_radius(params)
    norms = np.linalg.norm(flight.run(params, seed=5).states[:, 0], axis=-1)
    peaks = norms[:1000].reshape(4, 250).max(axis=1)
    decays = bool(np.all(np.diff(peaks) < 0) and peaks[-1] < 1e-2 * norms[0])
    checks = [(cert < 1e-6, f"cost certificate rel {cert:.1e}"),
              (forms < 1e-8, f"gain vs input form {forms:.1e}"),
              (oracle < 1e-8, f"real Riccati rel {oracle:.1e}"),
              (lowered == 0, f"{lowered}/100 perturbations lowered the cost"),
              (rho < 1.0 and decays, f"flight rho {rho:.3f}, 10 s peaks {np.round(peaks, 4).tolist()}")]
    verdict(5, "LQR", checks, time.perf_counter() - start, 30.0)


# -- 6 ------------------------------------------------------------------------

def test_criterion_6_fusion(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    sums_exact = True
    for n in range(2, 30):
        net = fusion.random_connected_network(n, min(n * (n - 1) // 2, 2 * n), rng, False)
        sums_exact &= all(math.fsum(row) == 1.0 for row in net.weights)
    seeds = range(200)
    params = network.RingParams()
    coop = network.ring_mse(params, seeds, diffusion=True)
    alone = network.ring_mse(params, seeds, diffusion=False)
    wins = int(np.sum(coop < alone))
    p = network.sign_test_pvalue(wins, len(seeds))
    fed_wins = 0
    for s in range(50):
        res = network.federated(network.FederatedParams(), s)
        fed_wins += res.center_error < res.isolated_errors.min()
    checks = [(sums_exact, f"weight rows sum to 1 exactly={sums_exact}"),
              (coop.mean() < alone.mean(), f"ring MSE {coop.mean():.4f} vs {alone.mean():.4f}"),
              (p < 0.01, f"sign test {wins}/200 p={p:.1e}"),
              (fed_wins == 50, f"federated center wins {fed_wins}/50")]
    verdict(6, "fusion and distributed", checks, time.perf_counter() - start, 120.0)


# -- 7 ------------------------------------------------------------------------

def test_criterion_7_qnn(verdict):
    start = time.perf_counter()
    hits = 0
    for seed in range(100):
        x, d = qnn.linear_teacher_task(2, 1, 20, child_rng(seed, 0))
        net = qnn.QnnNetwork.init([2, 1], seed=seed, activation="identity", gamma=1e-3)
        j0 = qnn.cost(net, x, d)
        for _ in range(200):
            net, _ = qnn.train_step(net, x, d)
        hits += qnn.cost(net, x, d) <= 0.1 * j0
    rng = np.random.default_rng(7)
    direction = 0.0
    for _ in range(20):
        net = qnn.QnnNetwork.init([3, 2], seed=int(rng.integers(2 ** 31)), activation="identity",
                                  gamma=1.0)
        x, d = qt.random_quaternion(rng, 3), qt.random_quaternion(rng, 2)
        rule = qnn.train_step(net, x, d)[0].layers[0].W - net.layers[0].W
        grad = qnn.parameter_gradient(net, x, d)[:6].reshape(2, 3, 4)
        direction = max(direction, _max(rule / np.linalg.norm(rule) + grad / np.linalg.norm(grad)))
    descending = 0
    for seed in range(20):
        x, d = qnn.tanh_teacher_task(20, child_rng(seed, 0))
        net = qnn.QnnNetwork.init([2, 2, 1], seed=seed, gamma=1e-3)
        costs = []
        for _ in range(1000):
            net, j, _ = qnn.numeric_grad_train_step(net, x, d)
            costs.append(j)
        descending += bool(np.all(np.diff(costs[100:]) < 0))
    checks = [(hits >= 95, f"linear toy 90% reduction in {hits}/100"),
              (direction < 1e-5, f"output update direction {direction:.1e}"),
              (descending == 20, f"numeric trainer strictly descending {descending}/20")]
    verdict(7, "QNN", checks, time.perf_counter() - start, 120.0)


# -- 8 ------------------------------------------------------------------------

def test_criterion_8_three_phase(verdict):
    start = time.perf_counter()
    settle = 500  # samples, 0.5 s at the default step
    balanced = three_phase.run(three_phase.ThreePhaseParams())
    f_err = _max(balanced.f_hat[settle:] - 50.0)
    q_minus = float(balanced.q_minus_norm[settle:].max())
    fault_params = three_phase.ThreePhaseParams(steps=3000, fault_step=1500)
    fault = three_phase.run(fault_params)
    # the frequency bound holds at every sample after the fault; the unbalance
    # is read once the sequence estimates have had 0.1 s to move
    fault_err = _max(fault.f_hat[fault_params.fault_step:] - 50.0)
    rise = float(fault.q_minus_norm[fault_params.fault_step + 100:].min())
    noisy = replace(three_phase.ThreePhaseParams(), noise_std=0.01, steps=1000)
    bias = float(np.mean(three_phase.bias_study(noisy, range(50), settle)))
    checks = [(f_err < 0.01, f"balanced |f err| {f_err:.1e} Hz"),
              (q_minus < 1e-6, f"balanced |q-| {q_minus:.1e}"),
              (rise > 0.05 and fault_err < 0.05, f"fault |q-| {rise:.3f}, |f err| {fault_err:.4f} Hz"),
              (abs(bias) < 0.005, f"bias over 50 seeds {bias:.1e} Hz")]
    verdict(8, "three-phase", checks, time.perf_counter() - start, 60.0)


# -- 9 ------------------------------------------------------------------------

def test_criterion_9_bearings(verdict):
    start = time.perf_counter()
    params = bearings.BearingsParams()
    wins = 0
    for seed in range(50):
        with_diffusion, without = bearings.compare(params, seed)
        wins += with_diffusion < without
    exact = bearings.run(replace(params, noiseless=True), seed=0).errors.max()
    checks = [(wins == 50, f"degree-1 agent better with diffusion {wins}/50"),
              (exact < 1e-6, f"noiseless error {exact:.1e}")]
    verdict(9, "bearings-only tracking", checks, time.perf_counter() - start, 120.0)


# -- 10 -----------------------------------------------------------------------

def test_criterion_10_determinism(verdict, tmp_path):
    start = time.perf_counter()
    differing = []
    for command, config in SMALL_CONFIGS.items():
        cfg = tmp_path / f"{command}.cfg"
        cfg.write_text(config)
        outputs = []
        for run in range(2):
            out = tmp_path / f"{command}-{run}.csv"
            assert cli.run([command, "--config", str(cfg), "--seed", "11", "--out", str(out)]) == 0
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1]:
            differing.append(command)
    checks = [(not differing, f"{len(SMALL_CONFIGS) - len(differing)}/{len(SMALL_CONFIGS)} "
                              f"commands byte-identical")]
    verdict(10, "determinism", checks, time.perf_counter() - start)
