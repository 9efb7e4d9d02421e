import math

import numpy as np
import pytest
from scipy.integrate import quad

from oracle_transfer.algorithms import AlgorithmConfig, make_algorithm
from oracle_transfer.core import PiecewiseMaxFunction, sample_ball
from oracle_transfer.errors import (BadArgs, EtaTooLarge, Exact1dInHighDim,
                                    ModelEmpty)
from oracle_transfer.oracles import (ApproxFirstOrderOracle, NoiseModel,
                                     Quadratic)
from oracle_transfer.transfer_smooth import (SmoothingEstimator,
                                             SmoothTransferState,
                                             certified_smoothness,
                                             run_wrapped_smooth,
                                             sample_unit_ball, smooth_step,
                                             smoothed_estimate,
                                             smoothed_extension_derivative_1d,
                                             smoothed_extension_value_1d,
                                             smoothed_gradient, smoothed_value)

MC = SmoothingEstimator(mode="monte-carlo", n_samples=4096, seed=1, antithetic=True)
EX1 = SmoothingEstimator(mode="exact-1d")


def abs_model():
    F = PiecewiseMaxFunction(1)
    F.append_piece([1.0], 0.0, 1)
    F.append_piece([-1.0], 0.0, 2)
    return F


# --- uniform ball sampling ---------------------------------------------------


def test_unit_ball_support():
    rng = np.random.default_rng(0)
    for d in (1, 2, 5):
        for _ in range(50):
            assert np.linalg.norm(sample_unit_ball(d, rng)) <= 1.0


def test_unit_ball_symmetry_and_radial_moment():
    rng = np.random.default_rng(1)
    d = 2
    U = np.stack([sample_unit_ball(d, rng) for _ in range(100_000)])
    # coordinate means vanish by symmetry (3 sigma band)
    sigma = U.std(axis=0) / math.sqrt(len(U))
    assert np.all(np.abs(U.mean(axis=0)) <= 3 * sigma)
    # E||U||^2 from the radial density d * r^(d-1) on [0, 1]
    expected, _ = quad(lambda r: (r ** 2) * d * r ** (d - 1), 0.0, 1.0)
    assert expected == pytest.approx(d / (d + 2))
    sq = (U ** 2).sum(axis=1)
    assert abs(sq.mean() - expected) <= 3 * sq.std() / math.sqrt(len(U))


# --- smoothed value / gradient ------------------------------------------------


def test_affine_smoothing_is_exact():
    F = PiecewiseMaxFunction(2)
    F.append_piece([2.0, 0.0], 1.0, 1)
    val = smoothed_value(F, [0.5, 0.0], 0.3, MC)
    assert val == pytest.approx(2.0, abs=1e-12)
    grad = smoothed_gradient(F, [0.5, 0.0], 0.3, MC)
    assert np.array_equal(grad, [2.0, 0.0])  # mean of identical slopes


def test_exact_1d_abs_at_kink():
    # independent oracle: integral of |z| over [-r, r] divided by 2r gives r/2
    r = 0.5
    expected = quad(lambda z: abs(z), -r, r, points=[0.0])[0] / (2 * r)
    assert expected == pytest.approx(0.25)
    assert smoothed_value(abs_model(), [0.0], r, EX1) == pytest.approx(expected, abs=1e-15)
    assert smoothed_gradient(abs_model(), [0.0], r, EX1)[0] == 0.0


def test_exact_1d_gradient_segment_weighting():
    # slopes -1 on [-0.3, 0) and +1 on (0, 0.7]: (0.7 - 0.3) / 1.0
    assert smoothed_gradient(abs_model(), [0.2], 0.5, EX1)[0] == pytest.approx(0.4)


def test_exact_1d_matches_quadrature_on_random_models():
    rng = np.random.default_rng(2)
    for _ in range(20):
        F = PiecewiseMaxFunction(1)
        for j in range(1, 6):
            F.append_piece([rng.normal()], rng.normal(), j)
        x, r = rng.uniform(-0.5, 0.5), rng.uniform(0.05, 0.6)
        val = smoothed_value(F, [x], r, EX1)
        ref = quad(lambda z: F.value([z]), x - r, x + r, limit=200)[0] / (2 * r)
        assert val == pytest.approx(ref, abs=1e-9)


def test_monte_carlo_consistent_with_exact_1d():
    rng = np.random.default_rng(3)
    for trial in range(10):
        F = PiecewiseMaxFunction(1)
        for j in range(1, 5):
            F.append_piece([rng.normal()], rng.normal(), j)
        x, r = rng.uniform(-0.4, 0.4), rng.uniform(0.1, 0.5)
        exact = smoothed_estimate(F, [x], r, EX1)
        est = smoothed_estimate(F, [x], r, MC, index=trial)
        assert abs(est.value - exact.value) <= 3 * est.value_stderr + 1e-12
        tol = 3 * est.gradient_stderr + 1e-12
        assert np.all(np.abs(est.gradient - exact.gradient) <= tol)


def test_exact_1d_rejected_in_higher_dimension():
    F = PiecewiseMaxFunction(2)
    F.append_piece([1.0, 0.0], 0.0, 1)
    with pytest.raises(Exact1dInHighDim):
        smoothed_value(F, [0.0, 0.0], 0.2, EX1)


def test_smoothing_empty_model_raises():
    with pytest.raises(ModelEmpty):
        smoothed_value(PiecewiseMaxFunction(1), [0.0], 0.1, MC)


def test_common_random_numbers_are_stable_across_model_growth():
    rng = np.random.default_rng(4)
    F = PiecewiseMaxFunction(2)
    for j in range(1, 5):
        F.append_piece(rng.normal(size=2), rng.normal(), j)
    before = smoothed_estimate(F, [0.1, -0.2], 0.3, MC, index=2)
    F.append_piece(rng.normal(size=2) * 0.1, -100.0, 5)  # dominated everywhere
    after = smoothed_estimate(F, [0.1, -0.2], 0.3, MC, index=2)
    assert before.value == after.value
    assert np.array_equal(before.gradient, after.gradient)


# --- the online smooth transfer ------------------------------------------------


def test_smooth_step_shift_arithmetic_and_affine_exactness():
    est = SmoothingEstimator(n_samples=4096, seed=0)
    state = SmoothTransferState(2, M=5.0, R=1.0, eta=0.01, alpha=1.0, T=1,
                                estimator=est)
    f_hat, g_hat = smooth_step(state, [0.0, 0.0], 3.0, [1.0, 0.0])
    # schedule shift at t=1 is 4*eta + alpha*r^2 + 2*eta = 0.07
    assert f_hat == pytest.approx(3.0 - 0.07, abs=1e-12)
    assert np.array_equal(g_hat, [1.0, 0.0])


def test_smooth_step_tiny_eta_degenerates_to_evaluation():
    eta = 1e-12
    est = SmoothingEstimator(n_samples=512, seed=0)
    state = SmoothTransferState(1, M=2.0, R=1.0, eta=eta, alpha=1.0, T=3,
                                estimator=est)
    f_hat, _ = smooth_step(state, [0.2], 1.0, [0.5])
    assert f_hat == pytest.approx(state.model.value([0.2]), abs=1e-9)


def test_smooth_step_kink_matches_hand_breakpoint_integration():
    eta, alpha = 0.04, 1.0
    est = EX1
    state = SmoothTransferState(1, M=2.0, R=1.0, eta=eta, alpha=alpha, T=2,
                                estimator=est)
    r = state.r  # 0.2
    smooth_step(state, [-0.5], 0.5, [-1.0])
    f2, g2 = smooth_step(state, [0.5], 0.5, [1.0])
    slopes = state.model.slopes[:, 0]
    intercepts = state.model.intercepts
    lo, hi = 0.5 - r, 0.5 + r

    def envelope(z):
        return float(np.max(slopes * z + intercepts))

    ref = quad(envelope, lo, hi, limit=200)[0] / (2 * r)
    assert f2 == pytest.approx(ref, abs=1e-9)


def test_state_rejects_eta_above_cap():
    with pytest.raises(EtaTooLarge):
        SmoothTransferState(1, M=1.0, R=1.0, eta=0.2, alpha=1.0, T=10,
                            estimator=MC)


def test_certified_smoothness_values():
    assert certified_smoothness(1.0, 2, 30, 0.0) == 1.0
    expected = math.sqrt(2.0) * (4.0 * math.sqrt(5.0 * 31) + 3.0)
    assert certified_smoothness(1.0, 2, 30, 1e-3) == pytest.approx(expected)


def test_wrapped_exact_agd_meets_classical_bound():
    obj = Quadratic(2, 1.0, [0.0, 0.0], alpha=1.0)
    oracle = ApproxFirstOrderOracle(obj, NoiseModel("zero", 0.0, 0))
    algo = make_algorithm(AlgorithmConfig("nesterov-agd", T=30, start=(1.0, 0.0)))
    x_bar, trace = run_wrapped_smooth(algo, oracle, 30, estimator=MC, opt_value=0.0)
    assert obj.value(x_bar) <= 2.0 * 1.0 / 30**2 + 1e-9
    assert len(trace.rows) == 30


def test_wrapped_noisy_agd_meets_transfer_bound():
    T = 30
    alpha = 1.0
    eta = alpha / (5 * T) / 10
    obj = Quadratic(2, 1.0, [0.0, 0.0], alpha=alpha)
    oracle = ApproxFirstOrderOracle(obj, NoiseModel("uniform-random", eta, seed=2))
    est = SmoothingEstimator(n_samples=2048, seed=3)
    algo = make_algorithm(AlgorithmConfig("nesterov-agd", T=T, start=(1.0, 0.0)))
    x_bar, trace = run_wrapped_smooth(algo, oracle, T, estimator=est, opt_value=0.0)
    alpha_prime = certified_smoothness(alpha, 2, T, eta)
    bound = 2 * alpha_prime / T**2 + 5 * eta * (T + 2)
    sigma = max(r.mc_stderr for r in trace.rows)
    assert obj.value(x_bar) <= bound + 3 * sigma


def test_ball_protection_and_output_stability():
    """The model never changes on protected balls around old queries."""
    rng = np.random.default_rng(6)
    T, alpha = 8, 1.0
    eta = alpha / (5 * T) / 4
    obj = Quadratic(2, 1.0, [0.1, -0.2], alpha=alpha)
    noise = NoiseModel("uniform-random", eta, seed=8)
    est = SmoothingEstimator(n_samples=1024, seed=5)
    state = SmoothTransferState(2, obj.M, 1.0, eta, alpha, T, est)
    X = 0.8 * sample_ball(2, T, rng)
    recorded = []
    for t, x in enumerate(X, start=1):
        from oracle_transfer.oracles import approx_first_order
        ft, gt = approx_first_order(obj, noise, x, t)
        recorded.append(smooth_step(state, x, ft, gt))
    protected = math.sqrt(2.0) * state.r
    for t_prime in (1, 3, 5):
        prefix = state.model.prefix(t_prime)
        pts = X[t_prime - 1][None, :] + protected * sample_ball(2, 50, rng)
        assert np.allclose(state.model.values(pts), prefix.values(pts), atol=1e-9)
        est_now = smoothed_estimate(state.model, X[t_prime - 1], state.r, est,
                                    index=t_prime)
        assert est_now.value == recorded[t_prime - 1][0]
        assert np.array_equal(est_now.gradient, recorded[t_prime - 1][1])


def test_materialized_extension_value_and_derivative_1d():
    T, alpha = 6, 1.0
    eta = alpha / (5 * T) / 4
    obj = Quadratic(1, 1.0, [0.2], alpha=alpha)
    noise = NoiseModel("uniform-random", eta, seed=10)
    state = SmoothTransferState(1, obj.M, 1.0, eta, alpha, T, EX1)
    rng = np.random.default_rng(12)
    from oracle_transfer.oracles import approx_first_order
    anchors = []
    for t in range(1, T + 1):
        x = rng.uniform(-0.9, 0.9)
        ft, gt = approx_first_order(obj, noise, [x], t)
        anchors.append(([x], *smooth_step(state, [x], ft, gt)))
    shift = state.cumulative_shift(T + 1)
    for x, f_hat, g_hat in anchors:
        s_val = smoothed_extension_value_1d(state.model, obj, shift, x[0], state.r)
        s_der = smoothed_extension_derivative_1d(state.model, obj, shift, x[0], state.r)
        assert s_val == pytest.approx(f_hat, abs=1e-9)
        assert s_der == pytest.approx(g_hat[0], abs=1e-9)
    # uniform closeness to the objective
    grid = np.linspace(-1.0, 1.0, 100)
    bound = shift + alpha * state.r**2 / 2
    for x in grid:
        s_val = smoothed_extension_value_1d(state.model, obj, shift, float(x), state.r)
        assert abs(s_val - obj.value([x])) <= bound + 1e-9


def test_estimator_validation():
    with pytest.raises(BadArgs):
        SmoothingEstimator(mode="monte-carlo", n_samples=5, antithetic=True)
    with pytest.raises(BadArgs):
        SmoothingEstimator(mode="something-else")
