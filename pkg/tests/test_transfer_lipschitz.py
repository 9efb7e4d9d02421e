import numpy as np
import pytest

from oracle_transfer.algorithms import AlgorithmConfig, make_algorithm
from oracle_transfer.core import check_convex_extensibility, sample_ball
from oracle_transfer.errors import AlgorithmQueryOutOfBall, OutOfDomain
from oracle_transfer.oracles import (AbsDistance, ApproxFirstOrderOracle,
                                     EuclideanNorm, MaxOfAffines, NoiseModel,
                                     approx_first_order, exact_first_order)
from oracle_transfer.transfer_lipschitz import (FirstOrderExchange,
                                                LipschitzTransferState,
                                                compute_shift, lipschitz_step,
                                                run_wrapped)


def make_state(dim=1, M=1.0, R=1.0, eta=0.08):
    return LipschitzTransferState(dim, M, R, eta)


def test_shift_zero_without_anchors():
    state = make_state()
    assert compute_shift(state, [0.3], 1.0, [0.5]) == 0.0


def test_shift_closed_form_flipped_slopes():
    state = make_state()
    lipschitz_step(state, [-0.5], 0.0, [0.04])
    assert compute_shift(state, [0.5], 0.0, [-0.04]) == pytest.approx(0.04)


def test_shift_zero_when_new_value_below_model():
    state = make_state()
    lipschitz_step(state, [0.0], 0.08, [0.0])
    assert state.model.value([0.0]) == pytest.approx(0.08)
    assert compute_shift(state, [0.6], -0.05, [0.0]) == 0.0


def test_step_flipped_slope_trace():
    state = make_state()
    lipschitz_step(state, [-0.5], 0.0, [0.04])
    f2, g2 = lipschitz_step(state, [0.5], 0.0, [-0.04])
    # old piece evaluates to 0.04 at 0.5 and stays active
    assert f2 == pytest.approx(0.04)
    assert g2[0] == pytest.approx(0.04)
    assert state.last_shift == pytest.approx(0.04)


def test_first_step_returns_own_data():
    state = make_state(dim=2)
    f1, g1 = lipschitz_step(state, [0.0, 0.0], 5.0, [1.0, 0.0])
    assert f1 == 5.0 and np.array_equal(g1, [1.0, 0.0])


def test_zero_noise_steps_reproduce_objective_exactly():
    rng = np.random.default_rng(3)
    obj = AbsDistance(1, 1.0, [0.3])
    state = make_state(eta=0.0)
    for t in range(1, 40):
        x = rng.uniform(-1, 1)
        f, g = exact_first_order(obj, [x])
        fh, gh = lipschitz_step(state, [x], f, g)
        assert fh == f  # bit-exact pass-through
        assert np.array_equal(gh, g)


def test_step_rejects_query_outside_ball():
    state = make_state()
    with pytest.raises(OutOfDomain):
        lipschitz_step(state, [1.5], 0.0, [1.0])


def test_model_invariants_after_noisy_run():
    """Extension, sandwich, monotonicity, and slope-norm invariants."""
    rng = np.random.default_rng(9)
    obj = AbsDistance(2, 1.0, [0.2, -0.3])
    eta = 0.05
    noise = NoiseModel("uniform-random", eta, seed=21)
    state = LipschitzTransferState(2, obj.M, 1.0, eta)
    T = 25
    X = sample_ball(2, T, rng)
    for t, x in enumerate(X, start=1):
        ft, gt = approx_first_order(obj, noise, x, t)
        lipschitz_step(state, x, ft, gt)
    model = state.model
    assert model.max_slope_norm() <= state.lipschitz_certificate + 1e-12
    for tau, anchor in enumerate(model.anchors, start=1):
        assert model.value(anchor.point) == pytest.approx(
            anchor.value, abs=1e-9 * (1 + abs(anchor.value)))
        # committed value never drifts below the objective by more than 2*eta*t
        assert model.value(anchor.point) >= obj.value(anchor.point) - 2 * eta * T - 1e-9
    probe = sample_ball(2, 500, rng)
    assert np.all(model.values(probe) <= obj.values(probe) + 2 * eta * T + 1e-9)
    # monotone growth: value at any point never decreases as pieces accrue
    z = sample_ball(2, 30, rng)
    prev = np.full(30, -np.inf)
    for k in range(1, model.num_pieces + 1):
        cur = model.prefix(k).values(z)
        assert np.all(cur >= prev - 1e-12)
        prev = cur


def test_final_extension_is_uniformly_close():
    rng = np.random.default_rng(11)
    obj = EuclideanNorm(2, 1.0, [0.1, 0.1])
    eta = 0.02
    noise = NoiseModel("uniform-random", eta, seed=4)
    state = LipschitzTransferState(2, obj.M, 1.0, eta)
    T = 20
    for t, x in enumerate(sample_ball(2, T, rng), start=1):
        ft, gt = approx_first_order(obj, noise, x, t)
        lipschitz_step(state, x, ft, gt)
    delta = 2 * eta * T
    Z = sample_ball(2, 400, rng)
    f_prime = np.maximum(state.model.values(Z), obj.values(Z) - delta)
    assert np.all(np.abs(f_prime - obj.values(Z)) <= delta + 1e-9)
    for anchor in state.model.anchors:
        fp = max(state.model.value(anchor.point), obj.value(anchor.point) - delta)
        assert fp == pytest.approx(anchor.value, abs=1e-9 * (1 + abs(anchor.value)))


# --- wrapped runs ----------------------------------------------------------


def subgradient_cfg(T, start=(1.0, 0.0)):
    return AlgorithmConfig("projected-subgradient", T=T, start=start)


def test_wrapped_zero_noise_equals_direct_run():
    obj = EuclideanNorm(2, 1.0, [0.0, 0.0])
    oracle = ApproxFirstOrderOracle(obj, NoiseModel("zero", 0.0, 0))
    algo = make_algorithm(subgradient_cfg(50))
    x_wrapped, trace = run_wrapped(algo, oracle, 50, opt_value=0.0)

    class DirectChannel:
        dim, R, T, M, alpha, rho = 2, 1.0, 50, obj.M, None, None

        def first_order(self, x):
            return exact_first_order(obj, x)

    x_direct = make_algorithm(subgradient_cfg(50)).run(DirectChannel())
    assert np.array_equal(x_wrapped, x_direct)
    for row in trace.rows:
        f, g = exact_first_order(obj, row.x)
        assert row.f_hat == f and np.array_equal(row.g_hat, g)


def test_wrapped_noisy_run_meets_guarantee():
    obj = AbsDistance(1, 1.0, [0.3])
    eta, T = 0.001, 100
    oracle = ApproxFirstOrderOracle(obj, NoiseModel("uniform-random", eta, seed=7))
    algo = make_algorithm(AlgorithmConfig("projected-subgradient", T=T, start=(0.0,)))
    x_bar, trace = run_wrapped(algo, oracle, T, opt_value=0.0)
    gap = obj.value(x_bar)
    assert gap <= obj.M * 1.0 / np.sqrt(T) + 4 * eta * T + 0.05
    assert len(trace.rows) == T


def test_wrapped_adversarial_raw_fails_repaired_passes():
    obj = MaxOfAffines(1, 1.0, [[0.0]], [0.25], [0.0], 0.25, M=1.0)
    eta = 0.08
    oracle = ApproxFirstOrderOracle(
        obj, NoiseModel("adversarial-slope-flip", eta, seed=0))
    algo = make_algorithm(AlgorithmConfig("projected-subgradient", T=10, start=(0.9,)))
    _, trace = run_wrapped(algo, oracle, 10, opt_value=0.25)
    raw = [(r.x, r.f_tilde, r.g_tilde) for r in trace.rows]
    repaired = [(r.x, r.f_hat, r.g_hat) for r in trace.rows]
    assert not check_convex_extensibility(raw, tol=1e-9).extensible
    assert check_convex_extensibility(repaired, tol=1e-9).extensible


def test_channel_rejects_out_of_ball_query():
    obj = EuclideanNorm(2, 1.0, [0.0, 0.0])
    oracle = ApproxFirstOrderOracle(obj, NoiseModel("zero", 0.0, 0))
    state = LipschitzTransferState(2, obj.M, 1.0, 0.0)
    channel = FirstOrderExchange(state, oracle, T=5)
    with pytest.raises(AlgorithmQueryOutOfBall):
        channel.first_order([2.0, 0.0])


def test_channel_certifies_inflated_lipschitz_constant():
    obj = AbsDistance(1, 1.0, [0.0])
    eta = 0.1
    oracle = ApproxFirstOrderOracle(obj, NoiseModel("uniform-random", eta, 0))
    state = LipschitzTransferState(1, obj.M, 1.0, eta)
    channel = FirstOrderExchange(state, oracle, T=5)
    assert channel.M == pytest.approx(obj.M + eta / 2.0)
