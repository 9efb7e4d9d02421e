import math

import numpy as np
import pytest

from oracle_transfer.core import sample_ball
from oracle_transfer.errors import BadArgs, BadDelta, BadEta, OutOfDomain
from oracle_transfer.oracles import (FEASIBLE, INFEASIBLE, AbsDistance,
                                     BallConstraint, BoxConstraint,
                                     EuclideanNorm, LogSumExp, MaxOfAffines,
                                     NoiseModel, PolytopeConstraint,
                                     Quadratic, SeparationNoiseModel,
                                     approx_first_order, approx_separation,
                                     constraint_from_config,
                                     deep_point_sampler, devolder_params,
                                     exact_first_order, exact_separation,
                                     objective_from_config, objective_to_config)


def test_exact_quadratic_pair():
    obj = Quadratic(2, 2.0, [0.0, 0.0], alpha=1.0)
    f, g = exact_first_order(obj, [3.0, 4.0])
    assert f == pytest.approx(12.5)
    assert np.allclose(g, [3.0, 4.0], atol=0)


def test_exact_norm_at_center_returns_zero_subgradient():
    obj = EuclideanNorm(2, 1.0, [0.0, 0.0])
    f, g = exact_first_order(obj, [0.0, 0.0])
    assert f == 0.0
    assert np.array_equal(g, [0.0, 0.0])


def test_exact_max_of_affines_kink_side():
    obj = MaxOfAffines(1, 1.0, [[1.0], [-1.0]], [0.0, 0.0], [0.0], 0.0)
    f, g = exact_first_order(obj, [0.5])
    assert f == 0.5 and g[0] == 1.0


def test_exact_out_of_domain():
    obj = Quadratic(1, 1.0, [0.0], alpha=1.0)
    with pytest.raises(OutOfDomain):
        exact_first_order(obj, [4.5])


def test_bad_lipschitz_certificate_rejected():
    with pytest.raises(BadArgs):
        MaxOfAffines(1, 1.0, [[2.0]], [0.0], [0.0], 0.0, M=0.5)


def test_objective_config_round_trip():
    obj = LogSumExp(2, 1.0, [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
                    [0.0, 0.0, 0.0, 0.0], 0.5,
                    minimizer=[0.0, 0.0], opt_value=0.5 * math.log(4.0))
    clone = objective_from_config(objective_to_config(obj), 2, 1.0)
    x = np.array([0.2, -0.1])
    assert clone.value(x) == obj.value(x)
    assert np.array_equal(clone.subgradient(x), obj.subgradient(x))


# --- first-order noise ------------------------------------------------------


def test_zero_noise_is_identity():
    obj = AbsDistance(1, 1.0, [0.3])
    f, g = exact_first_order(obj, [0.5])
    ft, gt = approx_first_order(obj, NoiseModel("zero", 0.1, 0), [0.5], 3)
    # zero kind ignores eta entirely
    assert ft == f and np.array_equal(gt, g)


def test_value_bias_saturates_band():
    obj = MaxOfAffines(1, 1.0, [[0.0]], [0.0], [0.0], 0.0, M=1.0)
    ft, gt = approx_first_order(obj, NoiseModel("value-bias", 0.1, 0), [0.0], 1)
    assert ft == pytest.approx(0.1, abs=0)
    assert np.array_equal(gt, [0.0])


def test_slope_flip_saturates_gradient_band():
    obj = MaxOfAffines(1, 1.0, [[0.0]], [0.0], [0.0], 0.0, M=1.0)
    ft, gt = approx_first_order(
        obj, NoiseModel("adversarial-slope-flip", 0.1, 0), [-0.5], 1)
    assert ft == 0.0
    assert gt[0] == pytest.approx(0.05, abs=1e-15)  # eta/(2R) toward the origin


@pytest.mark.parametrize("kind", ["uniform-random", "adversarial-slope-flip", "value-bias"])
def test_noise_respects_error_bands(kind):
    rng = np.random.default_rng(5)
    objs = [AbsDistance(2, 1.0, [0.3, -0.1]),
            Quadratic(2, 1.0, [0.2, 0.2], alpha=1.0),
            EuclideanNorm(2, 1.0, [0.0, 0.5])]
    eta = 0.05
    noise = NoiseModel(kind, eta, seed=11)
    for t in range(350):
        obj = objs[t % len(objs)]
        x = sample_ball(2, 1, rng)[0]
        f, g = exact_first_order(obj, x)
        ft, gt = approx_first_order(obj, noise, x, t)
        assert abs(ft - f) <= eta + 1e-12
        assert np.linalg.norm(gt - g) <= eta / (2 * obj.R) + 1e-12


def test_noise_deterministic_per_key():
    obj = Quadratic(2, 1.0, [0.0, 0.0], alpha=1.0)
    noise = NoiseModel("uniform-random", 0.01, seed=99)
    x = np.array([0.1, -0.4])
    a = approx_first_order(obj, noise, x, 7)
    b = approx_first_order(obj, NoiseModel("uniform-random", 0.01, seed=99), x, 7)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])
    c = approx_first_order(obj, noise, x, 8)
    assert a[0] != c[0] or not np.array_equal(a[1], c[1])


# --- separation ---------------------------------------------------------------


def test_exact_separation_ball():
    C = BallConstraint(2, [0.0, 0.0], 1.0, R=2.0)
    flag, g = exact_separation(C, [2.0, 0.0])
    assert flag == INFEASIBLE and np.allclose(g, [1.0, 0.0], atol=0)
    flag, g = exact_separation(C, [0.5, 0.0])
    assert flag == FEASIBLE and g is None


def test_exact_separation_box_most_violated_facet():
    C = BoxConstraint(2, [-1.0, -1.0], [1.0, 1.0], R=2.0)
    flag, g = exact_separation(C, [1.5, 0.2])
    assert flag == INFEASIBLE and np.array_equal(g, [1.0, 0.0])


def test_approx_separation_zero_noise_passthrough():
    C = BallConstraint(2, [0.0, 0.0], 1.0, R=2.0)
    noise = SeparationNoiseModel("zero", 0.0, 0)
    for x in ([2.0, 0.0], [0.2, 0.3], [0.0, -1.8]):
        assert approx_separation(C, noise, x, 1)[0] == exact_separation(C, x)[0]
    _, g = approx_separation(C, noise, [2.0, 0.0], 1)
    assert np.array_equal(g, exact_separation(C, [2.0, 0.0])[1])


def test_approx_separation_saturating_rotation():
    C = BallConstraint(2, [0.0, 0.0], 1.0, R=2.0)
    eta_c = 0.4
    noise = SeparationNoiseModel("adversarial-toward-deep", eta_c, 0)
    _, g = approx_separation(C, noise, [2.0, 0.0], 1)
    theta = 2.0 * math.asin(eta_c / (4 * C.R) / 2.0)
    assert np.allclose(g, [math.cos(theta), math.sin(theta)], atol=1e-15)
    exact = exact_separation(C, [2.0, 0.0])[1]
    assert np.linalg.norm(g - exact) == pytest.approx(eta_c / (4 * C.R), abs=1e-12)


def test_approx_separation_flag_always_exact():
    rng = np.random.default_rng(17)
    constraints = [BallConstraint(2, [0.1, 0.0], 0.7, R=1.0),
                   BoxConstraint(2, [-0.5, -0.4], [0.5, 0.4], R=1.0),
                   PolytopeConstraint(2, [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
                                      [0.5, 0.5, 0.5, 0.5], R=1.0, rho=0.3,
                                      deep_center=[0.0, 0.0])]
    for C in constraints:
        noise = SeparationNoiseModel("random-rotation", min(0.2, C.rho), seed=2)
        for t in range(350):
            x = sample_ball(2, 1, rng)[0] * C.R
            flag, g = approx_separation(C, noise, x, t)
            assert (flag == FEASIBLE) == C.contains(x)
            if flag == INFEASIBLE:
                assert abs(np.linalg.norm(g) - 1.0) < 1e-9
                exact = C.separation_normal(x)
                assert np.linalg.norm(g - exact) <= noise.eta_c / (4 * C.R) + 1e-12


def test_approx_separation_rejects_large_eta():
    C = BallConstraint(2, [0.0, 0.0], 0.5, R=1.0)
    with pytest.raises(BadEta):
        approx_separation(C, SeparationNoiseModel("zero", 0.6, 0), [0.9, 0.0], 1)


# --- deep points ---------------------------------------------------------------


def test_deep_sampler_ball():
    C = BallConstraint(2, [0.0, 0.0], 1.0)
    pts = deep_point_sampler(C, 0.3, 200, seed=1)
    assert np.all(np.linalg.norm(pts, axis=1) <= 0.7 + 1e-9)


def test_deep_sampler_box():
    C = BoxConstraint(2, [-1.0, -1.0], [1.0, 1.0])
    pts = deep_point_sampler(C, 0.5, 200, seed=2)
    assert np.all(np.abs(pts) <= 0.5 + 1e-12)


def test_deep_sampler_polytope_unit_normal_tightening():
    C = PolytopeConstraint(2, [[1.0, 0.0]], [1.0], R=2.0, rho=0.5,
                           deep_center=[0.0, 0.0])
    pts = deep_point_sampler(C, 0.2, 200, seed=3)
    assert np.all(pts[:, 0] <= 0.8 + 1e-12)


def test_deep_samples_have_interior_margin():
    rng = np.random.default_rng(4)
    C = BallConstraint(2, [0.2, -0.1], 0.6, R=1.0)
    delta = 0.2
    pts = deep_point_sampler(C, delta, 50, seed=5)
    for p in pts:
        assert C.contains(p)
        for _ in range(20):
            u = rng.normal(size=2)
            u /= np.linalg.norm(u)
            assert C.contains(p + delta * u, tol=1e-9)


def test_deep_sampler_rejects_bad_delta():
    C = BallConstraint(2, [0.0, 0.0], 0.5)
    with pytest.raises(BadDelta):
        deep_point_sampler(C, 0.5, 10, seed=0)


def test_constraint_config_round_trip():
    C = BallConstraint(2, [0.1, 0.0], 0.7, R=1.0, rho=0.5)
    from oracle_transfer.oracles import constraint_to_config
    clone = constraint_from_config(constraint_to_config(C), 2)
    assert clone.rho == C.rho and clone.R == C.R
    assert clone.contains([0.5, 0.0]) == C.contains([0.5, 0.0])


# --- inexact-oracle parameter adapter -----------------------------------------


def test_devolder_smooth_case():
    assert devolder_params(0.01, L=2.0) == (pytest.approx(0.04), 2.0)


def test_devolder_lipschitz_case():
    delta, L = devolder_params(0.01, M=1.0, L_out=10.0)
    assert delta == pytest.approx(0.13) and L == 10.0


def test_devolder_exact_oracle_maps_to_zero():
    assert devolder_params(0.0, L=5.0) == (0.0, 5.0)


def test_devolder_rejects_bad_args():
    with pytest.raises(BadArgs):
        devolder_params(0.01)
    with pytest.raises(BadArgs):
        devolder_params(0.01, M=1.0, L=2.0)
    with pytest.raises(BadArgs):
        devolder_params(0.01, M=1.0)
