"""Randomized smoothing of piecewise-max models and the smooth wrapper.

Each query appends a piece carrying a fixed schedule shift, and the pair
handed to the algorithm is the value/gradient of the model smoothed over a
radius-r ball (r = sqrt(eta/alpha)).  The schedule guarantees the model never
changes again on a sqrt(2)*r ball around old queries, so previously emitted
smoothed pairs stay exact for the final function.

Smoothed quantities are exact in d = 1 via breakpoint integration, and
Monte-Carlo estimated otherwise with common random numbers keyed by query
index (recomputing an old query's output from a later model is bit-identical).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import (ACTIVE_RTOL, Array, PREFER_NEWEST, PiecewiseMaxFunction,
                   as_vector, sample_ball)
from .errors import (AlgorithmQueryOutOfBall, BadArgs, BudgetExceeded,
                     EtaTooLarge, Exact1dInHighDim, ModelEmpty, OutOfDomain)
from .oracles import ApproxFirstOrderOracle, Objective, keyed_rng
from .trace import RunTrace, TraceRow

MONTE_CARLO = "monte-carlo"
EXACT_1D = "exact-1d"


def sample_unit_ball(dim: int, rng: np.random.Generator) -> Array:
    """One draw uniform on the closed unit ball (gaussian direction, U^(1/d) radius)."""
    return sample_ball(dim, 1, rng)[0]


@dataclass(frozen=True)
class SmoothingEstimator:
    mode: str = MONTE_CARLO
    n_samples: int = 4096
    seed: int = 0
    antithetic: bool = True

    def __post_init__(self):
        if self.mode not in (MONTE_CARLO, EXACT_1D):
            raise BadArgs(f"unknown estimator mode {self.mode!r}")
        if self.mode == MONTE_CARLO:
            if self.n_samples < 2:
                raise BadArgs("monte-carlo estimator needs at least 2 samples")
            if self.antithetic and self.n_samples % 2:
                raise BadArgs("antithetic pairing needs an even sample count")

    def ball_samples(self, dim: int, index: int) -> Array:
        """The common-random-number sample set for one query index."""
        rng = keyed_rng(self.seed, index)
        if self.antithetic:
            half = sample_ball(dim, self.n_samples // 2, rng)
            return np.vstack([half, -half])
        return sample_ball(dim, self.n_samples, rng)


@dataclass(frozen=True)
class SmoothedEstimate:
    value: float
    gradient: Array
    value_stderr: float
    gradient_stderr: Array
    n_samples: int


def _pair_stderr(samples: Array, antithetic: bool) -> Array:
    """Standard error along axis 0; antithetic pairs are averaged first."""
    n = samples.shape[0]
    if antithetic:
        m = n // 2
        samples = 0.5 * (samples[:m] + samples[m:])
        n = m
    if n < 2:
        return np.zeros(samples.shape[1:])
    return samples.std(axis=0, ddof=1) / math.sqrt(n)


def _segments_1d(slopes: Array, intercepts: Array, lo: float, hi: float):
    """Upper-envelope segments [(z0, z1, piece_index)] of max-of-lines on [lo, hi]."""
    k = slopes.shape[0]
    cuts = {lo, hi}
    for i in range(k):
        for j in range(i + 1, k):
            dg = slopes[i] - slopes[j]
            if dg != 0.0:
                z = (intercepts[j] - intercepts[i]) / dg
                if lo < z < hi:
                    cuts.add(float(z))
    zs = sorted(cuts)
    segments = []
    for z0, z1 in zip(zs[:-1], zs[1:]):
        mid = 0.5 * (z0 + z1)
        idx = int(np.argmax(slopes * mid + intercepts))
        if segments and segments[-1][2] == idx:
            segments[-1] = (segments[-1][0], z1, idx)
        else:
            segments.append((z0, z1, idx))
    return segments


def _exact_1d_estimate(F: PiecewiseMaxFunction, x: float, r: float) -> SmoothedEstimate:
    slopes = F.slopes[:, 0]
    intercepts = F.intercepts
    lo, hi = x - r, x + r
    value = 0.0
    grad = 0.0
    for z0, z1, j in _segments_1d(slopes, intercepts, lo, hi):
        length = z1 - z0
        value += intercepts[j] * length + slopes[j] * (z1 * z1 - z0 * z0) / 2.0
        grad += slopes[j] * length
    width = 2.0 * r
    return SmoothedEstimate(value / width, np.array([grad / width]), 0.0,
                            np.zeros(1), 0)


def smoothed_estimate(F: PiecewiseMaxFunction, x, r: float,
                      estimator: SmoothingEstimator, index: int = 0) -> SmoothedEstimate:
    """Value and gradient of the ball-smoothed model, from one shared sample set."""
    if F.num_pieces == 0:
        raise ModelEmpty("cannot smooth an empty model")
    v = as_vector(x, F.dim)
    if r < 0:
        raise BadArgs("smoothing radius must be nonnegative")
    if r == 0.0:
        return SmoothedEstimate(F.value(v), F.subgradient(v, PREFER_NEWEST),
                                0.0, np.zeros(F.dim), 0)
    if estimator.mode == EXACT_1D:
        if F.dim != 1:
            raise Exact1dInHighDim("exact-1d integration is only valid in dimension 1")
        return _exact_1d_estimate(F, float(v[0]), r)
    U = estimator.ball_samples(F.dim, index)
    Z = v[None, :] + r * U
    vals = F.values(Z)
    grads = F.subgradients(Z, PREFER_NEWEST)
    return SmoothedEstimate(
        value=float(vals.mean()),
        gradient=grads.mean(axis=0),
        value_stderr=float(_pair_stderr(vals, estimator.antithetic)),
        gradient_stderr=_pair_stderr(grads, estimator.antithetic),
        n_samples=U.shape[0],
    )


def smoothed_value(F: PiecewiseMaxFunction, x, r: float,
                   estimator: SmoothingEstimator, index: int = 0) -> float:
    return smoothed_estimate(F, x, r, estimator, index).value


def smoothed_gradient(F: PiecewiseMaxFunction, x, r: float,
                      estimator: SmoothingEstimator, index: int = 0) -> Array:
    return smoothed_estimate(F, x, r, estimator, index).gradient


def certified_smoothness(alpha: float, dim: int, T: int, eta: float) -> float:
    """Smoothness constant certified to the wrapped algorithm.

    With eta = 0 no smoothing happens and the emitted data is exact
    first-order information of the alpha-smooth objective itself, so the
    honest certificate is alpha.
    """
    if eta == 0.0:
        return float(alpha)
    return float(alpha) * math.sqrt(dim) * (4.0 * math.sqrt(5.0 * (T + 1)) + 3.0)


class SmoothTransferState:
    """Model, smoothing radius, and shift schedule for the smooth wrapper."""

    def __init__(self, dim: int, M: float, R: float, eta: float, alpha: float,
                 T: int, estimator: SmoothingEstimator):
        if alpha is None or alpha <= 0:
            raise BadArgs("smooth transfer requires a positive smoothness constant")
        if eta < 0:
            raise BadArgs("eta must be nonnegative")
        cap = alpha * R * R / (5.0 * T)
        if eta > cap * (1.0 + 1e-12):
            raise EtaTooLarge(f"eta = {eta} exceeds alpha*R^2/(5T) = {cap:.6g}")
        self.dim = int(dim)
        self.M = float(M)
        self.R = float(R)
        self.eta = float(eta)
        self.alpha = float(alpha)
        self.T = int(T)
        self.estimator = estimator
        self.r = math.sqrt(eta / alpha)
        # the schedule uses alpha*r^2 = eta exactly; both forms must agree
        if abs(alpha * self.r * self.r - eta) > 1e-12 * max(1.0, eta):
            raise BadArgs("inconsistent smoothing radius")
        self.model = PiecewiseMaxFunction(self.dim)
        self.t = 0
        self.last_estimate: SmoothedEstimate | None = None

    @property
    def lipschitz_certificate(self) -> float:
        return self.M + self.eta / (2.0 * self.R)

    @property
    def alpha_certificate(self) -> float:
        return certified_smoothness(self.alpha, self.dim, self.T, self.eta)

    def cumulative_shift(self, t: int) -> float:
        """Shift schedule 4*eta*t + alpha*r^2*t, precomputed as 5*eta*t."""
        return 5.0 * self.eta * t


def smooth_step(state: SmoothTransferState, x_t, f_tilde: float,
                g_tilde) -> tuple[float, Array]:
    """Append the scheduled-shift piece and emit the smoothed model's pair."""
    x = as_vector(x_t, state.dim)
    g = as_vector(g_tilde, state.dim)
    if np.linalg.norm(x) > state.R * (1.0 + 1e-9) + 1e-12:
        raise OutOfDomain(f"query norm {np.linalg.norm(x):.6g} exceeds R = {state.R:.6g}")
    t = state.t + 1
    shift = state.eta * (5.0 * t + 2.0)  # s_t + 2*eta
    new_val = float(f_tilde) - shift
    old_val = state.model.value(x) if state.model.num_pieces else None
    state.model.append_piece(g, new_val - float(g @ x), t)
    if state.r == 0.0:
        # zero-radius smoothing degenerates to evaluation; prefer the fresh
        # piece on near-ties so the zero-noise path is an exact pass-through
        tol = ACTIVE_RTOL * (1.0 + abs(new_val))
        if old_val is not None and old_val > new_val + tol:
            f_hat = old_val
            g_hat = state.model.subgradient(x, PREFER_NEWEST)
        else:
            f_hat = new_val
            g_hat = g.copy()
        est = SmoothedEstimate(f_hat, g_hat, 0.0, np.zeros(state.dim), 0)
    else:
        est = smoothed_estimate(state.model, x, state.r, state.estimator, index=t)
        f_hat, g_hat = est.value, est.gradient
    state.model.add_anchor(x, f_hat, g_hat)
    state.t = t
    state.last_estimate = est
    return f_hat, g_hat


class SmoothExchange:
    """Channel for smooth wrapped runs; certifies the inflated smoothness."""

    def __init__(self, state: SmoothTransferState, oracle: ApproxFirstOrderOracle,
                 opt_value: float | None = None):
        self._state = state
        self._oracle = oracle
        self.dim = state.dim
        self.R = state.R
        self.T = state.T
        self.M = state.lipschitz_certificate
        self.alpha = state.alpha_certificate
        self.rho = None
        self.exchanges = 0
        self.rows: list[TraceRow] = []
        self._opt_value = opt_value
        self._best_exact = np.inf

    def first_order(self, x) -> tuple[float, Array]:
        if self.exchanges >= self.T:
            raise BudgetExceeded(f"exchange budget T = {self.T} exhausted")
        q = as_vector(x, self.dim)
        if np.linalg.norm(q) > self.R * (1.0 + 1e-9) + 1e-12:
            raise AlgorithmQueryOutOfBall(
                f"algorithm query norm {np.linalg.norm(q):.6g} exceeds R = {self.R:.6g}")
        t = self.exchanges + 1
        f_tilde, g_tilde = self._oracle.query(q, t)
        f_hat, g_hat = smooth_step(self._state, q, f_tilde, g_tilde)
        f_exact = self._oracle.objective.value(q)
        self._best_exact = min(self._best_exact, f_exact)
        gap = None if self._opt_value is None else self._best_exact - self._opt_value
        stderr = self._state.last_estimate.value_stderr if self._state.last_estimate else None
        self.rows.append(TraceRow(
            t=t, x=q.copy(), f_tilde=float(f_tilde), g_tilde=np.array(g_tilde),
            f_hat=float(f_hat), g_hat=np.array(g_hat),
            shift=self._state.eta * (5.0 * t + 2.0),
            f_exact=f_exact, best_gap=gap, mc_stderr=stderr))
        self.exchanges = t
        return f_hat, g_hat


def run_wrapped_smooth(algorithm, oracle: ApproxFirstOrderOracle, T: int,
                       estimator: SmoothingEstimator | None = None,
                       opt_value: float | None = None,
                       state: SmoothTransferState | None = None) -> tuple[Array, RunTrace]:
    """Mediate T exchanges through the smoothing repair."""
    if state is None:
        obj = oracle.objective
        if obj.alpha is None:
            raise BadArgs("smooth transfer requires an objective with a smoothness certificate")
        state = SmoothTransferState(oracle.dim, obj.M, oracle.R, oracle.eta,
                                    obj.alpha, T, estimator or SmoothingEstimator())
    channel = SmoothExchange(state, oracle, opt_value)
    x_bar = as_vector(algorithm.run(channel), state.dim)
    return x_bar, RunTrace(rows=channel.rows, final_point=x_bar)


# ---------------------------------------------------------------------------
# Materialized final extension: h = max(model, objective - shift), smoothed
# ---------------------------------------------------------------------------


def extension_envelope(model: PiecewiseMaxFunction, objective: Objective,
                       shift: float, Z) -> tuple[Array, Array]:
    """Values and subgradients of max(model, objective - shift) at rows Z."""
    mv = model.values(Z)
    ov = objective.values(Z) - shift
    vals = np.maximum(mv, ov)
    grads = np.where((mv >= ov)[:, None],
                     model.subgradients(Z, PREFER_NEWEST),
                     objective.subgradients(Z))
    return vals, grads


def smoothed_extension_estimate(model: PiecewiseMaxFunction, objective: Objective,
                                shift: float, x, r: float,
                                estimator: SmoothingEstimator,
                                index: int = 0) -> SmoothedEstimate:
    """Monte-Carlo estimate of the smoothed final extension at x."""
    v = as_vector(x, model.dim)
    if r == 0.0:
        vals, grads = extension_envelope(model, objective, shift, v[None, :])
        return SmoothedEstimate(float(vals[0]), grads[0], 0.0, np.zeros(model.dim), 0)
    U = estimator.ball_samples(model.dim, index)
    Z = v[None, :] + r * U
    vals, grads = extension_envelope(model, objective, shift, Z)
    return SmoothedEstimate(
        value=float(vals.mean()),
        gradient=grads.mean(axis=0),
        value_stderr=float(_pair_stderr(vals, estimator.antithetic)),
        gradient_stderr=_pair_stderr(grads, estimator.antithetic),
        n_samples=U.shape[0],
    )


def smoothed_extension_value_1d(model: PiecewiseMaxFunction, objective: Objective,
                                shift: float, x: float, r: float) -> float:
    """Adaptive-quadrature value of the smoothed final extension (d = 1 only)."""
    if model.dim != 1:
        raise Exact1dInHighDim("1-d integrator requested in dimension > 1")
    if r == 0.0:
        return max(model.value([x]), objective.value([x]) - shift)
    lo, hi = x - r, x + r

    def h(z: float) -> float:
        return max(model.value([z]), objective.value([z]) - shift)

    kinks = sorted(z0 for z0, _, _ in
                   _segments_1d(model.slopes[:, 0], model.intercepts, lo, hi)
                   if lo < z0 < hi)
    integral, abserr = quad(h, lo, hi, points=kinks or None, limit=500,
                            epsabs=1e-12, epsrel=1e-12)
    if abserr > 1e-8:
        raise BadArgs(f"quadrature error {abserr:.3g} too large")
    return integral / (2.0 * r)


def smoothed_extension_derivative_1d(model: PiecewiseMaxFunction, objective: Objective,
                                     shift: float, x: float, r: float) -> float:
    """Exact derivative of the 1-d smoothed extension: boundary difference / 2r."""
    if model.dim != 1:
        raise Exact1dInHighDim("1-d integrator requested in dimension > 1")
    if r == 0.0:
        raise BadArgs("derivative formula needs a positive radius")
    h_hi = max(model.value([x + r]), objective.value([x + r]) - shift)
    h_lo = max(model.value([x - r]), objective.value([x - r]) - shift)
    return (h_hi - h_lo) / (2.0 * r)
