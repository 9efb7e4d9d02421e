"""Trace verification: deterministic replay plus invariant suites.

Each suite checks one guarantee of the transfer construction at the final
(or replayed prefix) state and reports its worst violation next to the
tolerance it is allowed: 1e-9-scale for exactly computed quantities, three
standard errors for Monte-Carlo ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import PREFER_NEWEST, sample_ball
from ..errors import TraceMismatch
from ..oracles import FEASIBLE, INFEASIBLE, deep_point_sampler
from ..trace import RunTrace, rows_equal
from ..transfer_smooth import (EXACT_1D, extension_envelope,
                               smoothed_estimate, smoothed_extension_derivative_1d,
                               smoothed_extension_estimate,
                               smoothed_extension_value_1d, smoothed_value,
                               _pair_stderr)
from .config import ExperimentConfig
from .runner import RunArtifacts, execute

EXACT_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst_violation: float
    tol: float
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, worst: float, tol: float, detail: str = ""):
        self.checks.append(CheckResult(name, float(worst), float(tol),
                                       float(worst) <= float(tol), detail))

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status} {c.name}: worst violation {c.worst_violation:.3e}"
                       f" (tol {c.tol:.3e}){' ' + c.detail if c.detail else ''}")
        return out


def _scale_tol(*values: float) -> float:
    return EXACT_TOL * (1.0 + max((abs(v) for v in values), default=0.0))


def verify_trace(trace: RunTrace, cfg: ExperimentConfig) -> VerifyReport:
    """Replay the run from its config and audit every applicable invariant."""
    replay, artifacts = execute(cfg)
    if len(replay.rows) != len(trace.rows):
        raise TraceMismatch(f"row count {len(trace.rows)} != replayed {len(replay.rows)}")
    for i, (a, b) in enumerate(zip(trace.rows, replay.rows)):
        if not rows_equal(a, b):
            raise TraceMismatch(f"row {i + 1} diverges from deterministic replay")
    if not np.array_equal(np.asarray(trace.final_point), np.asarray(replay.final_point)):
        raise TraceMismatch("final point diverges from deterministic replay")

    report = VerifyReport()
    rng = np.random.default_rng(cfg.seed + 0x5EED)
    if cfg.transfer == "lipschitz":
        _lipschitz_suite(report, artifacts, replay, rng)
    elif cfg.transfer == "smooth":
        _smooth_suite(report, artifacts, replay, rng)
    elif cfg.transfer == "constrained":
        _lipschitz_suite(report, artifacts, replay, rng)
        _separation_suite(report, artifacts, replay, rng)
    return report


# ---------------------------------------------------------------------------
# Lipschitz model suite
# ---------------------------------------------------------------------------


def _lipschitz_suite(report: VerifyReport, art: RunArtifacts, trace: RunTrace,
                     rng: np.random.Generator):
    state = art.f_state
    model = state.model
    obj = art.objective
    eta, R, T = state.eta, state.R, state.t
    anchors = model.anchors
    X = np.stack([a.point for a in anchors])
    f_hat = np.array([a.value for a in anchors])
    g_hat = np.stack([a.subgradient for a in anchors])
    f_exact = obj.values(X)
    scale = _scale_tol(*np.abs(f_hat))

    report.add("lipschitz-certificate-slope-norm",
               model.max_slope_norm() - state.lipschitz_certificate,
               1e-12 * (1.0 + state.lipschitz_certificate))

    report.add("extension-anchor-values",
               float(np.abs(model.values(X) - f_hat).max()), scale)

    probes = R * sample_ball(state.dim, 100, rng)
    plane = f_hat[:, None] + g_hat @ probes.T - np.einsum("td,td->t", g_hat, X)[:, None]
    report.add("extension-anchor-subgradients",
               float((plane - model.values(probes)[None, :]).max()), scale)

    # running model vs exact objective at every prefix time
    piece_vals = X @ model.slopes.T + model.intercepts  # (tau, j)
    running = np.maximum.accumulate(piece_vals, axis=1)  # F_t(x_tau) in column t-1
    worst_lower = -np.inf
    for t in range(1, T + 1):
        lower = f_exact[:t] - 2.0 * eta * t - running[:t, t - 1]
        worst_lower = max(worst_lower, float(lower.max()))
    report.add("sandwich-lower-at-anchors", worst_lower, scale)

    sample = R * sample_ball(state.dim, 500, rng)
    over = model.values(sample) - (obj.values(sample) + 2.0 * eta * T)
    report.add("sandwich-upper-sampled", float(over.max()), scale)

    # pointwise final extension max(model, f - 2 eta T)
    delta = 2.0 * eta * T
    f_prime = np.maximum(model.values(sample), obj.values(sample) - delta)
    report.add("final-extension-sup-distance",
               float(np.abs(f_prime - obj.values(sample)).max()) - delta, scale)
    f_prime_anchors = np.maximum(model.values(X), f_exact - delta)
    report.add("final-extension-anchor-values",
               float(np.abs(f_prime_anchors - f_hat).max()), scale)

    report.add("model-monotone-in-t",
               float((running[:, :-1] - running[:, 1:]).max()) if T > 1 else 0.0,
               1e-15)

    if eta == 0.0:
        f_tilde = np.array([r.f_tilde for r in trace.rows])
        report.add("zero-noise-value-passthrough",
                   float(np.abs(f_tilde - f_hat).max()), 0.0)


# ---------------------------------------------------------------------------
# Smooth model suite
# ---------------------------------------------------------------------------


def _smooth_suite(report: VerifyReport, art: RunArtifacts, trace: RunTrace,
                  rng: np.random.Generator):
    state = art.smooth_state
    model = state.model
    obj = art.objective
    est = state.estimator
    eta, R, T, r = state.eta, state.R, state.t, state.r
    anchors = model.anchors
    X = np.stack([a.point for a in anchors])
    f_hat = np.array([a.value for a in anchors])
    g_hat = np.stack([a.subgradient for a in anchors])
    shift_final = state.cumulative_shift(T + 1)
    scale = _scale_tol(*np.abs(f_hat))

    sample4 = 4.0 * R * sample_ball(state.dim, 500, rng)
    report.add("model-under-bound",
               float((model.values(sample4) - obj.values(sample4)).max()), scale)

    protected = math.sqrt(2.0) * r
    worst_protect = 0.0
    worst_deep = -np.inf
    times = list(range(1, T + 1)) if T <= 8 else sorted(
        rng.choice(np.arange(1, T + 1), size=8, replace=False).tolist())
    for t_prime in times:
        pts = X[t_prime - 1][None, :] + protected * sample_ball(state.dim, 50, rng)
        if protected > 0:
            prefix = model.prefix(t_prime)
            later = model.prefix(T) if t_prime < T else model
            diff = np.abs(later.values(pts) - prefix.values(pts))
            worst_protect = max(worst_protect, float(diff.max()))
        deep = obj.values(pts) - shift_final - model.values(pts)
        worst_deep = max(worst_deep, float(deep.max()))
    report.add("ball-protection", worst_protect, scale)
    report.add("deep-lower-bound", worst_deep, scale)

    # recorded outputs stay valid against the final model (common random numbers)
    stability_tol = 0.0 if (r > 0 and est.mode != EXACT_1D) else scale
    worst_value = 0.0
    worst_grad = 0.0
    for t_prime in times:
        a = anchors[t_prime - 1]
        est_now = smoothed_estimate(model, a.point, r, est, index=t_prime)
        worst_value = max(worst_value, abs(est_now.value - a.value))
        worst_grad = max(worst_grad, float(np.abs(est_now.gradient - a.subgradient).max()))
    report.add("output-stability-value", worst_value, stability_tol)
    report.add("output-stability-gradient", worst_grad, stability_tol)

    if r > 0:
        worst_fd = -np.inf
        h = 1e-6
        for t_prime in times[: min(5, len(times))]:
            a = anchors[t_prime - 1]
            grad = np.asarray(a.subgradient)
            rec = smoothed_estimate(model, a.point, r, est, index=t_prime)
            for j in range(state.dim):
                e = np.zeros(state.dim)
                e[j] = h
                vp = smoothed_value(model, a.point + e, r, est, index=t_prime)
                vm = smoothed_value(model, a.point - e, r, est, index=t_prime)
                fd = (vp - vm) / (2.0 * h)
                tol_j = max(1e-6, 3.0 * float(rec.gradient_stderr[j]))
                worst_fd = max(worst_fd, abs(fd - grad[j]) - tol_j)
        report.add("gradient-matches-finite-differences", worst_fd, 0.0)

    # materialized final smooth extension
    sample = R * sample_ball(state.dim, 200, rng)
    bound_total = 5.0 * eta * (T + 2)
    bound_close = shift_final + state.alpha * r * r / 2.0
    worst_total = -np.inf
    worst_close = -np.inf
    if state.dim == 1 and (est.mode == EXACT_1D or r == 0.0):
        for x in sample[:, 0]:
            s_val = smoothed_extension_value_1d(model, obj, shift_final, float(x), r)
            err = abs(s_val - obj.value([x]))
            worst_total = max(worst_total, err - bound_total)
            worst_close = max(worst_close, err - bound_close)
        report.add("final-smooth-extension-sup-distance", worst_total, scale)
        report.add("smoothing-closeness", worst_close, scale)
        worst_anchor_v = 0.0
        worst_anchor_g = 0.0
        for t_prime, a in enumerate(anchors, start=1):
            x = float(a.point[0])
            worst_anchor_v = max(worst_anchor_v, abs(
                smoothed_extension_value_1d(model, obj, shift_final, x, r) - a.value))
            if r > 0:
                d = smoothed_extension_derivative_1d(model, obj, shift_final, x, r)
                worst_anchor_g = max(worst_anchor_g, abs(d - float(a.subgradient[0])))
        report.add("final-extension-anchor-values", worst_anchor_v, scale)
        report.add("final-extension-anchor-gradients", worst_anchor_g, scale)
    else:
        for x in sample:
            s_est = smoothed_extension_estimate(model, obj, shift_final, x, r, est)
            err = abs(s_est.value - obj.value(x))
            slack = 3.0 * s_est.value_stderr
            worst_total = max(worst_total, err - bound_total - slack)
            worst_close = max(worst_close, err - bound_close - slack)
        report.add("final-smooth-extension-sup-distance", worst_total, scale)
        report.add("smoothing-closeness", worst_close, scale)

    if r > 0:
        alpha_prime = state.alpha_certificate
        worst_smooth = -np.inf
        U = est.ball_samples(state.dim, 0)
        for _ in range(50):
            x, y = R * sample_ball(state.dim, 2, rng)
            dist = float(np.linalg.norm(x - y))
            if dist < 1e-9:
                continue
            _, gx = extension_envelope(model, obj, shift_final, x[None, :] + r * U)
            _, gy = extension_envelope(model, obj, shift_final, y[None, :] + r * U)
            diff = gx - gy
            mean = diff.mean(axis=0)
            sig = _pair_stderr(diff, est.antithetic)
            worst_smooth = max(worst_smooth,
                               float(np.linalg.norm(mean)) - alpha_prime * dist
                               - 3.0 * float(np.linalg.norm(sig)))
        report.add("empirical-gradient-smoothness", worst_smooth, scale)


# ---------------------------------------------------------------------------
# Separation suite
# ---------------------------------------------------------------------------


def _separation_suite(report: VerifyReport, art: RunArtifacts, trace: RunTrace,
                      rng: np.random.Generator):
    state = art.sep_state
    constraint = art.constraint
    eta_c, R = state.eta_c, state.R
    rows = trace.rows

    mislabeled = 0
    for row in rows:
        inside = constraint.contains(row.x)
        if row.flag_raw == FEASIBLE and not inside:
            mislabeled += 1
        if row.flag_raw == INFEASIBLE and inside:
            mislabeled += 1
    report.add("flag-exactness", float(mislabeled), 0.0)

    if state.halfspaces:
        deep = deep_point_sampler(constraint, eta_c, 500, seed=art.config.seed)
        worst = -np.inf
        for h in state.halfspaces:
            worst = max(worst, float((deep @ h.normal - h.offset).max()))
        report.add("deep-points-never-cut", worst, EXACT_TOL * (1.0 + R))

    feas = state.feasible_points
    worst_members = -np.inf
    for row in rows:
        if row.flag_repaired == FEASIBLE:
            for h in state.halfspaces:
                worst_members = max(worst_members, h.violation(row.x))
            if not constraint.contains(row.x, tol=EXACT_TOL):
                worst_members = max(worst_members, 1.0)
    if worst_members > -np.inf:
        report.add("feasible-responses-consistent", worst_members,
                   EXACT_TOL * (1.0 + R))

    worst_sep = -np.inf
    for row in rows:
        if row.flag_repaired == INFEASIBLE and row.sep_g_hat is not None and feas:
            g = row.sep_g_hat
            cut = float(g @ row.x)
            for p in feas:
                worst_sep = max(worst_sep, float(g @ p) - cut)
    if worst_sep > -np.inf:
        report.add("cuts-keep-protected-points", worst_sep, EXACT_TOL * (1.0 + R))

    budget = eta_c / (4.0 * R)
    worst_budget = -np.inf
    exact_passthrough = -np.inf
    for row in rows:
        if row.flag_raw == INFEASIBLE and row.sep_g_hat is not None:
            dev = float(np.linalg.norm(row.sep_g_hat - row.sep_g_tilde))
            worst_budget = max(worst_budget, dev - budget)
            if eta_c == 0.0:
                exact_passthrough = max(exact_passthrough, dev)
    if worst_budget > -np.inf:
        report.add("rotation-within-budget", worst_budget, EXACT_TOL)
    if eta_c == 0.0 and exact_passthrough > -np.inf:
        report.add("zero-noise-normal-passthrough", exact_passthrough, 0.0)

    worst_case3 = -np.inf
    for row in rows:
        if row.flag_raw == FEASIBLE and row.flag_repaired == INFEASIBLE:
            g = row.sep_g_hat
            offsets = [h.offset for h in state.halfspaces
                       if np.allclose(h.normal, g, atol=1e-12)]
            if not offsets:
                worst_case3 = max(worst_case3, np.inf)
            else:
                worst_case3 = max(worst_case3, min(offsets) - float(g @ row.x))
    if worst_case3 > -np.inf:
        report.add("forwarded-cut-contains-outer-approx", worst_case3,
                   EXACT_TOL * (1.0 + R))
