"""Online repair of approximate separation responses and the constrained wrapper.

The state accumulates an outer approximation K (halfspace list, empty being
all of R^d) and the set of points already answered feasible.  Feasible
answers are only forwarded when the point also lies in K; separating normals
are rotated as little as possible so their halfspace keeps every previously
protected point, which is a Euclidean projection onto a polyhedral cone.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import nnls

from .core import Array, Halfspace, as_vector
from .errors import (AlgorithmQueryOutOfBall, BadEta, BudgetExceeded,
                     DegenerateCone, OutOfDomain)
from .oracles import (FEASIBLE, INFEASIBLE, ApproxFirstOrderOracle,
                      ApproxSeparationOracle)
from .trace import RunTrace, TraceRow
from .transfer_lipschitz import LipschitzTransferState, lipschitz_step

# Membership slack for the outer approximation: exact supports evaluated in
# floating point can miss by a few ulps on the boundary.
K_MEMBERSHIP_TOL = 1e-9


class SeparationTransferState:
    """Outer approximation K_t plus the protected feasible points."""

    def __init__(self, dim: int, R: float, eta_c: float, rho: float):
        if not 0.0 <= eta_c <= rho:
            raise BadEta(f"require 0 <= eta_c <= rho, got eta_c={eta_c}, rho={rho}")
        self.dim = int(dim)
        self.R = float(R)
        self.eta_c = float(eta_c)
        self.rho = float(rho)
        self.halfspaces: list[Halfspace] = []
        self.feasible_points: list[Array] = []
        self.t = 0

    @property
    def rho_certificate(self) -> float:
        """Inscribed radius of the repaired feasible set handed to the algorithm."""
        return self.rho - self.eta_c

    def outer_contains(self, x, tol: float = K_MEMBERSHIP_TOL) -> bool:
        v = as_vector(x, self.dim)
        return all(h.contains(v, tol) for h in self.halfspaces)

    def most_violated(self, x) -> Halfspace:
        v = as_vector(x, self.dim)
        violations = [h.violation(v) for h in self.halfspaces]
        return self.halfspaces[int(np.argmax(violations))]


def cone_project_unit(g_tilde, feasible_points, x_t,
                      fallback_normal=None) -> Array:
    """Closest unit normal to g_tilde whose halfspace through x_t keeps Feas.

    The admissible set is the polyhedral cone {g : <g, p - x_t> <= 0 for all
    protected p}.  The minimizer over unit vectors is the normalized
    Euclidean projection of g_tilde onto the cone, computed by splitting off
    the polar-cone component with a nonnegative least-squares solve
    (Lawson-Hanson active set).  A zero projection means no separating
    direction survives; the caller-supplied exact normal is used then.
    """
    g = as_vector(g_tilde)
    dim = g.shape[0]
    if abs(np.linalg.norm(g) - 1.0) > 1e-9:
        raise ValueError("raw separation normal must be a unit vector")
    if not feasible_points:
        return g
    A = np.stack([as_vector(p, dim) - as_vector(x_t, dim) for p in feasible_points])
    row_scale = 1.0 + np.linalg.norm(A, axis=1)
    if np.all(A @ g <= 1e-12 * row_scale):
        return g
    coeffs, _ = nnls(A.T, g)
    projection = g - A.T @ coeffs
    norm = float(np.linalg.norm(projection))
    if norm <= 1e-9:
        if fallback_normal is None:
            raise DegenerateCone("cone projection vanished and no fallback normal given")
        fb = as_vector(fallback_normal, dim)
        return fb / float(np.linalg.norm(fb))
    return projection / norm


def separation_step(state: SeparationTransferState, x_t, raw: tuple,
                    fallback_normal=None) -> tuple[str, Array | None]:
    """Repair one separation response so all responses stay consistent.

    Feasible and inside K: forward, protect the point.  Feasible but outside
    K: answer infeasible with the most-violated stored halfspace's normal
    (its halfspace through x_t contains K).  Infeasible: rotate the raw
    normal just enough to keep every protected point, then cut.
    """
    x = as_vector(x_t, state.dim)
    if np.linalg.norm(x) > state.R * (1.0 + 1e-9) + 1e-12:
        raise OutOfDomain(f"query norm {np.linalg.norm(x):.6g} exceeds R = {state.R:.6g}")
    flag, g_tilde = raw
    state.t += 1
    if flag == FEASIBLE:
        if state.outer_contains(x):
            state.feasible_points.append(x.copy())
            return FEASIBLE, None
        g_hat = state.most_violated(x).normal.copy()
        return INFEASIBLE, g_hat
    g_hat = cone_project_unit(g_tilde, state.feasible_points, x, fallback_normal)
    state.halfspaces.append(Halfspace(g_hat, x.copy()))
    return INFEASIBLE, g_hat


class ExchangeResult:
    """One constrained exchange: repaired first-order pair plus separation."""

    __slots__ = ("f_hat", "g_hat", "flag", "normal")

    def __init__(self, f_hat, g_hat, flag, normal):
        self.f_hat = f_hat
        self.g_hat = g_hat
        self.flag = flag
        self.normal = normal

    @property
    def feasible(self) -> bool:
        return self.flag == FEASIBLE


class ConstrainedExchange:
    """Channel for constrained runs: each query hits both oracles once."""

    def __init__(self, f_state: LipschitzTransferState,
                 sep_state: SeparationTransferState,
                 f_oracle: ApproxFirstOrderOracle,
                 sep_oracle: ApproxSeparationOracle,
                 T: int, opt_value: float | None = None):
        self._f_state = f_state
        self._sep_state = sep_state
        self._f_oracle = f_oracle
        self._sep_oracle = sep_oracle
        self.dim = f_state.dim
        self.R = f_state.R
        self.T = int(T)
        self.M = f_state.lipschitz_certificate
        self.alpha = None
        self.rho = sep_state.rho_certificate
        self.exchanges = 0
        self.rows: list[TraceRow] = []
        self._opt_value = opt_value
        self._best_exact = np.inf

    def query(self, x) -> ExchangeResult:
        if self.exchanges >= self.T:
            raise BudgetExceeded(f"exchange budget T = {self.T} exhausted")
        q = as_vector(x, self.dim)
        if np.linalg.norm(q) > self.R * (1.0 + 1e-9) + 1e-12:
            raise AlgorithmQueryOutOfBall(
                f"algorithm query norm {np.linalg.norm(q):.6g} exceeds R = {self.R:.6g}")
        t = self.exchanges + 1
        f_tilde, g_tilde = self._f_oracle.query(q, t)
        raw_flag, raw_normal = self._sep_oracle.query(q, t)
        f_hat, g_hat = lipschitz_step(self._f_state, q, f_tilde, g_tilde)
        fallback = None
        if raw_flag == INFEASIBLE:
            fallback = self._sep_oracle.fallback_normal(q)
        rep_flag, rep_normal = separation_step(self._sep_state, q,
                                               (raw_flag, raw_normal), fallback)
        f_exact = self._f_oracle.objective.value(q)
        if self._sep_oracle.constraint.contains(q):
            self._best_exact = min(self._best_exact, f_exact)
        gap = None
        if self._opt_value is not None and np.isfinite(self._best_exact):
            gap = self._best_exact - self._opt_value
        self.rows.append(TraceRow(
            t=t, x=q.copy(), f_tilde=float(f_tilde), g_tilde=np.array(g_tilde),
            f_hat=float(f_hat), g_hat=np.array(g_hat), shift=self._f_state.last_shift,
            flag_raw=raw_flag, flag_repaired=rep_flag,
            sep_g_tilde=None if raw_normal is None else np.array(raw_normal),
            sep_g_hat=None if rep_normal is None else np.array(rep_normal),
            f_exact=f_exact, best_gap=gap))
        self.exchanges = t
        return ExchangeResult(f_hat, g_hat, rep_flag, rep_normal)


def run_wrapped_constrained(algorithm, f_oracle: ApproxFirstOrderOracle,
                            sep_oracle: ApproxSeparationOracle, T: int,
                            ground_set: str = "continuous",
                            opt_value: float | None = None,
                            f_state: LipschitzTransferState | None = None,
                            sep_state: SeparationTransferState | None = None,
                            ) -> tuple[Array, RunTrace]:
    """Mediate T constrained exchanges (first-order plus separation).

    ``ground_set`` is recorded for the bound audit only; lattice structure is
    handled entirely by the algorithm, which already knows it.
    """
    if ground_set not in ("continuous", "integer-lattice"):
        raise ValueError(f"unknown ground set {ground_set!r}")
    if f_state is None:
        f_state = LipschitzTransferState(f_oracle.dim, f_oracle.objective.M,
                                         f_oracle.R, f_oracle.eta)
    if sep_state is None:
        sep_state = SeparationTransferState(f_oracle.dim, sep_oracle.R,
                                            sep_oracle.eta_c, sep_oracle.rho)
    channel = ConstrainedExchange(f_state, sep_state, f_oracle, sep_oracle, T, opt_value)
    x_bar = as_vector(algorithm.run(channel), f_state.dim)
    return x_bar, RunTrace(rows=channel.rows, final_point=x_bar)
