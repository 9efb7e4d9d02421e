"""Online repair of approximate first-order pairs for Lipschitz objectives.

The state keeps a running piecewise-max model.  Each query appends a new
affine piece, shifted down just enough that it never rises above the model
at previously queried points; the pair handed to the algorithm is then exact
first-order information of the (convex, slightly-fatter-Lipschitz) model, at
the cost of a cumulative downward drift of at most 2*eta per step.
"""
from __future__ import annotations

import numpy as np

from .core import (ACTIVE_RTOL, Array, PREFER_NEWEST, PiecewiseMaxFunction,
                   as_vector)
from .errors import AlgorithmQueryOutOfBall, BudgetExceeded, OutOfDomain
from .oracles import ApproxFirstOrderOracle
from .trace import RunTrace, TraceRow

# Shifts below this relative size are floating-point noise: candidate terms
# cancel exactly in real arithmetic for honest zero-noise data, and clamping
# keeps the eta=0 pass-through bit-identical.
SHIFT_CLAMP_RTOL = 1e-12


class LipschitzTransferState:
    """Running model F_{t-1} plus the (M, R, eta) instance parameters."""

    def __init__(self, dim: int, M: float, R: float, eta: float):
        self.dim = int(dim)
        self.M = float(M)
        self.R = float(R)
        self.eta = float(eta)
        self.model = PiecewiseMaxFunction(self.dim)
        self.t = 0
        self.last_shift = 0.0

    @property
    def lipschitz_certificate(self) -> float:
        """Every piece slope stays within this norm bound."""
        return self.M + self.eta / (2.0 * self.R)


def compute_shift(state: LipschitzTransferState, x_t, f_tilde: float, g_tilde) -> float:
    """Minimal downward shift keeping the new piece below the model at anchors.

    Closed form: the constraint set is one-sided linear inequalities in the
    shift, so the minimum is max(0, max over anchors of the piece excess).
    """
    x = as_vector(x_t, state.dim)
    g = as_vector(g_tilde, state.dim)
    anchors = state.model.anchors
    if not anchors:
        return 0.0
    X = np.stack([a.point for a in anchors])
    model_vals = state.model.values(X)
    candidates = float(f_tilde) + (X - x) @ g - model_vals
    s = max(0.0, float(candidates.max()))
    if s <= SHIFT_CLAMP_RTOL * (1.0 + abs(float(f_tilde))):
        return 0.0
    return s


def lipschitz_step(state: LipschitzTransferState, x_t, f_tilde: float,
                   g_tilde) -> tuple[float, Array]:
    """Repair one raw pair: append the shifted piece, emit the model's pair.

    Near-ties between the fresh piece and the old model resolve to the fresh
    piece (prefer-newest), which makes the zero-noise path return the raw
    response unchanged.
    """
    x = as_vector(x_t, state.dim)
    g = as_vector(g_tilde, state.dim)
    if np.linalg.norm(x) > state.R * (1.0 + 1e-9) + 1e-12:
        raise OutOfDomain(f"query norm {np.linalg.norm(x):.6g} exceeds R = {state.R:.6g}")
    s = compute_shift(state, x, f_tilde, g)
    new_val = float(f_tilde) - s
    old_val = state.model.value(x) if state.model.num_pieces else None
    t = state.t + 1
    state.model.append_piece(g, new_val - float(g @ x), t)
    tol = ACTIVE_RTOL * (1.0 + abs(new_val))
    if old_val is not None and old_val > new_val + tol:
        f_hat = old_val
        g_hat = state.model.subgradient(x, PREFER_NEWEST)
    else:
        f_hat = new_val
        g_hat = g.copy()
    state.model.add_anchor(x, f_hat, g_hat)
    state.t = t
    state.last_shift = s
    return f_hat, g_hat


class FirstOrderExchange:
    """Channel a wrapped algorithm talks to: repaired pairs, certified constants.

    The algorithm sees only this object.  ``M`` is already inflated by
    eta/(2R) so step sizes match the instance class the repaired data
    actually belongs to.
    """

    def __init__(self, state: LipschitzTransferState, oracle: ApproxFirstOrderOracle,
                 T: int, opt_value: float | None = None, alpha: float | None = None):
        self._state = state
        self._oracle = oracle
        self.dim = state.dim
        self.R = state.R
        self.T = int(T)
        self.M = state.lipschitz_certificate
        self.alpha = alpha
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
        f_hat, g_hat = lipschitz_step(self._state, q, f_tilde, g_tilde)
        f_exact = self._oracle.objective.value(q)
        self._best_exact = min(self._best_exact, f_exact)
        gap = None if self._opt_value is None else self._best_exact - self._opt_value
        self.rows.append(TraceRow(
            t=t, x=q.copy(), f_tilde=float(f_tilde), g_tilde=np.array(g_tilde),
            f_hat=float(f_hat), g_hat=np.array(g_hat), shift=self._state.last_shift,
            f_exact=f_exact, best_gap=gap))
        self.exchanges = t
        return f_hat, g_hat


def run_wrapped(algorithm, oracle: ApproxFirstOrderOracle, T: int,
                opt_value: float | None = None,
                state: LipschitzTransferState | None = None) -> tuple[Array, RunTrace]:
    """Mediate T exchanges between a first-order algorithm and the oracle."""
    if state is None:
        state = LipschitzTransferState(oracle.dim, oracle.objective.M, oracle.R, oracle.eta)
    channel = FirstOrderExchange(state, oracle, T, opt_value)
    x_bar = as_vector(algorithm.run(channel), state.dim)
    return x_bar, RunTrace(rows=channel.rows, final_point=x_bar)
