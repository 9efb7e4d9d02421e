"""Reference first-order algorithms run against an exchange channel.

An algorithm sees only its channel: certified constants (``dim``, ``R``,
``T``, ``M``, ``alpha``, ``rho``) plus ``first_order(x)`` for unconstrained
runs or ``query(x)`` for constrained ones.  It must keep every query inside
the radius-R ball and report one point after at most T exchanges.  Given the
same channel responses, an algorithm's query sequence is deterministic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Array, as_vector, project_ball
from .errors import BadArgs, BudgetExceeded, NoFeasiblePoint, NumericalCollapse

PROJECTED_SUBGRADIENT = "projected-subgradient"
NESTEROV_AGD = "nesterov-agd"
ELLIPSOID = "ellipsoid"
LATTICE_ENUMERATOR = "lattice-enumerator"

ALGORITHM_KINDS = (PROJECTED_SUBGRADIENT, NESTEROV_AGD, ELLIPSOID, LATTICE_ENUMERATOR)


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: str
    T: int
    start: tuple = ()
    step_policy: str = "fixed"  # subgradient: "fixed" R/(M sqrt(T)) or "decaying" R/(M sqrt(t))

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise BadArgs(f"unknown algorithm kind {self.kind!r}")
        if self.step_policy not in ("fixed", "decaying"):
            raise BadArgs(f"unknown step policy {self.step_policy!r}")
        if self.T < 1:
            raise BadArgs("T must be at least 1")

    def start_point(self, dim: int) -> Array:
        if not self.start:
            return np.zeros(dim)
        return as_vector(list(self.start), dim)


class ProjectedSubgradient:
    """Projected subgradient method reporting the best iterate it has seen.

    "Best" is judged by the received values only; the exact objective stays
    sealed behind the channel.
    """

    kind = PROJECTED_SUBGRADIENT

    def __init__(self, config: AlgorithmConfig):
        self.config = config

    def run(self, channel) -> Array:
        T = self.config.T
        R, M = channel.R, channel.M
        x = project_ball(self.config.start_point(channel.dim), R)
        best_x, best_val = x, np.inf
        for t in range(1, T + 1):
            f, g = channel.first_order(x)
            if f < best_val:
                best_val, best_x = f, x
            denom = M * math.sqrt(T if self.config.step_policy == "fixed" else t)
            step = R / denom if denom > 0 else 0.0
            x = project_ball(x - step * np.asarray(g), R)
        return best_x


class NesterovAGD:
    """Accelerated gradient descent with the standard momentum schedule.

    Step size 1/alpha with alpha taken from the channel (the wrapper hands
    the inflated certificate there).  Extrapolated query points are projected
    back into the radius-R ball to honor the query-domain contract.
    """

    kind = NESTEROV_AGD

    def __init__(self, config: AlgorithmConfig):
        self.config = config

    def run(self, channel) -> Array:
        if channel.alpha is None or channel.alpha <= 0:
            raise BadArgs("accelerated method needs a positive smoothness constant")
        R = channel.R
        step = 1.0 / channel.alpha
        x_prev = project_ball(self.config.start_point(channel.dim), R)
        y = x_prev
        t_k = 1.0
        x = x_prev
        for _ in range(self.config.T):
            _, g = channel.first_order(y)
            x = project_ball(y - step * np.asarray(g), R)
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_k * t_k))
            y = project_ball(x + ((t_k - 1.0) / t_next) * (x - x_prev), R)
            x_prev, t_k = x, t_next
        return x


class Ellipsoid:
    """Central-cut ellipsoid method over feasibility and objective cuts.

    Starts from the ball of radius R.  Centers that drift outside that ball
    are cut away internally without spending an oracle exchange.  Reports the
    best queried point answered feasible, judged by received values.
    """

    kind = ELLIPSOID

    def __init__(self, config: AlgorithmConfig):
        self.config = config

    def run(self, channel) -> Array:
        dim, R = channel.dim, channel.R
        if dim < 2:
            raise BadArgs("ellipsoid update needs dimension >= 2")
        center = np.zeros(dim)
        P = (R * R) * np.eye(dim)
        best_x, best_val = None, np.inf
        for _ in range(self.config.T):
            guard = 0
            while np.linalg.norm(center) > R:
                center, P = self._cut(center, P, center / np.linalg.norm(center), dim)
                guard += 1
                if guard > 50 * dim:
                    raise NumericalCollapse("ellipsoid center cannot re-enter B(R)")
            res = channel.query(center)
            if res.feasible:
                if res.f_hat < best_val:
                    best_val, best_x = res.f_hat, center.copy()
                g = np.asarray(res.g_hat)
                if np.linalg.norm(g) <= 1e-12:
                    return center  # objective plateau: the center is optimal for the model
            else:
                g = np.asarray(res.normal)
            center, P = self._cut(center, P, g, dim)
        if best_x is None:
            raise NoFeasiblePoint("no queried center was answered feasible")
        return best_x

    @staticmethod
    def _cut(center: Array, P: Array, g: Array, dim: int) -> tuple[Array, Array]:
        Pg = P @ g
        denom = float(g @ Pg)
        if not np.isfinite(denom) or denom <= 0.0:
            raise NumericalCollapse("ellipsoid matrix lost positive definiteness")
        b = Pg / math.sqrt(denom)
        center = center - b / (dim + 1.0)
        P = (dim * dim / (dim * dim - 1.0)) * (P - (2.0 / (dim + 1.0)) * np.outer(b, b))
        return center, 0.5 * (P + P.T)


def ellipsoid_error_bound(T: int, M: float, R: float, rho: float, dim: int) -> float:
    """Classical volume-argument guarantee for the central-cut ellipsoid."""
    return 2.0 * M * R * (R / rho) * math.exp(-T / (2.0 * dim * (dim + 1.0)))


class LatticeEnumerator:
    """Queries every integer point of B(R) once; returns the best feasible one.

    Demo algorithm for ground sets with known lattice structure; only viable
    at desk scale (the lattice must fit in the exchange budget).
    """

    kind = LATTICE_ENUMERATOR

    def __init__(self, config: AlgorithmConfig):
        self.config = config

    @staticmethod
    def lattice_points(dim: int, R: float) -> list[np.ndarray]:
        k = int(math.floor(R))
        pts = [np.array(p, dtype=np.float64)
               for p in itertools.product(range(-k, k + 1), repeat=dim)]
        return [p for p in pts if np.linalg.norm(p) <= R + 1e-12]

    def run(self, channel) -> Array:
        points = self.lattice_points(channel.dim, channel.R)
        if len(points) > self.config.T:
            raise BudgetExceeded(
                f"{len(points)} lattice points exceed the exchange budget T = {self.config.T}")
        best_x, best_val = None, np.inf
        for p in points:
            res = channel.query(p)
            if res.feasible and res.f_hat < best_val:
                best_val, best_x = res.f_hat, p
        if best_x is None:
            raise NoFeasiblePoint("no lattice point was answered feasible")
        return best_x


_ALGORITHMS = {
    PROJECTED_SUBGRADIENT: ProjectedSubgradient,
    NESTEROV_AGD: NesterovAGD,
    ELLIPSOID: Ellipsoid,
    LATTICE_ENUMERATOR: LatticeEnumerator,
}


def make_algorithm(config: AlgorithmConfig):
    return _ALGORITHMS[config.kind](config)


def subgradient_error_bound(T: int, M: float, R: float) -> float:
    """Classical fixed-step projected subgradient guarantee."""
    return M * R / math.sqrt(T)


def agd_error_bound(T: int, alpha: float, R: float) -> float:
    """Classical accelerated-gradient guarantee for smooth convex objectives."""
    return 2.0 * alpha * R * R / (T * T)
