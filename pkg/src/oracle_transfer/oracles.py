"""Test objectives, constraint sets, and guaranteed-accuracy noise models.

A noise model never returns a response outside its accuracy band: raw
perturbations are projected back onto the band before release, so every
model is a valid approximate oracle by construction.  Responses are a pure
function of (seed, query index, point) and can be replayed bit-exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Array, as_points, as_vector, sample_ball
from .errors import BadArgs, BadDelta, BadEta, DimError, OutOfDomain

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"

_MASK64 = (1 << 64) - 1


def keyed_rng(seed: int, index: int, x: Array | None = None) -> np.random.Generator:
    """Generator keyed deterministically by (seed, index, point bits)."""
    entropy = [int(seed) & _MASK64, int(index) & _MASK64]
    if x is not None:
        bits = np.asarray(x, dtype=np.float64).reshape(-1).view(np.uint64)
        entropy.extend(int(b) for b in bits)
    return np.random.default_rng(np.random.SeedSequence(entropy))


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


class Objective:
    """Convex test objective with closed-form value and one subgradient.

    Values and subgradients are defined on the ball of radius 4R (smoothing
    probes reach beyond B(R)); the declared Lipschitz constant M, and the
    gradient-Lipschitz constant alpha when present, are certificates on that
    larger ball and are spot-checked at construction.
    """

    kind: str = "base"

    def __init__(self, dim, R, M, alpha, minimizer, opt_value):
        self.dim = int(dim)
        self.R = float(R)
        self.M = float(M)
        self.alpha = None if alpha is None else float(alpha)
        self.minimizer = as_vector(minimizer, self.dim)
        self.opt_value = float(opt_value)
        self._validate_certificates()

    # subclasses implement _value / _subgradient on raw arrays
    def _value(self, x: Array) -> float:
        raise NotImplementedError

    def _subgradient(self, x: Array) -> Array:
        raise NotImplementedError

    def value(self, x) -> float:
        return self._value(as_vector(x, self.dim))

    def subgradient(self, x) -> Array:
        return self._subgradient(as_vector(x, self.dim))

    def values(self, X) -> Array:
        P = as_points(X, self.dim)
        return np.array([self._value(p) for p in P])

    def subgradients(self, X) -> Array:
        P = as_points(X, self.dim)
        return np.stack([self._subgradient(p) for p in P])

    def params(self) -> dict:
        raise NotImplementedError

    def _validate_certificates(self, n_samples: int = 64, tol: float = 1e-6):
        rng = np.random.default_rng(20240817)
        X = 4.0 * self.R * sample_ball(self.dim, n_samples, rng)
        vals = self.values(X)
        grads = self.subgradients(X)
        norms = np.linalg.norm(grads, axis=1)
        if norms.max() > self.M * (1.0 + tol) + tol:
            raise BadArgs(f"{self.kind}: declared M={self.M} is not a valid "
                          f"Lipschitz certificate (saw gradient norm {norms.max():.6g})")
        # finite-difference slope spot check
        h = 1e-6
        U = sample_ball(self.dim, n_samples, rng)
        U /= np.maximum(np.linalg.norm(U, axis=1), 1e-12)[:, None]
        fd = np.abs(self.values(X + h * U) - vals) / h
        if fd.max() > self.M * (1.0 + tol) + tol:
            raise BadArgs(f"{self.kind}: M={self.M} fails finite-difference check")
        if self.alpha is not None:
            Y = 4.0 * self.R * sample_ball(self.dim, n_samples, rng)
            dg = np.linalg.norm(self.subgradients(X) - self.subgradients(Y), axis=1)
            dx = np.linalg.norm(X - Y, axis=1)
            if np.any(dg > self.alpha * dx * (1.0 + tol) + tol):
                raise BadArgs(f"{self.kind}: declared alpha={self.alpha} is not a "
                              "valid smoothness certificate")
        if abs(self.value(self.minimizer) - self.opt_value) > 1e-9 * (1 + abs(self.opt_value)):
            raise BadArgs(f"{self.kind}: opt_value does not match value at minimizer")
        if np.linalg.norm(self.minimizer) > self.R * (1.0 + 1e-9):
            raise BadArgs(f"{self.kind}: minimizer must lie in B(R)")
        # opt_value is the minimum over B(R); the wider 4R domain may dip lower
        inner = self.values(self.R * sample_ball(self.dim, n_samples, rng))
        if inner.min() < self.opt_value - 1e-9:
            raise BadArgs(f"{self.kind}: sampled value on B(R) below declared optimum")


class MaxOfAffines(Objective):
    """Maximum of given affine pieces; subgradient is the first active piece."""

    kind = "max-of-affines"

    def __init__(self, dim, R, slopes, intercepts, minimizer, opt_value, M=None):
        self._A = as_points(slopes, int(dim))
        self._b = np.asarray(intercepts, dtype=np.float64).reshape(-1)
        if self._A.shape[0] != self._b.shape[0]:
            raise BadArgs("slopes and intercepts must have equal length")
        if M is None:
            M = float(np.linalg.norm(self._A, axis=1).max())
        super().__init__(dim, R, M, None, minimizer, opt_value)

    def _piece_values(self, x: Array) -> Array:
        return self._A @ x + self._b

    def _value(self, x: Array) -> float:
        return float(self._piece_values(x).max())

    def _subgradient(self, x: Array) -> Array:
        # deterministic at kinks: first piece attaining the exact float max
        return self._A[int(np.argmax(self._piece_values(x)))].copy()

    def params(self) -> dict:
        return {"slopes": self._A.tolist(), "intercepts": self._b.tolist()}


class AbsDistance(Objective):
    """Coordinate-wise absolute distance sum_i |x_i - a_i| (an l1 norm)."""

    kind = "abs-distance"

    def __init__(self, dim, R, anchor):
        self._a = as_vector(anchor, int(dim))
        super().__init__(dim, R, math.sqrt(int(dim)), None, self._a, 0.0)

    def _value(self, x: Array) -> float:
        return float(np.abs(x - self._a).sum())

    def _subgradient(self, x: Array) -> Array:
        # sign() picks the zero subgradient at kinks, a fixed valid choice
        return np.sign(x - self._a)

    def params(self) -> dict:
        return {"anchor": self._a.tolist()}


class Quadratic(Objective):
    """0.5 * alpha * ||x - a||^2."""

    kind = "quadratic"

    def __init__(self, dim, R, anchor, alpha=1.0):
        self._a = as_vector(anchor, int(dim))
        a = float(alpha)
        M = a * (4.0 * float(R) + float(np.linalg.norm(self._a)))
        super().__init__(dim, R, M, a, self._a, 0.0)

    def _value(self, x: Array) -> float:
        d = x - self._a
        return 0.5 * self.alpha * float(d @ d)

    def _subgradient(self, x: Array) -> Array:
        return self.alpha * (x - self._a)

    def params(self) -> dict:
        return {"anchor": self._a.tolist(), "alpha": self.alpha}


class LogSumExp(Objective):
    """tau * log sum exp((<a_i, x> + b_i) / tau); smooth with alpha = max||a_i||^2 / tau."""

    kind = "log-sum-exp"

    def __init__(self, dim, R, slopes, intercepts, temperature, minimizer, opt_value):
        self._A = as_points(slopes, int(dim))
        self._b = np.asarray(intercepts, dtype=np.float64).reshape(-1)
        self._tau = float(temperature)
        if self._tau <= 0:
            raise BadArgs("temperature must be positive")
        row_norms = np.linalg.norm(self._A, axis=1)
        M = float(row_norms.max())
        alpha = float(row_norms.max() ** 2 / self._tau)
        super().__init__(dim, R, M, alpha, minimizer, opt_value)

    def _logits(self, x: Array) -> Array:
        return (self._A @ x + self._b) / self._tau

    def _value(self, x: Array) -> float:
        z = self._logits(x)
        m = z.max()
        return self._tau * (m + math.log(np.exp(z - m).sum()))

    def _subgradient(self, x: Array) -> Array:
        z = self._logits(x)
        p = np.exp(z - z.max())
        p /= p.sum()
        return self._A.T @ p

    def params(self) -> dict:
        return {"slopes": self._A.tolist(), "intercepts": self._b.tolist(),
                "temperature": self._tau, "minimizer": self.minimizer.tolist(),
                "opt_value": self.opt_value}


class EuclideanNorm(Objective):
    """||x - a||, subgradient (x - a)/||x - a|| and the zero vector at a."""

    kind = "euclidean-norm"

    def __init__(self, dim, R, anchor):
        self._a = as_vector(anchor, int(dim))
        super().__init__(dim, R, 1.0, None, self._a, 0.0)

    def _value(self, x: Array) -> float:
        return float(np.linalg.norm(x - self._a))

    def _subgradient(self, x: Array) -> Array:
        d = x - self._a
        n = float(np.linalg.norm(d))
        if n == 0.0:
            return np.zeros_like(d)
        return d / n

    def params(self) -> dict:
        return {"anchor": self._a.tolist()}


_OBJECTIVE_KINDS = {
    cls.kind: cls for cls in (MaxOfAffines, AbsDistance, Quadratic, LogSumExp, EuclideanNorm)
}


def objective_from_config(cfg: dict, dim: int, R: float) -> Objective:
    kind = cfg.get("kind")
    if kind not in _OBJECTIVE_KINDS:
        raise BadArgs(f"unknown objective kind {kind!r}")
    params = {k: v for k, v in cfg.items() if k != "kind"}
    return _OBJECTIVE_KINDS[kind](dim, R, **params)


def objective_to_config(obj: Objective) -> dict:
    return {"kind": obj.kind, **obj.params()}


# ---------------------------------------------------------------------------
# First-order noise models
# ---------------------------------------------------------------------------

NOISE_KINDS = ("zero", "uniform-random", "adversarial-slope-flip", "value-bias")


@dataclass(frozen=True)
class NoiseModel:
    """Accuracy-eta perturbation of first-order responses.

    ``adversarial-slope-flip`` tilts the gradient toward a fixed attractor
    point (default the origin) with magnitude exactly eta/(2R): queried on a
    constant objective this produces raw data with no convex extension.
    """

    kind: str = "zero"
    eta: float = 0.0
    seed: int = 0
    attractor: tuple = ()

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise BadArgs(f"unknown noise kind {self.kind!r}")
        if self.eta < 0:
            raise BadArgs("eta must be nonnegative")

    def perturb(self, x: Array, t: int, f: float, g: Array, R: float) -> tuple[float, Array]:
        eta = self.eta
        if self.kind == "zero" or eta == 0.0:
            return f, g
        grad_band = eta / (2.0 * R)
        if self.kind == "value-bias":
            return f + eta, g
        if self.kind == "adversarial-slope-flip":
            target = np.zeros_like(x) if not self.attractor else as_vector(
                list(self.attractor), x.shape[0])
            u = target - x
            nu = float(np.linalg.norm(u))
            if nu < 1e-15:
                return f, g
            return f, g + (grad_band / nu) * u
        # uniform-random: value noise uniform in [-eta, eta], gradient noise
        # uniform in the radius-eta/(2R) ball
        rng = keyed_rng(self.seed, t, x)
        df = rng.uniform(-eta, eta)
        dg = grad_band * sample_ball(x.shape[0], 1, rng)[0]
        return _clamp_value(f, f + df, eta), _clamp_gradient(g, g + dg, grad_band)


def _clamp_value(f: float, f_noisy: float, eta: float) -> float:
    return f + float(np.clip(f_noisy - f, -eta, eta))


def _clamp_gradient(g: Array, g_noisy: Array, radius: float) -> Array:
    d = g_noisy - g
    n = float(np.linalg.norm(d))
    if n <= radius:
        return g_noisy
    return g + d * (radius / n)


def exact_first_order(obj: Objective, x) -> tuple[float, Array]:
    """Value and one subgradient at x; domain is the ball of radius 4R."""
    v = as_vector(x, obj.dim)
    if np.linalg.norm(v) > 4.0 * obj.R * (1.0 + 1e-9) + 1e-12:
        raise OutOfDomain(f"query norm {np.linalg.norm(v):.6g} exceeds 4R = {4 * obj.R:.6g}")
    return obj._value(v), obj._subgradient(v)


def approx_first_order(
    obj: Objective, noise: NoiseModel, x, t: int
) -> tuple[float, Array]:
    """Accuracy-eta response: |f~ - f| <= eta, ||g~ - g|| <= eta/(2R)."""
    v = as_vector(x, obj.dim)
    f, g = exact_first_order(obj, v)
    return noise.perturb(v, t, f, g, obj.R)


class ApproxFirstOrderOracle:
    """Bundles an exact objective with a noise model; the queryable oracle."""

    def __init__(self, objective: Objective, noise: NoiseModel):
        self.objective = objective
        self.noise = noise

    @property
    def eta(self) -> float:
        return self.noise.eta

    @property
    def dim(self) -> int:
        return self.objective.dim

    @property
    def R(self) -> float:
        return self.objective.R

    def query(self, x, t: int) -> tuple[float, Array]:
        return approx_first_order(self.objective, self.noise, x, t)


# ---------------------------------------------------------------------------
# Constraint sets
# ---------------------------------------------------------------------------


class Constraint:
    """Compact convex set inside B(R) containing a ball of radius rho.

    ``deep_center`` is the stored certificate point for the inscribed ball.
    """

    kind: str = "base"

    def __init__(self, dim, R, rho, deep_center):
        self.dim = int(dim)
        self.R = float(R)
        self.rho = float(rho)
        self.deep_center = as_vector(deep_center, self.dim)
        if self.rho <= 0:
            raise BadArgs("inscribed radius rho must be positive")
        if not self.deep_contains(self.deep_center, self.rho, tol=1e-9):
            raise BadArgs(f"{self.kind}: certificate ball of radius rho does not fit")

    def contains(self, x, tol: float = 1e-12) -> bool:
        raise NotImplementedError

    def deep_contains(self, x, delta: float, tol: float = 1e-12) -> bool:
        """Membership in the shrunken set of delta-deep points."""
        raise NotImplementedError

    def separation_normal(self, x) -> Array:
        """Unit normal of a supporting halfspace through x for x outside."""
        raise NotImplementedError

    def sample_box(self) -> tuple[Array, Array]:
        """Axis-aligned box used as the rejection-sampling domain."""
        r = self.R
        return -r * np.ones(self.dim), r * np.ones(self.dim)

    def params(self) -> dict:
        raise NotImplementedError


class BallConstraint(Constraint):
    kind = "ball"

    def __init__(self, dim, center, radius, R=None, rho=None):
        center = as_vector(center, int(dim))
        radius = float(radius)
        if R is None:
            R = float(np.linalg.norm(center)) + radius
        if float(np.linalg.norm(center)) + radius > R * (1.0 + 1e-9):
            raise BadArgs("ball is not contained in B(R)")
        if rho is None:
            rho = radius
        elif rho > radius * (1.0 + 1e-9):
            raise BadArgs("declared rho exceeds the ball radius")
        self.center = center
        self.radius = radius
        super().__init__(dim, R, rho, center)

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(as_vector(x, self.dim) - self.center)) <= self.radius + tol

    def deep_contains(self, x, delta, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(as_vector(x, self.dim) - self.center)) <= self.radius - delta + tol

    def separation_normal(self, x) -> Array:
        d = as_vector(x, self.dim) - self.center
        n = float(np.linalg.norm(d))
        if n == 0.0:
            raise BadArgs("separation normal undefined at the center")
        return d / n

    def sample_box(self):
        r = self.radius
        return self.center - r, self.center + r

    def params(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius,
                "R": self.R, "rho": self.rho}


class BoxConstraint(Constraint):
    kind = "box"

    def __init__(self, dim, lo, hi, R=None, rho=None):
        lo = as_vector(lo, int(dim))
        hi = as_vector(hi, int(dim))
        if np.any(hi <= lo):
            raise BadArgs("box requires lo < hi componentwise")
        self.lo, self.hi = lo, hi
        corner = np.maximum(np.abs(lo), np.abs(hi))
        enclosing = float(np.linalg.norm(corner))
        if R is None:
            R = enclosing
        elif enclosing > R * (1.0 + 1e-9):
            raise BadArgs("box is not contained in B(R)")
        half = float((hi - lo).min() / 2.0)
        if rho is None:
            rho = half
        elif rho > half * (1.0 + 1e-9):
            raise BadArgs("declared rho exceeds the inscribed half-width")
        super().__init__(dim, R, rho, (lo + hi) / 2.0)

    def contains(self, x, tol: float = 1e-12) -> bool:
        v = as_vector(x, self.dim)
        return bool(np.all(v >= self.lo - tol) and np.all(v <= self.hi + tol))

    def deep_contains(self, x, delta, tol: float = 1e-12) -> bool:
        v = as_vector(x, self.dim)
        return bool(np.all(v >= self.lo + delta - tol) and np.all(v <= self.hi - delta + tol))

    def separation_normal(self, x) -> Array:
        v = as_vector(x, self.dim)
        over = v - self.hi
        under = self.lo - v
        i_over, i_under = int(np.argmax(over)), int(np.argmax(under))
        normal = np.zeros(self.dim)
        if over[i_over] >= under[i_under]:
            normal[i_over] = 1.0
        else:
            normal[i_under] = -1.0
        return normal

    def sample_box(self):
        return self.lo.copy(), self.hi.copy()

    def params(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(),
                "R": self.R, "rho": self.rho}


class PolytopeConstraint(Constraint):
    """Intersection of halfspaces <n_i, x> <= b_i with unit normals n_i."""

    kind = "polytope"

    def __init__(self, dim, normals, offsets, R, rho, deep_center):
        A = as_points(normals, int(dim))
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < 1e-12):
            raise BadArgs("polytope normals must be nonzero")
        b = np.asarray(offsets, dtype=np.float64).reshape(-1) / norms
        self._A = A / norms[:, None]
        self._b = b
        super().__init__(dim, R, rho, deep_center)

    def contains(self, x, tol: float = 1e-12) -> bool:
        v = as_vector(x, self.dim)
        return bool(np.all(self._A @ v <= self._b + tol))

    def deep_contains(self, x, delta, tol: float = 1e-12) -> bool:
        v = as_vector(x, self.dim)
        return bool(np.all(self._A @ v <= self._b - delta + tol))

    def separation_normal(self, x) -> Array:
        v = as_vector(x, self.dim)
        return self._A[int(np.argmax(self._A @ v - self._b))].copy()

    def params(self) -> dict:
        return {"normals": self._A.tolist(), "offsets": self._b.tolist(),
                "R": self.R, "rho": self.rho, "deep_center": self.deep_center.tolist()}


_CONSTRAINT_KINDS = {cls.kind: cls for cls in (BallConstraint, BoxConstraint, PolytopeConstraint)}


def constraint_from_config(cfg: dict, dim: int) -> Constraint:
    kind = cfg.get("kind")
    if kind not in _CONSTRAINT_KINDS:
        raise BadArgs(f"unknown constraint kind {kind!r}")
    params = {k: v for k, v in cfg.items() if k != "kind"}
    return _CONSTRAINT_KINDS[kind](dim, **params)


def constraint_to_config(c: Constraint) -> dict:
    return {"kind": c.kind, **c.params()}


# ---------------------------------------------------------------------------
# Separation oracle and its noise model
# ---------------------------------------------------------------------------

SEPARATION_NOISE_KINDS = ("zero", "random-rotation", "adversarial-toward-deep")


@dataclass(frozen=True)
class SeparationNoiseModel:
    """Rotates exact separating normals within the eta_C/(4R) error band.

    The membership flag is always exact; only the reported normal is
    perturbed, and the rotation angle is clamped so the chord between the
    exact and reported unit normals never exceeds eta_C/(4R).
    """

    kind: str = "zero"
    eta_c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SEPARATION_NOISE_KINDS:
            raise BadArgs(f"unknown separation noise kind {self.kind!r}")
        if self.eta_c < 0:
            raise BadArgs("eta_c must be nonnegative")

    def perturb_normal(self, g: Array, x: Array, t: int, R: float,
                       deep_center: Array) -> Array:
        if self.kind == "zero" or self.eta_c == 0.0 or g.shape[0] < 2:
            return g
        chord = min(self.eta_c / (4.0 * R), 2.0)
        theta_max = 2.0 * math.asin(chord / 2.0)
        if self.kind == "adversarial-toward-deep":
            v = _unit_orthogonal(deep_center - x, g)
            theta = theta_max
        else:
            rng = keyed_rng(self.seed, t, x)
            v = _unit_orthogonal(rng.standard_normal(g.shape[0]), g)
            theta = rng.uniform(0.0, theta_max)
        if v is None:
            return g
        return math.cos(theta) * g + math.sin(theta) * v


def _unit_orthogonal(direction: Array, g: Array) -> Array | None:
    """Unit component of ``direction`` orthogonal to g; basis fallback."""
    w = direction - (direction @ g) * g
    n = float(np.linalg.norm(w))
    if n < 1e-12:
        for i in range(g.shape[0]):
            e = np.zeros_like(g)
            e[i] = 1.0
            w = e - (e @ g) * g
            n = float(np.linalg.norm(w))
            if n >= 1e-12:
                break
        else:
            return None
    return w / n


def exact_separation(C: Constraint, x) -> tuple[str, Array | None]:
    """Feasible flag, or an exact unit separating normal through x."""
    v = as_vector(x, C.dim)
    if np.linalg.norm(v) > C.R * (1.0 + 1e-9) + 1e-12:
        raise OutOfDomain(f"query norm {np.linalg.norm(v):.6g} exceeds R = {C.R:.6g}")
    if C.contains(v):
        return FEASIBLE, None
    return INFEASIBLE, C.separation_normal(v)


def approx_separation(
    C: Constraint, noise: SeparationNoiseModel, x, t: int
) -> tuple[str, Array | None]:
    """Exact flag; when infeasible, a unit normal within eta_C/(4R) of exact."""
    if noise.eta_c > C.rho:
        raise BadEta(f"eta_c = {noise.eta_c} exceeds inscribed radius rho = {C.rho}")
    flag, g = exact_separation(C, x)
    if flag == FEASIBLE:
        return FEASIBLE, None
    v = as_vector(x, C.dim)
    return INFEASIBLE, noise.perturb_normal(g, v, t, C.R, C.deep_center)


class ApproxSeparationOracle:
    """Bundles a constraint set with a separation noise model."""

    def __init__(self, constraint: Constraint, noise: SeparationNoiseModel):
        self.constraint = constraint
        self.noise = noise

    @property
    def eta_c(self) -> float:
        return self.noise.eta_c

    @property
    def rho(self) -> float:
        return self.constraint.rho

    @property
    def R(self) -> float:
        return self.constraint.R

    def query(self, x, t: int) -> tuple[str, Array | None]:
        return approx_separation(self.constraint, self.noise, x, t)

    def fallback_normal(self, x) -> Array:
        """Exact supporting normal, used only to escape a degenerate cone."""
        return self.constraint.separation_normal(x)


def deep_point_sampler(C: Constraint, delta: float, n: int, seed: int) -> Array:
    """Uniform rejection samples from the delta-deep subset of C."""
    if delta < 0:
        raise BadDelta("delta must be nonnegative")
    if delta >= C.rho:
        raise BadDelta(f"delta = {delta} must be below the inscribed radius {C.rho}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & _MASK64, 0xDEE9]))
    lo, hi = C.sample_box()
    out = np.empty((n, C.dim))
    got = 0
    while got < n:
        batch = rng.uniform(lo, hi, size=(max(4 * (n - got), 64), C.dim))
        for p in batch:
            if C.deep_contains(p, delta):
                out[got] = p
                got += 1
                if got == n:
                    break
    return out


def devolder_params(eta: float, M: float | None = None, L: float | None = None,
                    L_out: float | None = None) -> tuple[float, float]:
    """Map an accuracy-eta oracle to (delta, L) inexact-oracle parameters.

    Smooth case (L given): delta = 4*eta with the same L.  Lipschitz case
    (M given): delta = 3*eta + M^2/L_out for a caller-chosen L_out > 0.
    """
    if eta < 0:
        raise BadArgs("eta must be nonnegative")
    if (M is None) == (L is None):
        raise BadArgs("supply exactly one of M (Lipschitz) or L (smooth)")
    if L is not None:
        if L <= 0:
            raise BadArgs("L must be positive")
        return 4.0 * eta, float(L)
    if L_out is None or L_out <= 0:
        raise BadArgs("Lipschitz case requires a positive caller-chosen L_out")
    return 3.0 * eta + float(M) ** 2 / float(L_out), float(L_out)
