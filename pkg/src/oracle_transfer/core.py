"""Piecewise-maximum convex models, halfspaces, and the extensibility checker.

Everything here is plain dense float64 numerics.  All types are immutable
after construction except :class:`PiecewiseMaxFunction`, which is
single-writer append-only; callers serialize appends.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimError, ModelEmpty

Array = np.ndarray

PREFER_NEWEST = "prefer-newest"
PREFER_OLDEST = "prefer-oldest"

# Relative tolerance used to decide which pieces are active at a point.
ACTIVE_RTOL = 1e-9


def as_vector(x, dim: int | None = None) -> Array:
    """Coerce to a 1-d float64 array, checking the ambient dimension."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimError(f"expected a vector, got array of shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimError(f"expected dimension {dim}, got {v.shape[0]}")
    return v


def as_points(X, dim: int) -> Array:
    """Coerce to an (n, dim) float64 array of row points."""
    P = np.asarray(X, dtype=np.float64)
    if P.ndim == 1:
        P = P.reshape(1, -1)
    if P.ndim != 2 or P.shape[1] != dim:
        raise DimError(f"expected points of dimension {dim}, got shape {P.shape}")
    return P


def sample_ball(dim: int, n: int, rng: np.random.Generator) -> Array:
    """Draw n points uniformly from the closed unit ball in R^dim.

    Gaussian directions scaled by U^(1/dim) radii; rows are independent.
    """
    if dim < 1:
        raise DimError("dimension must be >= 1")
    g = rng.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0.0] = 1.0
    radii = rng.random(n) ** (1.0 / dim)
    return g * (radii / norms)[:, None]


def project_ball(x: Array, radius: float) -> Array:
    """Euclidean projection onto the origin-centered ball of given radius."""
    n = float(np.linalg.norm(x))
    if n <= radius:
        return x
    return x * (radius / n)


@dataclass(frozen=True)
class AffinePiece:
    """One affine minorant: value at x is intercept + <slope, x>."""

    slope: Array
    intercept: float
    origin_index: int

    def __post_init__(self):
        slope = as_vector(self.slope)
        if not np.all(np.isfinite(slope)) or not np.isfinite(self.intercept):
            raise ValueError("affine piece requires finite entries")
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "intercept", float(self.intercept))

    def value(self, x) -> float:
        return self.intercept + float(self.slope @ as_vector(x, self.slope.shape[0]))


@dataclass(frozen=True)
class Anchor:
    """Query point with the first-order pair the model committed to there."""

    point: Array
    value: float
    subgradient: Array


class PiecewiseMaxFunction:
    """Maximum of affine pieces, plus the anchor records that produced them.

    An empty piece list denotes the identically -infinity initial model;
    evaluating it is an error.  Pieces are append-only and never pruned.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise DimError("dimension must be >= 1")
        self.dim = int(dim)
        self._pieces: list[AffinePiece] = []
        self._anchors: list[Anchor] = []
        self._slopes = np.empty((0, dim))
        self._intercepts = np.empty(0)
        self._origins = np.empty(0, dtype=np.int64)

    @property
    def pieces(self) -> tuple[AffinePiece, ...]:
        return tuple(self._pieces)

    @property
    def anchors(self) -> tuple[Anchor, ...]:
        return tuple(self._anchors)

    @property
    def num_pieces(self) -> int:
        return len(self._pieces)

    @property
    def slopes(self) -> Array:
        """Read-only (k, dim) matrix of piece slopes in append order."""
        return self._slopes

    @property
    def intercepts(self) -> Array:
        return self._intercepts

    def append_piece(self, slope, intercept: float, origin_index: int) -> AffinePiece:
        piece = AffinePiece(as_vector(slope, self.dim), float(intercept), int(origin_index))
        self._pieces.append(piece)
        self._slopes = np.vstack([self._slopes, piece.slope[None, :]])
        self._intercepts = np.append(self._intercepts, piece.intercept)
        self._origins = np.append(self._origins, piece.origin_index)
        return piece

    def add_anchor(self, point, value: float, subgradient) -> Anchor:
        anchor = Anchor(as_vector(point, self.dim), float(value), as_vector(subgradient, self.dim))
        self._anchors.append(anchor)
        return anchor

    def prefix(self, n_pieces: int, n_anchors: int | None = None) -> "PiecewiseMaxFunction":
        """Model as it was after the first n_pieces appends (shared pieces)."""
        if n_anchors is None:
            n_anchors = min(n_pieces, len(self._anchors))
        out = PiecewiseMaxFunction(self.dim)
        for piece in self._pieces[:n_pieces]:
            out.append_piece(piece.slope, piece.intercept, piece.origin_index)
        out._anchors = list(self._anchors[:n_anchors])
        return out

    def _require_nonempty(self):
        if not self._pieces:
            raise ModelEmpty("piecewise-max model has no pieces")

    def piece_values(self, x) -> Array:
        self._require_nonempty()
        v = as_vector(x, self.dim)
        return self._slopes @ v + self._intercepts

    def value(self, x) -> float:
        return float(np.max(self.piece_values(x)))

    def values(self, X) -> Array:
        """Evaluate at each row of X.

        Columns are computed one piece at a time so that results for a given
        piece are bit-identical no matter how many pieces were appended later
        (needed by the common-random-number stability audits).
        """
        self._require_nonempty()
        P = as_points(X, self.dim)
        n, k = P.shape[0], len(self._pieces)
        V = np.empty((n, k))
        for j in range(k):
            V[:, j] = P @ self._slopes[j]
        V += self._intercepts
        return V.max(axis=1)

    def _active_tol(self, best: Array | float) -> Array | float:
        return ACTIVE_RTOL * (1.0 + np.abs(best))

    def subgradient(self, x, tie_break: str = PREFER_NEWEST) -> Array:
        """Slope of a piece achieving the maximum at x.

        Among pieces within the active tolerance of the maximum, the policy
        picks by origin index (append position breaks residual ties).
        """
        vals = self.piece_values(x)
        best = vals.max()
        active = vals >= best - self._active_tol(best)
        idx = self._select_active(active, tie_break)
        return self._slopes[idx].copy()

    def subgradients(self, X, tie_break: str = PREFER_NEWEST) -> Array:
        """Row-wise subgradient selection at each row of X."""
        self._require_nonempty()
        P = as_points(X, self.dim)
        n, k = P.shape[0], len(self._pieces)
        V = np.empty((n, k))
        for j in range(k):
            V[:, j] = P @ self._slopes[j]
        V += self._intercepts
        best = V.max(axis=1, keepdims=True)
        active = V >= best - self._active_tol(best)
        if tie_break == PREFER_NEWEST:
            key = np.where(active, self._origins[None, :], np.iinfo(np.int64).min)
            idx = key.argmax(axis=1)
        elif tie_break == PREFER_OLDEST:
            key = np.where(active, self._origins[None, :], np.iinfo(np.int64).max)
            idx = key.argmin(axis=1)
        else:
            raise ValueError(f"unknown tie_break {tie_break!r}")
        return self._slopes[idx]

    def _select_active(self, active: Array, tie_break: str) -> int:
        origins = self._origins
        if tie_break == PREFER_NEWEST:
            key = np.where(active, origins, np.iinfo(np.int64).min)
            return int(key.argmax())
        if tie_break == PREFER_OLDEST:
            key = np.where(active, origins, np.iinfo(np.int64).max)
            return int(key.argmin())
        raise ValueError(f"unknown tie_break {tie_break!r}")

    def max_slope_norm(self) -> float:
        if not self._pieces:
            return 0.0
        return float(np.linalg.norm(self._slopes, axis=1).max())


def pwmax_eval(F: PiecewiseMaxFunction, x) -> float:
    """Value of the piecewise-max model at x."""
    return F.value(x)


def pwmax_subgradient(F: PiecewiseMaxFunction, x, tie_break: str = PREFER_NEWEST) -> Array:
    """A subgradient of the piecewise-max model at x (active-piece slope)."""
    return F.subgradient(x, tie_break)


@dataclass(frozen=True)
class ExtensibilityReport:
    extensible: bool
    worst_violation: float
    witness: tuple[int, int] | None


def check_convex_extensibility(
    pairs: Sequence[tuple], tol: float = 1e-9
) -> ExtensibilityReport:
    """Decide whether first-order data admits a convex extension.

    ``pairs`` is a sequence of (x, f, g) triples.  The data is extensible
    exactly when f_i + <g_i, x_j - x_i> <= f_j for every ordered pair (i, j):
    the piecewise max of the induced affine pieces is then an extension.
    Witness indices are 1-based query numbers.
    """
    if not pairs:
        raise ValueError("pairs must be nonempty")
    dim = as_vector(pairs[0][0]).shape[0]
    X = np.stack([as_vector(p[0], dim) for p in pairs])
    f = np.array([float(p[1]) for p in pairs])
    G = np.stack([as_vector(p[2], dim) for p in pairs])
    n = len(pairs)
    if n == 1:
        return ExtensibilityReport(True, 0.0, None)
    # V[i, j] = f_i + <g_i, x_j - x_i> - f_j
    V = (f - np.einsum("id,id->i", G, X))[:, None] + G @ X.T - f[None, :]
    np.fill_diagonal(V, -np.inf)
    worst = float(V.max())
    i, j = np.unravel_index(int(V.argmax()), V.shape)
    return ExtensibilityReport(worst <= tol, worst, (int(i) + 1, int(j) + 1))


@dataclass(frozen=True)
class Halfspace:
    """Halfspace {x : <normal, x> <= <normal, anchor>} with a unit normal."""

    normal: Array
    anchor: Array

    def __post_init__(self):
        normal = as_vector(self.normal)
        anchor = as_vector(self.anchor, normal.shape[0])
        if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
            raise ValueError("halfspace normal must be unit length")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "anchor", anchor)

    @property
    def offset(self) -> float:
        return float(self.normal @ self.anchor)

    def contains(self, x, tol: float = 0.0) -> bool:
        v = as_vector(x, self.normal.shape[0])
        return bool(self.normal @ v <= self.offset + tol)

    def violation(self, x) -> float:
        """Signed excess <normal, x> - offset (positive means outside)."""
        v = as_vector(x, self.normal.shape[0])
        return float(self.normal @ v - self.offset)


def halfspace_contains(H: Halfspace, x, tol: float = 0.0) -> bool:
    """Membership test with additive tolerance on the boundary."""
    return H.contains(x, tol)
