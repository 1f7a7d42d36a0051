"""Vectors, feasible sets, quadratic loss oracles and curvature bookkeeping.

Points are plain 1-D ``float64`` numpy arrays. Feasible sets and losses are
immutable once built, so they can be shared between concurrent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CurvatureError, DimensionError, UnsupportedCombinationError

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]

MEMBERSHIP_TOL = 1e-12
IDENTITY_TOL = 1e-12
INEQUALITY_TOL = 1e-9

__all__ = [
    "Ball",
    "Box",
    "CurvatureProfile",
    "FeasibleSet",
    "QuadraticLoss",
    "Unconstrained",
    "as_point",
    "bregman",
    "condition_number",
    "feasible_set_from_dict",
    "gradient",
    "minimizer",
    "points_close",
    "project",
    "value",
]


def as_point(x: ArrayLike, dim: int | None = None) -> Vector:
    """Coerce ``x`` to a finite float64 vector, optionally of a fixed dimension."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D point, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


def points_close(x: ArrayLike, y: ArrayLike, tol: float = IDENTITY_TOL) -> bool:
    """True when two points agree coordinate-wise within ``tol``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return x.shape == y.shape and bool(np.all(np.abs(x - y) <= tol))


# ---------------------------------------------------------------------------
# Feasible sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Unconstrained:
    """The whole space R^d. Projection is the identity."""

    def project(self, x: Vector) -> Vector:
        return np.array(x, dtype=np.float64, copy=True)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        return True

    def margin(self, x: Vector) -> float:
        """Distance from ``x`` to the boundary (infinite here)."""
        return math.inf

    def check_dim(self, x: Vector) -> None:
        pass

    def sample(self, rng: np.random.Generator, n: int, around: Vector, scale: float = 1.0) -> Matrix:
        """Gaussian cloud around ``around``; any point is feasible."""
        d = around.shape[0]
        scales = scale * np.exp(rng.uniform(np.log(1e-3), np.log(1e2), size=(n, 1)))
        return around + scales * rng.standard_normal((n, d))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "unconstrained"}


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball ``{x : ||x - center|| <= radius}``."""

    center: Vector
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _frozen(as_point(self.center)))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def check_dim(self, x: Vector) -> None:
        if x.shape != self.center.shape:
            raise DimensionError(f"point of shape {x.shape} vs ball in R^{self.dim}")

    def project(self, x: Vector) -> Vector:
        self.check_dim(x)
        offset = x - self.center
        dist = math.sqrt(float(offset @ offset))
        if dist <= self.radius:
            return np.array(x, dtype=np.float64, copy=True)
        return self.center + offset * (self.radius / dist)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        self.check_dim(x)
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol * max(1.0, self.radius)

    def margin(self, x: Vector) -> float:
        self.check_dim(x)
        return self.radius - float(np.linalg.norm(x - self.center))

    def sample(self, rng: np.random.Generator, n: int, around: Vector | None = None, scale: float = 1.0) -> Matrix:
        """Uniform samples from the ball, half of them pushed onto the sphere."""
        d = self.dim
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = self.radius * rng.random((n, 1)) ** (1.0 / d)
        r[: n // 2] = self.radius
        return self.center + r * u

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: Vector
    upper: Vector

    def __post_init__(self) -> None:
        lo = as_point(self.lower)
        hi = as_point(self.upper, lo.shape[0])
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def check_dim(self, x: Vector) -> None:
        if x.shape != self.lower.shape:
            raise DimensionError(f"point of shape {x.shape} vs box in R^{self.dim}")

    def project(self, x: Vector) -> Vector:
        self.check_dim(x)
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        self.check_dim(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def margin(self, x: Vector) -> float:
        self.check_dim(x)
        return float(min(np.min(x - self.lower), np.min(self.upper - x)))

    def sample(self, rng: np.random.Generator, n: int, around: Vector | None = None, scale: float = 1.0) -> Matrix:
        pts = rng.uniform(self.lower, self.upper, size=(n, self.dim))
        # snap a quarter of the coordinates to faces so boundary points are exercised
        mask = rng.random((n, self.dim)) < 0.25
        faces = np.where(rng.random((n, self.dim)) < 0.5, self.lower, self.upper)
        return np.where(mask, faces, pts)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


FeasibleSet = Union[Unconstrained, Ball, Box]


def feasible_set_from_dict(data: dict[str, Any] | None) -> FeasibleSet | None:
    if data is None:
        return None
    kind = data.get("kind")
    if kind == "unconstrained":
        return Unconstrained()
    if kind == "ball":
        return Ball(np.asarray(data["center"], dtype=float), float(data["radius"]))
    if kind == "box":
        return Box(np.asarray(data["lower"], dtype=float), np.asarray(data["upper"], dtype=float))
    raise ValueError(f"unknown feasible set kind {kind!r}")


def project(feasible: FeasibleSet, x: ArrayLike) -> Vector:
    """Euclidean projection of ``x`` onto ``feasible``."""
    return feasible.project(as_point(x))


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureProfile:
    """Curvature constants plus the gradient/distance/variation witnesses.

    ``G`` and ``R`` are suprema over a concrete trace (or instance), so they
    bound every per-round value rather than being assumed.
    """

    alpha: float
    beta: float
    G: float = 0.0
    R: float = 0.0
    V: float = 1.0
    G_reading: str = "norm"

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise CurvatureError(f"alpha must be positive, got {self.alpha}")
        if self.beta < self.alpha:
            raise CurvatureError(f"beta ({self.beta}) must be >= alpha ({self.alpha})")
        if self.G < 0 or self.R < 0 or self.V < 1:
            raise ValueError("G, R must be nonnegative and V >= 1")

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha


def condition_number(profile: Any) -> float:
    """beta / alpha for anything carrying ``alpha`` and ``beta`` attributes."""
    alpha, beta = float(profile.alpha), float(profile.beta)
    if not alpha > 0:
        raise CurvatureError(f"alpha must be positive, got {alpha}")
    if beta < alpha:
        raise CurvatureError(f"beta ({beta}) must be >= alpha ({alpha})")
    return beta / alpha


# ---------------------------------------------------------------------------
# Quadratic loss oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadraticLoss:
    """f(x) = 1/2 (x - c)^T H (x - c) + g0 with H symmetric positive definite.

    ``alpha`` and ``beta`` are the extreme eigenvalues of ``H``, computed once.
    Gradient evaluations do not count queries; learners own that bookkeeping.
    """

    H: Matrix
    c: Vector
    g0: float = 0.0
    alpha: float = field(init=False)
    beta: float = field(init=False)
    isotropic: bool = field(init=False)

    def __post_init__(self) -> None:
        H = np.asarray(self.H, dtype=np.float64)
        c = as_point(self.c)
        if H.shape != (c.shape[0], c.shape[0]):
            raise DimensionError(f"H has shape {H.shape} but c has dimension {c.shape[0]}")
        scale = max(1.0, float(np.max(np.abs(H))))
        if np.max(np.abs(H - H.T)) > IDENTITY_TOL * scale:
            raise ValueError("H must be symmetric")
        eig = np.linalg.eigvalsh(H)
        alpha, beta = float(eig[0]), float(eig[-1])
        if not alpha > 0:
            raise CurvatureError(f"H must be positive definite (lambda_min = {alpha})")
        sigma = float(np.mean(np.diag(H)))
        iso = bool(np.max(np.abs(H - sigma * np.eye(c.shape[0]))) <= IDENTITY_TOL * scale)
        object.__setattr__(self, "H", _frozen(H))
        object.__setattr__(self, "c", _frozen(c))
        object.__setattr__(self, "g0", float(self.g0))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "isotropic", iso)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha

    def profile(self) -> CurvatureProfile:
        return CurvatureProfile(self.alpha, self.beta)

    def _check(self, x: Vector) -> None:
        if x.shape != self.c.shape:
            raise DimensionError(f"point of shape {x.shape} vs loss in R^{self.dim}")

    def value(self, x: Vector) -> float:
        self._check(x)
        r = x - self.c
        return 0.5 * float(r @ (self.H @ r)) + self.g0

    def gradient(self, x: Vector) -> Vector:
        self._check(x)
        return self.H @ (x - self.c)

    def bregman(self, x: Vector, y: Vector) -> float:
        """B_f(x, y); for a quadratic this is 1/2 (x - y)^T H (x - y)."""
        self._check(x)
        self._check(y)
        r = x - y
        return 0.5 * float(r @ (self.H @ r))

    def minimizer(self, feasible: FeasibleSet) -> Vector:
        """Closed-form minimizer of f over ``feasible``.

        Exact when ``c`` is feasible (any H) or H is isotropic (projection of c).
        Anything else raises :class:`UnsupportedCombinationError`.
        """
        feasible.check_dim(self.c)
        if feasible.contains(self.c, tol=0.0):
            return np.array(self.c, copy=True)
        if self.isotropic:
            return feasible.project(self.c)
        raise UnsupportedCombinationError(
            "constrained minimizer of an anisotropic quadratic with an infeasible center has no closed form"
        )


def value(f: QuadraticLoss, x: ArrayLike) -> float:
    return f.value(as_point(x))


def gradient(f: QuadraticLoss, x: ArrayLike) -> Vector:
    return f.gradient(as_point(x))


def bregman(f: QuadraticLoss, x: ArrayLike, y: ArrayLike) -> float:
    return f.bregman(as_point(x), as_point(y))


def minimizer(f: QuadraticLoss, feasible: FeasibleSet) -> Vector:
    return f.minimizer(feasible)
