"""Seeded generators of drifting quadratic loss sequences.

Every round's loss is 1/2 (x - c_t)^T H (x - c_t) with one shared SPD matrix
H. The centers c_t follow a drift model: directions are uniform on the sphere,
magnitudes come from the model. The comparator path starts one displacement
away from x_1 (x_0* := x_1), so the bounded-variation constant also covers the
initial gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike

from .core import Ball, Box, FeasibleSet, QuadraticLoss, Unconstrained, Vector, as_point, feasible_set_from_dict
from .errors import GenerationError
from .metrics import displacements, path_length, squared_path_length, variation_constant

KAPPA_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Drift models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Static:
    """The center never moves after the initial offset."""

    kind = "static"

    def magnitudes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(n)

    def default_offset(self) -> float:
        return 1.0

    def variation(self, T: int) -> float:
        return 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class ConstantDrift:
    """Every displacement has length ``step``."""

    step: float
    kind = "constant"

    def __post_init__(self) -> None:
        if not (self.step >= 0 and math.isfinite(self.step)):
            raise ValueError(f"drift step must be >= 0, got {self.step}")

    def magnitudes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.step))

    def default_offset(self) -> float:
        return float(self.step)

    def variation(self, T: int) -> float:
        return 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "step": self.step}


@dataclass(frozen=True)
class DecayingDrift:
    """Displacement t has length initial * rate**t; squared path length stays bounded."""

    initial: float
    rate: float
    kind = "decaying"

    def __post_init__(self) -> None:
        if not self.initial > 0:
            raise ValueError(f"initial drift must be positive, got {self.initial}")
        if not 0 < self.rate < 1:
            raise ValueError(f"decay rate must lie in (0, 1), got {self.rate}")

    def magnitudes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.initial * self.rate ** np.arange(1, n + 1, dtype=np.float64)

    def default_offset(self) -> float:
        return float(self.initial)

    def variation(self, T: int) -> float:
        with np.errstate(over="ignore"):
            return float(np.float64(self.rate) ** -(T - 1)) if T > 1 else 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "initial": self.initial, "rate": self.rate}


@dataclass(frozen=True)
class Bursty:
    """Mostly ``small`` steps, with probability ``prob`` a ``big`` one."""

    small: float
    big: float
    V: float
    prob: float = 0.1
    kind = "bursty"

    def __post_init__(self) -> None:
        if not self.small > 0 or self.big < self.small:
            raise ValueError("bursty drift needs 0 < small <= big")
        if not self.V >= 1:
            raise ValueError(f"V must be >= 1, got {self.V}")
        if self.big > self.V * self.small * (1 + 1e-12):
            raise ValueError(f"big/small = {self.big / self.small} exceeds V = {self.V}")
        if not 0 <= self.prob <= 1:
            raise ValueError("burst probability must lie in [0, 1]")

    def magnitudes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.where(rng.random(n) < self.prob, float(self.big), float(self.small))

    def default_offset(self) -> float:
        return float(self.small)

    def variation(self, T: int) -> float:
        return float(self.V)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "small": self.small, "big": self.big, "V": self.V, "prob": self.prob}


Drift = Union[Static, ConstantDrift, DecayingDrift, Bursty]


def drift_from_dict(data: dict[str, Any]) -> Drift:
    kind = data.get("kind")
    if kind == "static":
        return Static()
    if kind == "constant":
        return ConstantDrift(float(data["step"]))
    if kind == "decaying":
        return DecayingDrift(float(data["initial"]), float(data["rate"]))
    if kind == "bursty":
        return Bursty(float(data["small"]), float(data["big"]), float(data["V"]), float(data.get("prob", 0.1)))
    raise ValueError(f"unknown drift kind {kind!r}")


# ---------------------------------------------------------------------------
# Spec and instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnvironmentSpec:
    """Everything needed to regenerate an environment bit-for-bit.

    ``feasible=None`` picks a ball around x_1 that keeps the whole comparator
    path at least ``margin_steps`` drift steps inside the boundary.
    ``initial_offset`` is ||x_1* - x_1||; ``None`` uses the drift model's
    natural first step so the variation constant is not inflated.
    """

    drift: Drift = field(default_factory=Static)
    dim: int = 2
    T: int = 100
    kappa: float = 10.0
    hessian: str = "anisotropic"
    feasible: FeasibleSet | None = None
    seed: int = 0
    x1: Vector | None = None
    initial_offset: float | None = None
    margin_steps: float = 10.0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.T < 0:
            raise ValueError("horizon T must be >= 0")
        if not self.kappa >= 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if self.hessian not in ("anisotropic", "isotropic"):
            raise ValueError(f"hessian must be 'anisotropic' or 'isotropic', got {self.hessian!r}")
        if self.x1 is not None:
            x1 = np.array(as_point(self.x1, self.dim), copy=True)
            x1.flags.writeable = False
            object.__setattr__(self, "x1", x1)
        if self.initial_offset is not None and not self.initial_offset >= 0:
            raise ValueError("initial_offset must be >= 0")

    @property
    def start(self) -> Vector:
        return np.zeros(self.dim) if self.x1 is None else np.array(self.x1)

    @property
    def V(self) -> float:
        return self.drift.variation(self.T)

    def to_dict(self) -> dict[str, Any]:
        return {
            "drift": self.drift.to_dict(),
            "dim": self.dim,
            "T": self.T,
            "kappa": self.kappa,
            "hessian": self.hessian,
            "feasible": None if self.feasible is None else self.feasible.to_dict(),
            "seed": self.seed,
            "x1": None if self.x1 is None else self.x1.tolist(),
            "initial_offset": self.initial_offset,
            "margin_steps": self.margin_steps,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EnvironmentSpec":
        data = dict(data)
        data["drift"] = drift_from_dict(data.get("drift", {"kind": "static"}))
        data["feasible"] = feasible_set_from_dict(data.get("feasible"))
        if data.get("x1") is not None:
            data["x1"] = np.asarray(data["x1"], dtype=np.float64)
        return cls(**data)


@dataclass(frozen=True, eq=False)
class EnvironmentInstance:
    """A realized loss sequence and its true comparators.

    ``G`` and ``R`` are a-priori witnesses valid for any learner whose step is
    a non-expansion (eta <= 2 / beta): R = min(diam(X)^2, (sum of all
    displacements)^2) and G = max(beta sqrt(R), beta^2 R).
    """

    spec: EnvironmentSpec
    H: np.ndarray
    oracles: tuple[QuadraticLoss, ...]
    comparators: np.ndarray
    x1: Vector
    feasible: FeasibleSet
    alpha: float
    beta: float
    G: float
    R: float
    V: float

    @property
    def T(self) -> int:
        return len(self.oracles)

    @property
    def dim(self) -> int:
        return int(self.x1.shape[0])

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha

    @property
    def path_length(self) -> float:
        return path_length(self.comparators) if self.T else 0.0

    @property
    def squared_path_length(self) -> float:
        return squared_path_length(self.comparators) if self.T else 0.0


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def make_illconditioned_matrix(dim: int, kappa: float, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Q diag(lambda) Q^T with Haar-random orthogonal Q, lambda geometric in [1, kappa]."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if not kappa >= 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    rng = _rng(seed)
    Q, Rm = np.linalg.qr(rng.standard_normal((dim, dim)))
    Q = Q * np.sign(np.diag(Rm))
    lam = np.geomspace(1.0, float(kappa), dim)
    H = (Q * lam) @ Q.T
    return 0.5 * (H + H.T)


def _unit_vectors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def verify_variation_bound(path: Sequence[ArrayLike] | np.ndarray, V: float, x1: ArrayLike | None = None) -> bool:
    """Check m_i <= V m_j for every pair of strictly positive displacements.

    With ``x1`` the path is prefixed by x_0* := x1. Zero displacements are
    skipped. A relative slack of 1e-12 absorbs rounding in the norms, plus an
    absolute floor of a few ulps of the largest coordinate: a tiny step taken
    far from the origin cannot be measured more precisely than that.
    """
    m = displacements(path, x1)
    m = m[m > 0]
    if m.size < 2:
        return True
    pts = np.asarray(path, dtype=np.float64)
    scale = float(np.max(np.abs(pts)))
    if x1 is not None:
        scale = max(scale, float(np.max(np.abs(np.asarray(x1, dtype=np.float64)))))
    floor = 8.0 * np.finfo(np.float64).eps * scale
    return bool(np.max(m) <= V * (np.min(m) * (1 + 1e-12) + floor))


def _diameter_sq(feasible: FeasibleSet) -> float:
    if isinstance(feasible, Ball):
        return (2.0 * feasible.radius) ** 2
    if isinstance(feasible, Box):
        return float(np.sum((feasible.upper - feasible.lower) ** 2))
    return math.inf


def generate(spec: EnvironmentSpec) -> EnvironmentInstance:
    """Realize ``spec``; identical specs give bit-identical instances."""
    h_seq, dir_seq, mag_seq = np.random.SeedSequence(spec.seed).spawn(3)
    dim, T = spec.dim, spec.T

    if spec.hessian == "isotropic":
        if spec.kappa != 1:
            raise GenerationError(f"isotropic Hessian requires kappa = 1, got {spec.kappa}")
        H = np.eye(dim)
    elif dim == 1:
        if spec.kappa != 1:
            raise GenerationError("a one-dimensional Hessian cannot have kappa > 1")
        H = np.eye(1)
    else:
        H = make_illconditioned_matrix(dim, spec.kappa, np.random.default_rng(h_seq))
    H.flags.writeable = False
    eig = np.linalg.eigvalsh(H)
    realized = float(eig[-1] / eig[0])
    if abs(realized - spec.kappa) > KAPPA_RTOL * spec.kappa:
        raise GenerationError(f"realized condition number {realized} misses target {spec.kappa}")

    x1 = spec.start
    offset = spec.drift.default_offset() if spec.initial_offset is None else float(spec.initial_offset)
    mags = np.empty(max(T, 1))
    mags[0] = offset
    mags[1:] = spec.drift.magnitudes(max(T, 1) - 1, np.random.default_rng(mag_seq))
    steps = mags[:, None] * _unit_vectors(np.random.default_rng(dir_seq), mags.shape[0], dim)
    centers = x1 + np.cumsum(steps, axis=0)
    centers = centers[:T]

    if T and not verify_variation_bound(centers, spec.V, x1):
        raise GenerationError(
            f"variation bound V={spec.V} violated (initial offset {offset} vs drift magnitudes)"
        )

    feasible = spec.feasible
    if feasible is None:
        reach = float(np.max(np.linalg.norm(centers - x1, axis=1))) if T else 0.0
        unit = float(np.max(mags[: max(T, 1)]))
        unit = unit if unit > 0 else 1.0
        feasible = Ball(x1, reach + spec.margin_steps * unit)
    else:
        feasible.check_dim(x1)
        if not feasible.contains(x1):
            raise GenerationError("x_1 lies outside the feasible set")
        for t in range(T):
            if not feasible.margin(centers[t]) > 0:
                raise GenerationError(f"comparator x_{t + 1}* is not strictly inside the feasible set")

    oracles = tuple(QuadraticLoss(H, centers[t]) for t in range(T))
    alpha = float(eig[0])
    beta = float(eig[-1])
    comparators = np.array([f.c for f in oracles]).reshape(T, dim)
    comparators.flags.writeable = False

    total = math.fsum(mags[:T]) if T else 0.0
    R = min(_diameter_sq(feasible), total * total)
    G = max(beta * math.sqrt(R), beta * beta * R)
    V = variation_constant(displacements(comparators, x1)) if T else 1.0
    x1 = np.array(x1)
    x1.flags.writeable = False
    return EnvironmentInstance(
        spec=spec,
        H=H,
        oracles=oracles,
        comparators=comparators,
        x1=x1,
        feasible=feasible,
        alpha=alpha,
        beta=beta,
        G=G,
        R=R,
        V=V,
    )
