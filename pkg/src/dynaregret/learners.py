"""Online gradient descent (OGD) and online multiple gradient descent (OMGD).

Both learners are expressed as pure step functions over an immutable
:class:`LearnerState`; :func:`run` drives them over an environment and
records a :class:`~dynaregret.metrics.Trace`. Gradient-query accounting lives
here and only here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .core import FeasibleSet, QuadraticLoss, Unconstrained, Vector, as_point
from .errors import CurvatureError, DimensionError, ScheduleExhaustedError

if TYPE_CHECKING:
    from .environments import EnvironmentInstance
    from .metrics import Trace

OGD = "ogd"
OMGD = "omgd"
KINDS = (OGD, OMGD)


def recommended_step_size(alpha: float, beta: float) -> float:
    """Constant OGD step 1 / (2 (beta + beta^2 / alpha)).

    Always at most 1 / beta, so the projected step is a non-expansion.
    """
    if not alpha > 0 or beta < alpha:
        raise CurvatureError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    return 1.0 / (2.0 * (beta + beta * beta / alpha))


def inner_loop_count(kappa: float) -> int:
    """OMGD inner iterations per round: ceil((kappa + 1) / 2)."""
    if not kappa >= 1:
        raise CurvatureError(f"condition number must be >= 1, got {kappa}")
    # (kappa + 1) / 2 is exact in binary for integral kappa
    return max(1, math.ceil((kappa + 1.0) / 2.0))


@dataclass(frozen=True, eq=False)
class StepSchedule:
    """Either a constant step or an explicit positive sequence eta_1..eta_T."""

    constant: float | None = None
    steps: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if (self.constant is None) == (self.steps is None):
            raise ValueError("give exactly one of constant or steps")
        if self.constant is not None and not (self.constant > 0 and math.isfinite(self.constant)):
            raise ValueError(f"step size must be positive, got {self.constant}")
        if self.steps is not None:
            steps = tuple(float(s) for s in self.steps)
            if not steps or any(not (s > 0 and math.isfinite(s)) for s in steps):
                raise ValueError("step sequence must be nonempty and strictly positive")
            object.__setattr__(self, "steps", steps)

    @classmethod
    def of(cls, eta: float) -> "StepSchedule":
        return cls(constant=float(eta))

    @classmethod
    def sequence(cls, steps: Sequence[float]) -> "StepSchedule":
        return cls(steps=tuple(steps))

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def __len__(self) -> int:
        return len(self.steps) if self.steps is not None else 0

    def at(self, t: int) -> float:
        """Step for 1-based round ``t``."""
        if self.constant is not None:
            return self.constant
        assert self.steps is not None
        if t < 1 or t > len(self.steps):
            raise ScheduleExhaustedError(f"no step size for round {t} (schedule length {len(self.steps)})")
        return self.steps[t - 1]

    def realized(self, T: int) -> np.ndarray:
        """The first ``T`` steps as an array."""
        if self.constant is not None:
            return np.full(T, self.constant)
        assert self.steps is not None
        if T > len(self.steps):
            raise ScheduleExhaustedError(f"horizon {T} exceeds schedule length {len(self.steps)}")
        return np.asarray(self.steps[:T], dtype=np.float64)

    def eta_min(self, T: int | None = None) -> float:
        if self.constant is not None:
            return self.constant
        assert self.steps is not None
        return float(min(self.steps if T is None else self.steps[:T]))


@dataclass(frozen=True, eq=False)
class LearnerState:
    """Where a learner is after ``round`` completed rounds."""

    iterate: Vector
    schedule: StepSchedule
    kind: str = OGD
    inner_steps: int = 1
    queries_total: int = 0
    round: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be a positive integer")
        if self.kind == OGD and self.inner_steps != 1:
            raise ValueError("OGD takes exactly one gradient step per round")

    @classmethod
    def start(cls, x1: Vector, schedule: StepSchedule, kind: str = OGD, inner_steps: int = 1) -> "LearnerState":
        x = np.array(as_point(x1), copy=True)
        x.flags.writeable = False
        return cls(iterate=x, schedule=schedule, kind=kind, inner_steps=inner_steps)


def _projected_steps(f: QuadraticLoss, feasible: FeasibleSet, x: Vector, eta: float, k: int) -> Vector:
    H, c = f.H, f.c
    if isinstance(feasible, Unconstrained):
        z = x
        for _ in range(k):
            z = z - eta * (H @ (z - c))
        return z
    project = feasible.project
    z = x
    for _ in range(k):
        z = project(z - eta * (H @ (z - c)))
    return z


def _advance(state: LearnerState, f: QuadraticLoss, feasible: FeasibleSet, k: int) -> LearnerState:
    x = state.iterate
    if x.shape != f.c.shape:
        raise DimensionError(f"iterate in R^{x.shape[0]} vs loss in R^{f.dim}")
    feasible.check_dim(x)
    eta = state.schedule.at(state.round + 1)
    x_next = _projected_steps(f, feasible, x, eta, k)
    x_next.flags.writeable = False
    return replace(state, iterate=x_next, queries_total=state.queries_total + k, round=state.round + 1)


def ogd_step(state: LearnerState, f: QuadraticLoss, feasible: FeasibleSet) -> LearnerState:
    """x_{t+1} = Proj(x_t - eta_t grad f_t(x_t)); one gradient query."""
    if state.kind != OGD:
        raise ValueError(f"ogd_step called on a {state.kind} state")
    return _advance(state, f, feasible, 1)


def omgd_step(state: LearnerState, f: QuadraticLoss, feasible: FeasibleSet) -> LearnerState:
    """K projected steps on the same f_t with the same eta_t; K gradient queries."""
    if state.kind != OMGD:
        raise ValueError(f"omgd_step called on a {state.kind} state")
    return _advance(state, f, feasible, state.inner_steps)


def run(
    kind: str,
    schedule: StepSchedule,
    env: "EnvironmentInstance",
    feasible: FeasibleSet | None = None,
    inner_steps: int | None = None,
) -> "Trace":
    """Play ``kind`` against every round of ``env`` and return the trace.

    ``feasible`` defaults to the environment's set. For OMGD, ``inner_steps``
    defaults to ``inner_loop_count`` of the worst condition number in ``env``.
    """
    from .metrics import TraceRecorder

    if kind not in KINDS:
        raise ValueError(f"unknown learner kind {kind!r}")
    feasible = env.feasible if feasible is None else feasible
    if kind == OGD:
        k = 1
    else:
        k = inner_loop_count(env.kappa) if inner_steps is None else int(inner_steps)
    T = env.T
    if not schedule.is_constant and len(schedule) < T:
        raise ScheduleExhaustedError(f"horizon {T} exceeds schedule length {len(schedule)}")

    state = LearnerState.start(env.x1, schedule, kind, k)
    step = ogd_step if kind == OGD else omgd_step
    recorder = TraceRecorder(kind=kind, inner_steps=k, dim=env.dim, T=T)
    for t in range(T):
        f = env.oracles[t]
        x_t = state.iterate
        state = step(state, f, feasible)
        recorder.record(f, x_t, env.comparators[t], k, schedule.at(t + 1))
    return recorder.finish(state.iterate, state.queries_total)
