"""Regret-bound evaluators and numerical checkers for the supporting inequalities.

Evaluators are closed-form functions of a :class:`BoundInputs`. Checkers take
concrete points, evaluate both sides of one inequality and report the slack.
Inequalities pass when ``lhs <= rhs + 1e-9 + 1e-9 * |rhs|``; the contraction
check uses the tighter absolute ``1e-12``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import FeasibleSet, QuadraticLoss, Unconstrained, as_point
from .errors import CurvatureError, DivergentBoundError, InvalidInputError, PreconditionError
from .learners import OGD
from .metrics import Trace, dynamic_regret, realized_constants, regret_decomposition, regret_report

ABS_TOL = 1e-9
REL_TOL = 1e-9
CONTRACTION_TOL = 1e-12


def within(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + ABS_TOL + REL_TOL * abs(rhs)


def bound_holds(measured: float, bound: float) -> bool:
    """Acceptance slack for end-to-end bounds: 1e-9 * max(1, bound)."""
    return measured <= bound + 1e-9 * max(1.0, abs(bound))


def rho(alpha: float, beta: float) -> float:
    """Contraction factor sqrt((kappa - 1) / kappa); 0 when kappa = 1."""
    if not alpha > 0 or beta < alpha:
        raise CurvatureError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    kappa = beta / alpha
    return math.sqrt((kappa - 1.0) / kappa)


def exact_contraction_factor(alpha: float, beta: float, eta: float) -> float:
    """Tight per-step factor max(|1 - eta alpha|, |1 - eta beta|) of a quadratic step.

    Unlike :func:`rho` this depends on the step size; for eta well below
    1 / beta it exceeds ``rho(alpha, beta)``.
    """
    return max(abs(1.0 - eta * alpha), abs(1.0 - eta * beta))


# ---------------------------------------------------------------------------
# Inputs and closed-form bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundInputs:
    """Scalars every bound is built from.

    ``rho_value`` overrides the curvature-derived rho (used to probe the
    merely-convex rho = 1 case). ``sigma`` defaults to beta.
    """

    alpha: float
    beta: float
    etas: tuple[float, ...]
    init_dist: float
    P: float
    S: float
    grad_energy: float = 0.0
    G: float = 0.0
    R: float = 0.0
    V: float = 1.0
    sigma: float | None = None
    theta1: float = 1.0
    theta2: float = 1.0
    rho_value: float | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 0 or self.beta < self.alpha:
            raise CurvatureError(f"need 0 < alpha <= beta, got alpha={self.alpha}, beta={self.beta}")
        object.__setattr__(self, "etas", tuple(float(e) for e in self.etas))
        if not self.etas or min(self.etas) <= 0:
            raise ValueError("step schedule must be nonempty and positive")
        for name in ("init_dist", "P", "S", "grad_energy", "G", "R"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.V < 1:
            raise ValueError("V must be >= 1")
        if self.sigma is not None and not self.sigma > 0:
            raise PreconditionError(f"sigma must be positive, got {self.sigma}")
        if not (self.theta1 > 0 and self.theta2 > 0):
            raise PreconditionError("theta1 and theta2 must be positive")
        if self.rho_value is not None and not 0 <= self.rho_value <= 1:
            raise ValueError("rho must lie in [0, 1]")

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha

    @property
    def rho(self) -> float:
        return rho(self.alpha, self.beta) if self.rho_value is None else self.rho_value

    @property
    def eta_min(self) -> float:
        return min(self.etas)

    @property
    def sigma_or_beta(self) -> float:
        return self.beta if self.sigma is None else self.sigma

    @classmethod
    def from_trace(cls, trace: Trace, sigma: float | None = None) -> "BoundInputs":
        prof = realized_constants(trace)
        rep = regret_report(trace)
        return cls(
            alpha=prof.alpha,
            beta=prof.beta,
            etas=tuple(trace.eta.tolist()),
            init_dist=math.sqrt(float(trace.dist_sq[0])),
            P=rep.path_length,
            S=rep.squared_path_length,
            grad_energy=rep.grad_energy,
            G=prof.G,
            R=prof.R,
            V=prof.V,
            sigma=sigma,
        )


def _drift_factor(r: float, V: float) -> float:
    return (1.0 - r + 2.0 * r * V) / (1.0 - r)


def bound_J1(inputs: BoundInputs) -> float:
    """Squared-path-length bound for OGD at the recommended constant step."""
    r = inputs.rho
    if r >= 1:
        if inputs.S == 0:
            return math.inf
        raise DivergentBoundError("J1 is undefined for rho = 1 (merely convex losses)")
    curv = inputs.beta + inputs.beta**2 / inputs.alpha
    return (
        _drift_factor(r, inputs.V) * curv * inputs.S
        + curv * inputs.init_dist**2
        + inputs.grad_energy / (2.0 * curv)
    )


def bound_J2(inputs: BoundInputs) -> float:
    """Path-length bound for OGD: G ||x_1 - x_1*|| P / (1 - rho) + G / (1 - rho)."""
    r = inputs.rho
    if r >= 1:
        raise DivergentBoundError("J2 is undefined for rho = 1")
    return inputs.G * inputs.init_dist * inputs.P / (1.0 - r) + inputs.G / (1.0 - r)


def bound_J2_additive(inputs: BoundInputs) -> float:
    """Diagnostic variant G (||x_1 - x_1*|| + P) / (1 - rho); reported, never asserted."""
    r = inputs.rho
    if r >= 1:
        raise DivergentBoundError("J2 is undefined for rho = 1")
    return inputs.G * (inputs.init_dist + inputs.P) / (1.0 - r)


def bound_J3(inputs: BoundInputs) -> float:
    """Path-length bound for OMGD: 2 G P + 2 G ||x_1 - x_1*||."""
    return 2.0 * inputs.G * inputs.P + 2.0 * inputs.G * inputs.init_dist


def bound_J4(inputs: BoundInputs, sigma: float | None = None) -> float:
    """Squared-path-length bound for OMGD with free parameter sigma (default beta)."""
    s = inputs.sigma_or_beta if sigma is None else sigma
    if not s > 0:
        raise PreconditionError(f"sigma must be positive, got {s}")
    return inputs.grad_energy / (2.0 * s) + (inputs.beta + s) * (2.0 * inputs.S + inputs.init_dist**2)


def best_J4(inputs: BoundInputs) -> tuple[float, float]:
    """Minimum of J4 over sigma in {beta/2, beta, 2 beta}; returns (value, sigma)."""
    b = inputs.beta
    return min((bound_J4(inputs, s), s) for s in (0.5 * b, b, 2.0 * b))


def bound_Ro(inputs: BoundInputs, per_round_distances: ArrayLike = ()) -> float:
    """Bound on the online part of the regret.

    ``per_round_distances`` holds ||x_{t+1}* - x_{t+1}||^2 for t = 1..T-1; it
    only matters for non-constant schedules.
    """
    r = inputs.rho
    etas = inputs.etas
    head = inputs.init_dist**2 / (2.0 * etas[0])
    if r >= 1:
        if inputs.S == 0:
            return math.inf
        raise DivergentBoundError("online-regret bound diverges for rho = 1 with S > 0")
    total = _drift_factor(r, inputs.V) / (2.0 * inputs.eta_min) * inputs.S + head
    dist = np.asarray(per_round_distances, dtype=np.float64)
    if len(etas) > 1 and any(e != etas[0] for e in etas):
        if dist.shape[0] != len(etas) - 1:
            raise InvalidInputError(f"need {len(etas) - 1} per-round distances, got {dist.shape[0]}")
        inv = 1.0 / np.asarray(etas)
        total += 0.5 * math.fsum(np.diff(inv) * dist)
    return total


def regularity_scaling(inputs: BoundInputs, factor: float = 2.0) -> tuple[float, float]:
    """Ratios J1(scaled)/J1 and J2(scaled)/J2 when the comparator drift is scaled.

    P scales by ``factor`` and S by ``factor**2``; G, ||x_1 - x_1*||, V and
    the gradient energy are held fixed as the constants of the asymptotic
    statement.
    """
    scaled = replace(inputs, P=inputs.P * factor, S=inputs.S * factor**2)
    return bound_J1(scaled) / bound_J1(inputs), bound_J2(scaled) / bound_J2(inputs)


# ---------------------------------------------------------------------------
# Inequality checkers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class ProximalCheck:
    holds: bool
    max_violation: float
    x_next: np.ndarray = field(repr=False)


def _sq(v: np.ndarray) -> float:
    return float(v @ v)


def check_contraction(
    f: QuadraticLoss,
    feasible: FeasibleSet,
    x: ArrayLike,
    eta: float,
    rho_value: float | None = None,
) -> CheckResult:
    """One projected step shrinks the distance to the minimizer by rho.

    ``rho_value`` defaults to ``rho(alpha, beta)``.
    """
    if eta > (1.0 / f.beta) * (1 + 1e-12) or not eta > 0:
        raise PreconditionError(f"step {eta} outside (0, 1/beta = {1.0 / f.beta}]")
    x = as_point(x, f.dim)
    x_star = f.minimizer(feasible)
    x_plus = feasible.project(x - eta * f.gradient(x))
    r = rho(f.alpha, f.beta) if rho_value is None else rho_value
    lhs = math.sqrt(_sq(x_plus - x_star))
    rhs = r * math.sqrt(_sq(x - x_star))
    return CheckResult(lhs <= rhs + CONTRACTION_TOL, lhs, rhs)


def check_descent_lemma(
    f: QuadraticLoss,
    x_t: ArrayLike,
    x_next: ArrayLike | None,
    x_star: ArrayLike,
    eta: float,
    feasible: FeasibleSet | None = None,
) -> CheckResult:
    """2 <eta grad f(x_t), x_next - x*> <= -||x* - x_next||^2 - ||x_next - x_t||^2 + ||x* - x_t||^2.

    ``x_next`` is recomputed from the update rule; a supplied value that
    disagrees raises :class:`InvalidInputError`.
    """
    if not eta > 0:
        raise PreconditionError("eta must be positive")
    feasible = Unconstrained() if feasible is None else feasible
    x_t = as_point(x_t, f.dim)
    x_star = as_point(x_star, f.dim)
    if not feasible.contains(x_star):
        raise PreconditionError("x* must lie in the feasible set")
    g = f.gradient(x_t)
    expected = feasible.project(x_t - eta * g)
    if x_next is not None:
        x_next = as_point(x_next, f.dim)
        scale = 1.0 + float(np.max(np.abs(expected)))
        if np.max(np.abs(x_next - expected)) > 1e-9 * scale:
            raise InvalidInputError("x_next is not the projected gradient step from x_t")
    x_next = expected
    lhs = 2.0 * eta * float(g @ (x_next - x_star))
    rhs = -_sq(x_star - x_next) - _sq(x_next - x_t) + _sq(x_star - x_t)
    return CheckResult(within(lhs, rhs), lhs, rhs)


def check_smooth_gap_lemma(
    f: QuadraticLoss,
    x_t: ArrayLike,
    x_next: ArrayLike,
    x_star: ArrayLike,
    theta1: float,
    theta2: float,
) -> CheckResult:
    """f(x_t) - f(x_next) <= th1/2 ||x_t - x*||^2 + (b^2/(2 th1) + 1/(2 th2)) ||x_next - x_t||^2 + th2/2 ||grad f(x*)||^2."""
    if not (theta1 > 0 and theta2 > 0):
        raise PreconditionError("theta1 and theta2 must be positive")
    x_t = as_point(x_t, f.dim)
    x_next = as_point(x_next, f.dim)
    x_star = as_point(x_star, f.dim)
    lhs = f.value(x_t) - f.value(x_next)
    rhs = (
        0.5 * theta1 * _sq(x_t - x_star)
        + (f.beta**2 / (2.0 * theta1) + 1.0 / (2.0 * theta2)) * _sq(x_next - x_t)
        + 0.5 * theta2 * _sq(f.gradient(x_star))
    )
    return CheckResult(within(lhs, rhs), lhs, rhs)


def check_drift_recursion(
    x_t_star: ArrayLike,
    x_next_star: ArrayLike,
    x_next_iterate: ArrayLike,
    rho_value: float,
    V: float,
) -> CheckResult:
    """-||x_t* - x_{t+1}||^2 + ||x_{t+1}* - x_{t+1}||^2 <= (1 - rho + 2 rho V)/(1 - rho) ||x_{t+1}* - x_t*||^2."""
    if rho_value >= 1:
        raise DivergentBoundError("drift recursion is undefined for rho = 1")
    a = as_point(x_t_star)
    b = as_point(x_next_star, a.shape[0])
    x = as_point(x_next_iterate, a.shape[0])
    lhs = -_sq(a - x) + _sq(b - x)
    rhs = _drift_factor(rho_value, V) * _sq(b - a)
    return CheckResult(within(lhs, rhs), lhs, rhs)


def check_proximal_equivalence(
    f: QuadraticLoss,
    x_t: ArrayLike,
    eta: float,
    feasible: FeasibleSet,
    rng: np.random.Generator | int | None = None,
    samples: int = 1000,
) -> ProximalCheck:
    """The projected step minimizes h(x) = <eta grad f(x_t), x> + 1/2 ||x - x_t||^2 over X.

    Compared against ``samples`` random feasible points.
    """
    if not eta > 0:
        raise PreconditionError("eta must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    x_t = as_point(x_t, f.dim)
    g = eta * f.gradient(x_t)
    x_next = feasible.project(x_t - g)
    scale = 1.0 + math.sqrt(_sq(x_t - x_next))
    Z = feasible.sample(rng, samples, around=x_next, scale=scale)
    h_next = float(g @ x_next) + 0.5 * _sq(x_next - x_t)
    h_z = Z @ g + 0.5 * np.sum((Z - x_t) ** 2, axis=1)
    worst = float(np.max(h_next - h_z)) if samples else -math.inf
    return ProximalCheck(worst <= ABS_TOL + REL_TOL * abs(h_next), worst, x_next)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    bound: float
    measured: float
    satisfied: bool

    @property
    def slack(self) -> float:
        return self.bound - self.measured


@dataclass(frozen=True)
class BoundReport:
    """Measured regret next to every theoretical quantity for one trace."""

    learner: str
    inner_steps: int
    T: int
    measured_regret: float
    R_o: float
    R_m: float
    alpha: float
    beta: float
    kappa: float
    rho: float
    G: float
    G_reading: str
    R: float
    V: float
    P: float
    S: float
    grad_energy: float
    init_dist: float
    eta_min: float
    J1: float
    J2: float
    J3: float
    J4: float
    J4_best: float
    J4_best_sigma: float
    J2_additive: float
    Ro_bound: float
    total_queries: int
    avg_queries: float
    checks: dict[str, BoundCheck]

    @property
    def min_J12(self) -> float:
        return min(self.J1, self.J2)

    @property
    def min_J34(self) -> float:
        return min(self.J3, self.J4)

    @property
    def applicable_bound(self) -> float:
        return self.min_J12 if self.learner == OGD else self.min_J34

    def to_dict(self) -> dict[str, Any]:
        out = {k: v for k, v in asdict(self).items() if k != "checks"}
        out["min_J12"] = self.min_J12
        out["min_J34"] = self.min_J34
        out["applicable_bound"] = self.applicable_bound
        out["checks"] = {
            name: {"bound": c.bound, "measured": c.measured, "satisfied": c.satisfied, "slack": c.slack}
            for name, c in self.checks.items()
        }
        return out


def build_report(trace: Trace, oracles: Sequence[QuadraticLoss], sigma: float | None = None) -> BoundReport:
    """Evaluate every bound on ``trace`` and flag which ones hold."""
    inputs = BoundInputs.from_trace(trace, sigma)
    prof = realized_constants(trace)
    measured = dynamic_regret(trace)
    r_o, r_m = regret_decomposition(trace, oracles)
    J1, J2, J3, J4 = bound_J1(inputs), bound_J2(inputs), bound_J3(inputs), bound_J4(inputs)
    j4_best, j4_sigma = best_J4(inputs)
    Ro_bound = bound_Ro(inputs, trace.dist_sq[1:])

    def chk(bound: float, value: float) -> BoundCheck:
        return BoundCheck(bound, value, bound_holds(value, bound))

    checks = {
        "regret_split": chk(r_o + r_m, measured),
        "online_part_bound": chk(Ro_bound, r_o),
        "ogd_min_J1_J2": chk(min(J1, J2), measured),
        "omgd_min_J3_J4": chk(min(J3, J4), measured),
    }
    return BoundReport(
        learner=trace.kind,
        inner_steps=trace.inner_steps,
        T=trace.T,
        measured_regret=measured,
        R_o=r_o,
        R_m=r_m,
        alpha=inputs.alpha,
        beta=inputs.beta,
        kappa=inputs.kappa,
        rho=inputs.rho,
        G=prof.G,
        G_reading=prof.G_reading,
        R=prof.R,
        V=prof.V,
        P=inputs.P,
        S=inputs.S,
        grad_energy=inputs.grad_energy,
        init_dist=inputs.init_dist,
        eta_min=inputs.eta_min,
        J1=J1,
        J2=J2,
        J3=J3,
        J4=J4,
        J4_best=j4_best,
        J4_best_sigma=j4_sigma,
        J2_additive=bound_J2_additive(inputs),
        Ro_bound=Ro_bound,
        total_queries=trace.total_queries,
        avg_queries=trace.total_queries / trace.T,
        checks=checks,
    )


def prefix_bounds(
    dist_sq: ArrayLike,
    path_inc: ArrayLike,
    grad_norm: ArrayLike,
    grad_star_sq: ArrayLike,
    alpha: float,
    beta: float,
    sigma: float | None = None,
) -> dict[str, np.ndarray]:
    """J1..J4 evaluated on every prefix t = 1..T of a run.

    Inputs are per-round columns: ``dist_sq[t] = ||x_t - x_t*||^2`` and
    ``path_inc[t] = ||x_t* - x_{t-1}*||`` (zero in the first round). Only
    these columns and the curvature constants are needed, so the same numbers
    can be recomputed from a trace CSV.
    """
    dist_sq = np.asarray(dist_sq, dtype=np.float64)
    inc = np.asarray(path_inc, dtype=np.float64)
    gn = np.asarray(grad_norm, dtype=np.float64)
    ge = np.cumsum(np.asarray(grad_star_sq, dtype=np.float64))
    r = rho(alpha, beta)
    d0 = math.sqrt(float(dist_sq[0]))
    P = np.cumsum(inc)
    S = np.cumsum(inc * inc)
    G = np.maximum.accumulate(np.maximum(gn, gn * gn))
    disp = inc.copy()
    disp[0] = d0
    pos = disp > 0
    big = np.maximum.accumulate(np.where(pos, disp, 0.0))
    small = np.minimum.accumulate(np.where(pos, disp, np.inf))
    count = np.cumsum(pos)
    with np.errstate(invalid="ignore", divide="ignore"):
        V = np.where(count >= 2, np.maximum(1.0, big / small), 1.0)
    curv = beta + beta * beta / alpha
    s = beta if sigma is None else sigma
    J1 = (1.0 - r + 2.0 * r * V) / (1.0 - r) * curv * S + curv * d0**2 + ge / (2.0 * curv)
    J2 = G * d0 * P / (1.0 - r) + G / (1.0 - r)
    J3 = 2.0 * G * P + 2.0 * G * d0
    J4 = ge / (2.0 * s) + (beta + s) * (2.0 * S + d0**2)
    return {"J1": J1, "J2": J2, "J3": J3, "J4": J4, "P": P, "S": S, "G": G, "V": V}


def bound_envelope(trace: Trace, sigma: float | None = None) -> np.ndarray:
    """Running applicable bound: min(J1, J2) for OGD, min(J3, J4) for OMGD."""
    pb = prefix_bounds(
        trace.dist_sq, path_increments(trace), trace.grad_norm, trace.grad_star_sq, trace.alpha, trace.beta, sigma
    )
    if trace.kind == OGD:
        return np.minimum(pb["J1"], pb["J2"])
    return np.minimum(pb["J3"], pb["J4"])


def path_increments(trace: Trace) -> np.ndarray:
    """Per-round ||x_t* - x_{t-1}*||, with 0 in the first round."""
    inc = np.zeros(trace.T)
    if trace.T > 1:
        inc[1:] = np.linalg.norm(np.diff(trace.comparators, axis=0), axis=1)
    return inc
