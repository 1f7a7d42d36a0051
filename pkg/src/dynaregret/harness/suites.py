"""Randomized verification suites behind ``dynaregret verify``.

Every trial draws from ``numpy.random.default_rng([seed, suite, trial])`` so a
failure is reproducible from the printed (seed, trial) pair.

Instance classes (fixed before any results were looked at):

* drifting: dim in 2..8, kappa log-uniform in [2, 100], T in 50..500,
  drift magnitude log-uniform in [0.01, 1], drift model constant / bursty /
  decaying with V uniform in [1, 5], x_1 = 0, default ball.
* static: same curvature ranges, unit initial offset, no drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

import numpy as np

from ..bounds import (
    bound_holds,
    build_report,
    check_contraction,
    check_descent_lemma,
    check_drift_recursion,
    check_proximal_equivalence,
    check_smooth_gap_lemma,
    rho,
)
from ..core import Ball, Box, FeasibleSet, QuadraticLoss, Unconstrained
from ..environments import (
    Bursty,
    ConstantDrift,
    DecayingDrift,
    EnvironmentSpec,
    Static,
    generate,
    make_illconditioned_matrix,
)
from ..learners import OGD, OMGD, StepSchedule, inner_loop_count, recommended_step_size, run
from ..metrics import realized_constants

SUITES = ("lemmas", "theorems", "all")
LEMMA_CHECKS = ("rho_contraction", "projected_descent", "smooth_gap", "drift_recursion", "proximal_equivalence")
THEOREM_CHECKS = (
    "ogd_min_J1_J2",
    "regret_split_ogd",
    "online_part_ogd",
    "omgd_min_J3_J4",
    "regret_split_omgd",
    "static_sanity_ogd",
)


@dataclass
class Tally:
    """Pass count and worst slack for one named check."""

    name: str
    trials: int = 0
    passed: int = 0
    worst_slack: float = math.inf
    first_failure: dict[str, Any] | None = None

    def add(self, holds: bool, slack: float, context: Callable[[], dict[str, Any]]) -> None:
        self.trials += 1
        if holds:
            self.passed += 1
        elif self.first_failure is None:
            self.first_failure = context()
        self.worst_slack = min(self.worst_slack, slack)

    @property
    def ok(self) -> bool:
        return self.trials > 0 and self.passed == self.trials

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name:<22s} {self.passed:>6d}/{self.trials:<6d} worst_slack={self.worst_slack:.6g}"


@dataclass
class VerifySummary:
    seed: int
    tallies: dict[str, Tally] = field(default_factory=dict)

    def tally(self, name: str) -> Tally:
        return self.tallies.setdefault(name, Tally(name))

    @property
    def ok(self) -> bool:
        return all(t.ok for t in self.tallies.values())

    def lines(self) -> list[str]:
        out = [t.line() for t in self.tallies.values()]
        for t in self.tallies.values():
            if t.first_failure is not None:
                out.append(f"  first failure in {t.name}: {t.first_failure}")
        return out


def _rng(seed: int, suite: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, suite, trial])


# ---------------------------------------------------------------------------
# Instance classes
# ---------------------------------------------------------------------------


def drifting_instance_spec(seed: int) -> EnvironmentSpec:
    rng = np.random.default_rng([seed, 9001])
    dim = int(rng.integers(2, 9))
    kappa = float(np.exp(rng.uniform(np.log(2.0), np.log(100.0))))
    T = int(rng.integers(50, 501))
    scale = float(np.exp(rng.uniform(np.log(0.01), np.log(1.0))))
    V = float(rng.uniform(1.0, 5.0))
    pick = int(rng.integers(0, 3))
    if pick == 0:
        drift: Any = ConstantDrift(scale)
    elif pick == 1:
        drift = Bursty(scale, V * scale, V, prob=0.1)
    else:
        drift = DecayingDrift(scale, V ** (-1.0 / (T - 1)) if V > 1 else 0.999)
    return EnvironmentSpec(drift=drift, dim=dim, T=T, kappa=kappa, seed=int(rng.integers(2**31)))


def static_instance_spec(seed: int) -> EnvironmentSpec:
    rng = np.random.default_rng([seed, 9002])
    dim = int(rng.integers(2, 9))
    kappa = float(np.exp(rng.uniform(np.log(2.0), np.log(100.0))))
    T = int(rng.integers(50, 501))
    return EnvironmentSpec(drift=Static(), dim=dim, T=T, kappa=kappa, seed=int(rng.integers(2**31)))


def _random_loss(rng: np.random.Generator, constrained: str) -> tuple[QuadraticLoss, FeasibleSet]:
    """A random quadratic and a feasible set.

    ``constrained`` is ``"none"`` (anisotropic H, no constraint), ``"interior"``
    (anisotropic H, ball containing the center) or ``"ball"``/``"box"``
    (isotropic H, center possibly outside so the minimizer sits on the boundary).
    """
    dim = int(rng.integers(2, 9))
    c = rng.normal(scale=2.0, size=dim)
    if constrained in ("none", "interior"):
        kappa = float(np.exp(rng.uniform(0.0, np.log(100.0))))
        H = make_illconditioned_matrix(dim, kappa, rng) * float(np.exp(rng.uniform(-2, 2)))
        f = QuadraticLoss(H, c)
        if constrained == "none":
            return f, Unconstrained()
        return f, Ball(np.zeros(dim), float(np.linalg.norm(c)) + float(rng.uniform(0.1, 2.0)))
    f = QuadraticLoss(float(np.exp(rng.uniform(-2, 2))) * np.eye(dim), c)
    if constrained == "ball":
        return f, Ball(rng.normal(size=dim), float(rng.uniform(0.5, 3.0)))
    lo = rng.normal(size=dim) - rng.uniform(0.2, 2.0, size=dim)
    return f, Box(lo, lo + rng.uniform(0.4, 4.0, size=dim))


def _start_point(rng: np.random.Generator, f: QuadraticLoss, feasible: FeasibleSet) -> np.ndarray:
    scale = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    return feasible.project(f.c + scale * rng.standard_normal(f.dim))


def _step(rng: np.random.Generator, f: QuadraticLoss) -> float:
    return (1.0 - rng.random()) / f.beta


# ---------------------------------------------------------------------------
# Inequality suite ("lemmas")
# ---------------------------------------------------------------------------


def _ctx(seed: int, trial: int, **arrays: Any) -> Callable[[], dict[str, Any]]:
    def build() -> dict[str, Any]:
        out: dict[str, Any] = {"seed": seed, "trial": trial}
        for k, v in arrays.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    return build


def run_contraction(summary: VerifySummary, trials: int) -> None:
    tally = summary.tally("rho_contraction")
    for i in range(trials):
        rng = _rng(summary.seed, 1, i)
        f, X = _random_loss(rng, "none" if i % 2 == 0 else "interior")
        x = _start_point(rng, f, X)
        eta = _step(rng, f)
        res = check_contraction(f, X, x, eta)
        tally.add(res.holds, res.slack, _ctx(summary.seed, i, kappa=f.kappa, eta_beta=eta * f.beta, lhs=res.lhs, rhs=res.rhs))


_SET_CYCLE = ("none", "interior", "ball", "box")


def run_descent(summary: VerifySummary, trials: int) -> None:
    tally = summary.tally("projected_descent")
    for i in range(trials):
        rng = _rng(summary.seed, 2, i)
        f, X = _random_loss(rng, _SET_CYCLE[i % 4])
        x_t = _start_point(rng, f, X)
        eta = _step(rng, f)
        res = check_descent_lemma(f, x_t, None, f.minimizer(X), eta, X)
        tally.add(res.holds, res.slack, _ctx(summary.seed, i, x_t=x_t, eta=eta, lhs=res.lhs, rhs=res.rhs))


_THETAS = (0.1, 1.0, 10.0)


def run_smooth_gap(summary: VerifySummary, trials: int) -> None:
    tally = summary.tally("smooth_gap")
    for i in range(trials):
        rng = _rng(summary.seed, 3, i)
        f, X = _random_loss(rng, _SET_CYCLE[i % 4])
        x_t = _start_point(rng, f, X)
        eta = _step(rng, f)
        x_next = X.project(x_t - eta * f.gradient(x_t))
        th1, th2 = _THETAS[i % 3], _THETAS[(i // 3) % 3]
        res = check_smooth_gap_lemma(f, x_t, x_next, f.minimizer(X), th1, th2)
        tally.add(res.holds, res.slack, _ctx(summary.seed, i, theta1=th1, theta2=th2, lhs=res.lhs, rhs=res.rhs))


def drift_recursion_tuples(seed: int, count: int) -> Iterator[tuple[int, Any]]:
    """Consecutive-round tuples from real OGD runs with eta uniform in (0, 1/beta]."""
    produced = 0
    run_idx = 0
    while produced < count:
        rng = _rng(seed, 4, run_idx)
        spec = drifting_instance_spec(int(rng.integers(2**31)))
        env = generate(EnvironmentSpec.from_dict({**spec.to_dict(), "T": min(spec.T, 200)}))
        eta = _step(rng, env.oracles[0])
        trace = run(OGD, StepSchedule.of(eta), env)
        r = rho(env.alpha, env.beta)
        for t in range(env.T - 1):
            yield run_idx, (env.comparators[t], env.comparators[t + 1], trace.iterates[t + 1], r, env.V, eta * env.beta)
            produced += 1
            if produced >= count:
                return
        run_idx += 1


def run_drift_recursion(summary: VerifySummary, trials: int) -> None:
    tally = summary.tally("drift_recursion")
    for run_idx, (a, b, x, r, V, eb) in drift_recursion_tuples(summary.seed, trials):
        res = check_drift_recursion(a, b, x, r, V)
        tally.add(res.holds, res.slack, _ctx(summary.seed, run_idx, rho=r, V=V, eta_beta=eb, lhs=res.lhs, rhs=res.rhs))


def run_proximal(summary: VerifySummary, trials: int, samples: int = 1000) -> None:
    tally = summary.tally("proximal_equivalence")
    for i in range(trials):
        rng = _rng(summary.seed, 5, i)
        f, X = _random_loss(rng, _SET_CYCLE[i % 4])
        x_t = _start_point(rng, f, X)
        eta = _step(rng, f)
        res = check_proximal_equivalence(f, x_t, eta, X, rng, samples)
        tally.add(res.holds, -res.max_violation, _ctx(summary.seed, i, x_t=x_t, eta=eta, violation=res.max_violation))


def run_lemmas(summary: VerifySummary, trials: int) -> None:
    run_contraction(summary, trials)
    run_descent(summary, trials)
    run_smooth_gap(summary, trials)
    run_drift_recursion(summary, trials)
    run_proximal(summary, trials)


# ---------------------------------------------------------------------------
# End-to-end suite ("theorems")
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceOutcome:
    """Everything the end-to-end checks need from one drifting instance."""

    spec: EnvironmentSpec
    kappa: float
    ogd: Any
    omgd: Any


def drifting_outcome(seed: int) -> InstanceOutcome:
    spec = drifting_instance_spec(seed)
    env = generate(spec)
    ogd = run(OGD, StepSchedule.of(recommended_step_size(env.alpha, env.beta)), env)
    omgd = run(OMGD, StepSchedule.of(1.0 / env.beta), env, inner_steps=inner_loop_count(env.kappa))
    return InstanceOutcome(spec, env.kappa, build_report(ogd, env.oracles), build_report(omgd, env.oracles))


def static_sanity(seed: int) -> tuple[float, float]:
    """(measured regret, G / (1 - rho)) for OGD on a static instance."""
    env = generate(static_instance_spec(seed))
    trace = run(OGD, StepSchedule.of(recommended_step_size(env.alpha, env.beta)), env)
    prof = realized_constants(trace)
    return float(np.sum(trace.loss - trace.opt_loss)), prof.G / (1.0 - rho(env.alpha, env.beta))


def run_theorems(summary: VerifySummary, trials: int) -> None:
    seed = summary.seed
    for i in range(trials):
        inst_seed = int(_rng(seed, 6, i).integers(2**31))
        out = drifting_outcome(inst_seed)
        ctx = _ctx(seed, i, instance_seed=inst_seed, spec=out.spec.to_dict())
        og, om = out.ogd, out.omgd
        for name, rep, key in (
            ("ogd_min_J1_J2", og, "ogd_min_J1_J2"),
            ("regret_split_ogd", og, "regret_split"),
            ("online_part_ogd", og, "online_part_bound"),
            ("omgd_min_J3_J4", om, "omgd_min_J3_J4"),
            ("regret_split_omgd", om, "regret_split"),
        ):
            c = rep.checks[key]
            summary.tally(name).add(c.satisfied, c.slack, ctx)
        static_seed = int(_rng(seed, 7, i).integers(2**31))
        measured, bound = static_sanity(static_seed)
        summary.tally("static_sanity_ogd").add(
            bound_holds(measured, bound), bound - measured, _ctx(seed, i, instance_seed=static_seed)
        )


def verify(suite: str, trials: int, seed: int) -> VerifySummary:
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    summary = VerifySummary(seed)
    if suite in ("lemmas", "all"):
        run_lemmas(summary, trials)
    if suite in ("theorems", "all"):
        run_theorems(summary, trials)
    return summary
