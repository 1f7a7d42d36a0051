"""Traces and every measured quantity: regret, path regularities, queries.

A :class:`Trace` is written once by :func:`dynaregret.learners.run` and is
read-only afterwards. All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import CurvatureProfile, QuadraticLoss, Vector
from .errors import EmptyTraceError, InvalidInputError


def _ro(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Trace:
    """Per-round record of one run.

    ``iterates`` has T + 1 rows: x_1 .. x_T and the post-final iterate
    x_{T+1}, which the online/method regret split needs.
    """

    kind: str
    inner_steps: int
    iterates: np.ndarray
    comparators: np.ndarray
    loss: np.ndarray
    opt_loss: np.ndarray
    grad_norm: np.ndarray
    grad_star_sq: np.ndarray
    dist_sq: np.ndarray
    queries: np.ndarray
    eta: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray

    @property
    def T(self) -> int:
        return int(self.loss.shape[0])

    @property
    def dim(self) -> int:
        return int(self.iterates.shape[1])

    @property
    def x1(self) -> Vector:
        return self.iterates[0]

    @property
    def has_final_iterate(self) -> bool:
        return self.iterates.shape[0] == self.T + 1

    @property
    def final_iterate(self) -> Vector:
        if not self.has_final_iterate:
            raise InvalidInputError("trace does not carry x_{T+1}")
        return self.iterates[-1]

    @property
    def total_queries(self) -> int:
        return int(np.sum(self.queries))

    @property
    def alpha(self) -> float:
        return float(np.min(self.alphas))

    @property
    def beta(self) -> float:
        return float(np.max(self.betas))

    def inst_regret(self) -> np.ndarray:
        return self.loss - self.opt_loss

    def window(self, start: int, stop: int) -> "Trace":
        """Rounds ``start..stop-1`` (0-based) as a standalone trace."""
        if not 0 <= start <= stop <= self.T:
            raise IndexError(f"bad window [{start}, {stop}) for T={self.T}")
        sl = slice(start, stop)
        return Trace(
            kind=self.kind,
            inner_steps=self.inner_steps,
            iterates=self.iterates[start : stop + 1],
            comparators=self.comparators[sl],
            loss=self.loss[sl],
            opt_loss=self.opt_loss[sl],
            grad_norm=self.grad_norm[sl],
            grad_star_sq=self.grad_star_sq[sl],
            dist_sq=self.dist_sq[sl],
            queries=self.queries[sl],
            eta=self.eta[sl],
            alphas=self.alphas[sl],
            betas=self.betas[sl],
        )


def concat_traces(first: Trace, second: Trace) -> Trace:
    """Join two traces; ``second`` must start where ``first`` ended."""
    if first.kind != second.kind or first.dim != second.dim:
        raise InvalidInputError("traces differ in learner kind or dimension")
    if first.T and not np.array_equal(first.final_iterate, second.x1):
        raise InvalidInputError("second trace does not start at the first trace's final iterate")
    cat = np.concatenate
    return Trace(
        kind=first.kind,
        inner_steps=first.inner_steps,
        iterates=cat([first.iterates[:-1], second.iterates]),
        comparators=cat([first.comparators, second.comparators]),
        loss=cat([first.loss, second.loss]),
        opt_loss=cat([first.opt_loss, second.opt_loss]),
        grad_norm=cat([first.grad_norm, second.grad_norm]),
        grad_star_sq=cat([first.grad_star_sq, second.grad_star_sq]),
        dist_sq=cat([first.dist_sq, second.dist_sq]),
        queries=cat([first.queries, second.queries]),
        eta=cat([first.eta, second.eta]),
        alphas=cat([first.alphas, second.alphas]),
        betas=cat([first.betas, second.betas]),
    )


class TraceRecorder:
    """Accumulates rounds into preallocated arrays, then freezes a Trace."""

    def __init__(self, kind: str, inner_steps: int, dim: int, T: int):
        self.kind = kind
        self.inner_steps = inner_steps
        self.T = T
        self._t = 0
        self.iterates = np.empty((T + 1, dim))
        self.comparators = np.empty((T, dim))
        self.cols = {
            name: np.empty(T)
            for name in ("loss", "opt_loss", "grad_norm", "grad_star_sq", "dist_sq", "eta", "alphas", "betas")
        }
        self.queries = np.empty(T, dtype=np.int64)

    def record(self, f: QuadraticLoss, x_t: Vector, x_star: Vector, queries: int, eta: float) -> None:
        t = self._t
        g = f.gradient(x_t)
        g_star = f.gradient(x_star)
        diff = x_t - x_star
        self.iterates[t] = x_t
        self.comparators[t] = x_star
        cols = self.cols
        cols["loss"][t] = f.value(x_t)
        cols["opt_loss"][t] = f.value(x_star)
        cols["grad_norm"][t] = math.sqrt(float(g @ g))
        cols["grad_star_sq"][t] = float(g_star @ g_star)
        cols["dist_sq"][t] = float(diff @ diff)
        cols["eta"][t] = eta
        cols["alphas"][t] = f.alpha
        cols["betas"][t] = f.beta
        self.queries[t] = queries
        self._t += 1

    def finish(self, final_iterate: Vector, queries_total: int) -> Trace:
        if self._t != self.T:
            raise InvalidInputError(f"recorded {self._t} of {self.T} rounds")
        self.iterates[self.T] = final_iterate
        if int(np.sum(self.queries)) != queries_total:
            raise AssertionError("query accounting mismatch")
        return Trace(
            kind=self.kind,
            inner_steps=self.inner_steps,
            iterates=_ro(self.iterates),
            comparators=_ro(self.comparators),
            queries=_ro(self.queries),
            **{k: _ro(v) for k, v in self.cols.items()},
        )


# ---------------------------------------------------------------------------
# Path regularities
# ---------------------------------------------------------------------------


def displacements(path: Sequence[ArrayLike] | np.ndarray, x1: ArrayLike | None = None) -> np.ndarray:
    """Norms of successive differences; with ``x1`` the path is x_0* = x1, x_1*, ..."""
    pts = np.asarray(path, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise InvalidInputError("path must be a nonempty list of points")
    if x1 is not None:
        pts = np.vstack([np.asarray(x1, dtype=np.float64)[None, :], pts])
    return np.linalg.norm(np.diff(pts, axis=0), axis=1)


def path_length(comparators: Sequence[ArrayLike] | np.ndarray) -> float:
    """Sum of ||x_t* - x_{t-1}*|| for t = 2..T (zero for a single point)."""
    return math.fsum(displacements(comparators))


def squared_path_length(comparators: Sequence[ArrayLike] | np.ndarray) -> float:
    """Sum of ||x_t* - x_{t-1}*||^2 for t = 2..T."""
    return math.fsum(displacements(comparators) ** 2)


def variation_constant(steps: ArrayLike) -> float:
    """Smallest V with m_i <= V m_j over all strictly positive displacements."""
    m = np.asarray(steps, dtype=np.float64)
    m = m[m > 0]
    if m.size < 2:
        return 1.0
    return max(1.0, float(np.max(m) / np.min(m)))


# ---------------------------------------------------------------------------
# Regret
# ---------------------------------------------------------------------------


def dynamic_regret(trace: Trace) -> float:
    """Sum over rounds of f_t(x_t) - f_t(x_t*)."""
    if trace.T == 0:
        raise EmptyTraceError("dynamic regret of an empty trace")
    return math.fsum(trace.loss - trace.opt_loss)


def regret_decomposition(trace: Trace, oracles: Sequence[QuadraticLoss]) -> tuple[float, float]:
    """Split into the online part R_o and the per-step method part R_m.

    R_o = sum 1/(2 eta_t) (||x_t* - x_t||^2 - ||x_t* - x_{t+1}||^2)
    R_m = sum [f_t(x_t) - f_t(x_{t+1}) - B_{f_t}(x_t*, x_t)]
          + sum (beta_t eta_t - 1) / (2 eta_t) ||x_{t+1} - x_t||^2
    """
    if not trace.has_final_iterate:
        raise InvalidInputError("regret decomposition needs x_{T+1}")
    if len(oracles) != trace.T:
        raise InvalidInputError(f"{len(oracles)} oracles for a trace of {trace.T} rounds")
    X = trace.iterates
    online, method = [], []
    for t, f in enumerate(oracles):
        eta = float(trace.eta[t])
        x_t, x_next, x_star = X[t], X[t + 1], trace.comparators[t]
        a = x_star - x_next
        b = x_star - x_t
        step = x_next - x_t
        online.append((float(b @ b) - float(a @ a)) / (2.0 * eta))
        method.append(f.value(x_t) - f.value(x_next) - f.bregman(x_star, x_t))
        method.append((f.beta * eta - 1.0) / (2.0 * eta) * float(step @ step))
    return math.fsum(online), math.fsum(method)


def realized_constants(trace: Trace) -> CurvatureProfile:
    """Witnessed G, R, V (and alpha, beta) for a trace.

    G is the larger of max ||grad f_t(x_t)|| and its square, so formulas stay
    valid whether the gradient bound is read as a norm or a squared norm.
    V includes the displacement from x_0* := x_1 to x_1*.
    """
    if trace.T == 0:
        raise EmptyTraceError("realized constants of an empty trace")
    g_norm = float(np.max(trace.grad_norm))
    g_sq = g_norm * g_norm
    G = max(g_norm, g_sq)
    reading = "squared" if g_sq > g_norm else "norm"
    R = float(np.max(trace.dist_sq))
    V = variation_constant(displacements(trace.comparators, trace.x1))
    return CurvatureProfile(trace.alpha, trace.beta, G=G, R=R, V=V, G_reading=reading)


@dataclass(frozen=True)
class RegretReport:
    regret: float
    path_length: float
    squared_path_length: float
    grad_energy: float
    total_queries: int
    avg_queries_per_round: float

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def regret_report(trace: Trace) -> RegretReport:
    total = trace.total_queries
    return RegretReport(
        regret=dynamic_regret(trace),
        path_length=path_length(trace.comparators),
        squared_path_length=squared_path_length(trace.comparators),
        grad_energy=math.fsum(trace.grad_star_sq),
        total_queries=total,
        avg_queries_per_round=total / trace.T,
    )
