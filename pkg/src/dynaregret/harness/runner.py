"""Experiment cells, learner comparison and condition-number sweeps.

Output layout for one experiment directory::

    trace_<learner>_r<rep>.csv    per-round trace (fixed schema plus extras)
    bounds_<learner>_r<rep>.json  bound report with satisfied flags
    regret_<learner>_r<rep>.svg   cumulative regret vs running bound envelope
    summary.json                  config, per-learner aggregates
    comparison.csv / .txt         written by ``compare`` only

Wall time never enters CSV or JSON so reruns are byte-identical; it is shown
only in the aligned text table.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..bounds import BoundReport, build_report
from ..environments import EnvironmentInstance, generate
from ..errors import ConfigError
from ..learners import OMGD, StepSchedule, inner_loop_count, run
from ..metrics import Trace
from .config import ExperimentConfig
from .io import write_json, write_trace_csv
from .plotting import render_regret_chart


@dataclass(frozen=True)
class CellResult:
    learner: str
    rep: int
    eta: float
    trace: Trace
    report: BoundReport
    wall_time: float
    files: tuple[Path, ...] = ()

    @property
    def within_bound(self) -> bool:
        key = "ogd_min_J1_J2" if self.learner != OMGD else "omgd_min_J3_J4"
        return self.report.checks[key].satisfied


@dataclass(frozen=True)
class ComparisonRow:
    """One learner's line in the query/regret comparison.

    Regret is aggregated over repetitions by mean and max; the bound column is
    the mean applicable bound, and ``reps_within_bound`` counts repetitions
    whose own regret stayed under their own bound.
    """

    learner: str
    regret_mean: float
    regret_max: float
    bound_mean: float
    reps_within_bound: int
    repetitions: int
    total_queries: int
    T: int
    wall_time: float

    @property
    def avg_queries(self) -> float:
        return self.total_queries / self.T

    def csv_record(self) -> dict[str, Any]:
        return {
            "learner": self.learner,
            "regret_mean": self.regret_mean,
            "regret_max": self.regret_max,
            "bound_mean": self.bound_mean,
            "reps_within_bound": self.reps_within_bound,
            "repetitions": self.repetitions,
            "total_queries": self.total_queries,
            "avg_queries": self.avg_queries,
        }


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    cells: tuple[CellResult, ...]
    out_dir: Path | None

    def for_learner(self, learner: str) -> list[CellResult]:
        return [c for c in self.cells if c.learner == learner]

    @property
    def all_within_bound(self) -> bool:
        return all(c.within_bound for c in self.cells)


def run_cell(
    config: ExperimentConfig,
    learner: str,
    rep: int,
    env: EnvironmentInstance | None = None,
    out_dir: Path | None = None,
) -> CellResult:
    env = generate(config.env_spec(rep)) if env is None else env
    eta = config.step_size(learner, env.alpha, env.beta)
    inner = inner_loop_count(env.kappa) if learner == OMGD else None
    start = time.perf_counter()
    trace = run(learner, StepSchedule.of(eta), env, inner_steps=inner)
    wall = time.perf_counter() - start
    report = build_report(trace, env.oracles, config.sigma)
    files: tuple[Path, ...] = ()
    if out_dir is not None:
        stem = f"{learner}_r{rep}"
        csv_path = write_trace_csv(trace, out_dir / f"trace_{stem}.csv", config.sigma)
        doc = {
            "learner": learner,
            "repetition": rep,
            "eta": eta,
            "environment": env.spec.to_dict(),
            "environment_constants": {"alpha": env.alpha, "beta": env.beta, "G": env.G, "R": env.R, "V": env.V},
            "report": report.to_dict(),
        }
        json_path = write_json(doc, out_dir / f"bounds_{stem}.json")
        svg_path = render_regret_chart(csv_path, out_dir / f"regret_{stem}.svg")
        files = (csv_path, json_path, svg_path)
    return CellResult(learner, rep, eta, trace, report, wall, files)


def _prepare(config: ExperimentConfig) -> Path:
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _aggregate(cells: Sequence[CellResult]) -> dict[str, Any]:
    regrets = np.array([c.report.measured_regret for c in cells])
    return {
        "regret_mean": float(np.mean(regrets)),
        "regret_max": float(np.max(regrets)),
        "reps_within_bound": sum(c.within_bound for c in cells),
        "repetitions": len(cells),
        "total_queries": [c.trace.total_queries for c in cells],
    }


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every (learner, repetition) cell; each repetition shares one environment."""
    out = _prepare(config) if write else None
    if not write:
        config.validate()
    cells = []
    for rep in range(config.repetitions):
        env = generate(config.env_spec(rep))
        for learner in config.learners:
            cells.append(run_cell(config, learner, rep, env, out))
    result = ExperimentResult(config, tuple(cells), out)
    if out is not None:
        summary = {
            "config": config.to_dict(),
            "learners": {name: _aggregate(result.for_learner(name)) for name in config.learners},
            "all_within_bound": result.all_within_bound,
        }
        write_json(summary, out / "summary.json")
    return result


def comparison_rows(result: ExperimentResult) -> list[ComparisonRow]:
    rows = []
    for name in result.config.learners:
        cells = result.for_learner(name)
        agg = _aggregate(cells)
        rows.append(
            ComparisonRow(
                learner=name,
                regret_mean=agg["regret_mean"],
                regret_max=agg["regret_max"],
                bound_mean=float(np.mean([c.report.applicable_bound for c in cells])),
                reps_within_bound=agg["reps_within_bound"],
                repetitions=agg["repetitions"],
                total_queries=cells[0].trace.total_queries,
                T=cells[0].trace.T,
                wall_time=sum(c.wall_time for c in cells),
            )
        )
    return rows


def format_table(rows: Sequence[ComparisonRow]) -> str:
    header = ("learner", "regret_mean", "regret_max", "bound_mean", "within", "queries", "avg_q/round", "wall_s")
    body = [
        (
            r.learner,
            f"{r.regret_mean:.6g}",
            f"{r.regret_max:.6g}",
            f"{r.bound_mean:.6g}",
            f"{r.reps_within_bound}/{r.repetitions}",
            str(r.total_queries),
            f"{r.avg_queries:g}",
            f"{r.wall_time:.3f}",
        )
        for r in rows
    ]
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def _write_csv(records: Sequence[dict[str, Any]], path: Path) -> Path:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in rec.items()})
    return path


def compare(config: ExperimentConfig) -> tuple[ExperimentResult, list[ComparisonRow]]:
    if len(config.learners) < 2:
        raise ConfigError("learners", "compare needs at least two learners")
    result = run_experiment(config)
    rows = comparison_rows(result)
    assert result.out_dir is not None
    _write_csv([r.csv_record() for r in rows], result.out_dir / "comparison.csv")
    (result.out_dir / "comparison.txt").write_text(format_table(rows), encoding="utf-8", newline="\n")
    return result, rows


def sweep(config: ExperimentConfig, kappas: Sequence[float]) -> list[dict[str, Any]]:
    """Regret and query cost per learner as kappa varies; writes sweep.csv only."""
    if not kappas:
        raise ConfigError("kappa", "sweep needs at least one kappa")
    out = _prepare(config)
    records = []
    for kappa in kappas:
        cfg = config.with_overrides(env_kappa=float(kappa))
        for row in comparison_rows(run_experiment(cfg, write=False)):
            records.append({"kappa": float(kappa), **row.csv_record()})
    _write_csv(records, out / "sweep.csv")
    return records
