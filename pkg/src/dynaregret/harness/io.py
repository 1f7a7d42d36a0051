"""Trace CSV and JSON report files.

CSV: UTF-8, LF line endings, '.' decimal separator, floats written with 17
significant digits so every value round-trips exactly. The first eleven
columns are fixed; three more carry what offline bound recomputation and the
chart need.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from ..bounds import bound_envelope, path_increments, prefix_bounds
from ..learners import OGD
from ..metrics import Trace
from .config import to_jsonable

CSV_COLUMNS = (
    "t",
    "loss",
    "opt_loss",
    "inst_regret",
    "cum_regret",
    "queries",
    "cum_queries",
    "dist_sq_to_opt",
    "path_inc",
    "sq_path_inc",
    "eta",
)
EXTRA_COLUMNS = ("grad_norm", "grad_sq_at_opt", "envelope")
INT_COLUMNS = {"t", "queries", "cum_queries"}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_columns(trace: Trace, sigma: float | None = None) -> dict[str, np.ndarray]:
    inst = trace.loss - trace.opt_loss
    inc = path_increments(trace)
    return {
        "t": np.arange(1, trace.T + 1),
        "loss": trace.loss,
        "opt_loss": trace.opt_loss,
        "inst_regret": inst,
        "cum_regret": np.cumsum(inst),
        "queries": trace.queries,
        "cum_queries": np.cumsum(trace.queries),
        "dist_sq_to_opt": trace.dist_sq,
        "path_inc": inc,
        "sq_path_inc": inc * inc,
        "eta": trace.eta,
        "grad_norm": trace.grad_norm,
        "grad_sq_at_opt": trace.grad_star_sq,
        "envelope": bound_envelope(trace, sigma) if trace.T else np.zeros(0),
    }


def write_trace_csv(trace: Trace, path: str | Path, sigma: float | None = None) -> Path:
    path = Path(path)
    cols = trace_columns(trace, sigma)
    header = CSV_COLUMNS + EXTRA_COLUMNS
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(trace.T):
            writer.writerow(
                [str(int(cols[c][i])) if c in INT_COLUMNS else _fmt(cols[c][i]) for c in header]
            )
    return path


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    out: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        dtype = np.int64 if name in INT_COLUMNS else np.float64
        out[name] = np.array([row[j] for row in rows], dtype=dtype)
    return out


def bounds_from_csv(
    path: str | Path, alpha: float, beta: float, learner: str = OGD, sigma: float | None = None
) -> dict[str, float]:
    """Recompute regret, P, S and J1..J4 from a trace CSV plus curvature constants."""
    cols = read_trace_csv(path)
    pb = prefix_bounds(
        cols["dist_sq_to_opt"], cols["path_inc"], cols["grad_norm"], cols["grad_sq_at_opt"], alpha, beta, sigma
    )
    last = {k: float(v[-1]) for k, v in pb.items()}
    last["regret"] = math.fsum(cols["inst_regret"])
    last["total_queries"] = int(np.sum(cols["queries"]))
    last["applicable_bound"] = min(last["J1"], last["J2"]) if learner == OGD else min(last["J3"], last["J4"])
    return last


def write_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path
