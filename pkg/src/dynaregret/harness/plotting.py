"""Cumulative-regret chart rendered to SVG.

The chart is a pure function of the trace CSV: it reads ``cum_regret`` and
``envelope`` and nothing else, and the SVG writer is pinned so identical CSVs
give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import read_trace_csv  # noqa: E402

STYLE = {
    "svg.hashsalt": "dynaregret",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
}


def figsize(scale: float = 1.0) -> tuple[float, float]:
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    width = 6.0 * scale
    return width, width * golden


def render_regret_chart(csv_path: str | Path, svg_path: str | Path) -> Path:
    cols = read_trace_csv(csv_path)
    t = cols["t"]
    regret = cols["cum_regret"]
    envelope = cols["envelope"]
    svg_path = Path(svg_path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(0.9))
        ax.plot(t, regret, color="#1f4e79", label="cumulative dynamic regret")
        ax.plot(t, envelope, color="#c0504d", linestyle="--", label="running bound envelope")
        if len(t) and np.all(regret > 0) and np.all(envelope > 0):
            ax.set_yscale("log")
        ax.set_xlabel("round t")
        ax.set_ylabel("regret")
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return svg_path
