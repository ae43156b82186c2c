"""Figure rendering for the report paths of the CLI.

Figures are written straight to files through the Agg canvas (no pyplot
state), one PNG per report, alongside the delimited output they illustrate.
"""

from __future__ import annotations

import math
from pathlib import Path

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .harness import BoundsRow, OptimizerReport, SummaryRow
from . import pipeline

__all__ = ["render_sweep_figure", "render_tradeoff_figure", "render_bounds_figure"]

_SIDE_CASES = (pipeline.CASE_SIDE1, pipeline.CASE_SIDE2)


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig).print_figure(str(path), dpi=150)
    return path


def render_sweep_figure(rows: list[SummaryRow], path: str | Path) -> Path:
    """Side and central mean relative distortion vs measurement count."""
    fig = Figure(figsize=(9, 3.6))
    ax_side, ax_central = fig.subplots(1, 2)
    for case, marker in ((pipeline.CASE_SIDE1, "o"), (pipeline.CASE_SIDE2, "s"),
                         (pipeline.CASE_CENTRAL, "d"), (pipeline.CASE_LOST, "x")):
        pts = [r for r in rows if r.case == case]
        if not pts:
            continue
        ax = ax_central if case == pipeline.CASE_CENTRAL else ax_side
        ax.errorbar(
            [r.m for r in pts],
            [r.mean_rd for r in pts],
            yerr=[r.ci95_rd for r in pts],
            marker=marker,
            capsize=2,
            label=case,
        )
    for ax, title in ((ax_side, "side decoding"), (ax_central, "central decoding")):
        ax.set_xlabel("measurements m")
        ax.set_ylabel("relative distortion")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        if ax.lines:
            ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_tradeoff_figure(report: OptimizerReport, path: str | Path) -> Path:
    """Trade-off scatter, hull, selected point, and the tangent of slope -2p/(1-p)."""
    fig = Figure(figsize=(5.2, 4.2))
    ax = fig.subplots()
    xs = [pt.d_side for pt in report.curve]
    ys = [pt.d_central for pt in report.curve]
    ax.scatter(xs, ys, s=28, label="configurations", zorder=3)
    for pt in report.curve:
        ax.annotate(f"({pt.fine_bits},{pt.coarse_bits})", (pt.d_side, pt.d_central),
                    textcoords="offset points", xytext=(4, 4), fontsize=7)
    hx = [pt.d_side for pt in report.hull]
    hy = [pt.d_central for pt in report.hull]
    ax.plot(hx, hy, "-", color="gray", label="lower-left hull", zorder=2)
    sel = report.selected
    ax.scatter([sel.d_side], [sel.d_central], s=90, marker="*", color="crimson",
               label=f"optimal for p={report.p:g}", zorder=4)
    slope = -2.0 * report.p / (1.0 - report.p)
    span = (max(xs) - min(xs)) or 1.0
    tx = [sel.d_side - 0.35 * span, sel.d_side + 0.35 * span]
    ax.plot(tx, [sel.d_central + slope * (t - sel.d_side) for t in tx], "--",
            color="crimson", alpha=0.6, label="tangent")
    ax.set_xlabel("side distortion (squared relative)")
    ax.set_ylabel("central distortion (squared relative)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_bounds_figure(rows: list[BoundsRow], path: str | Path) -> Path:
    """Lower/upper bounds vs rate on a log scale; infinite uppers are skipped."""
    fig = Figure(figsize=(5.6, 4.2))
    ax = fig.subplots()
    rates = [row.rate for row in rows]
    series = [
        ("split/graded side", [row.t1_side for row in rows], "C0"),
        ("split/graded central", [row.t1_central for row in rows], "C1"),
        ("mdsq side", [row.t2_side for row in rows], "C2"),
        ("mdsq central", [row.t2_central for row in rows], "C3"),
    ]
    for label, reports, color in series:
        lo = [rep.lower for rep in reports]
        ax.plot(rates, lo, "-", color=color, label=f"{label} lower")
        up_pairs = [(r, rep.upper) for r, rep in zip(rates, reports)
                    if math.isfinite(rep.upper)]
        if up_pairs:
            ax.plot(*zip(*up_pairs), "--", color=color, alpha=0.7, label=f"{label} upper")
    ax.set_yscale("log")
    ax.set_xlabel("rate R (bits per measurement)")
    ax.set_ylabel("distortion bound")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)
