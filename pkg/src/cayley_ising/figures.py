"""Report figures rendered next to the delimited output.

Everything goes through the Agg backend so the CLI works headless; the
functions take explicit paths and return them, leaving naming policy
to the caller.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reduction import phi
from .solvers import PhiCrossings, ScanReport

__all__ = ["render_phi_figure", "render_scan_figure"]

_DPI = 150


def render_phi_figure(result: PhiCrossings, path: str) -> str:
    """Log-log plot of the composed boundary map against the identity.

    Crossings found by the counter are marked; the x = 1 fixed point is
    always among them.
    """
    x = np.geomspace(result.x_lo, result.x_hi, 600)
    y = phi(x, result.k, result.alpha)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(x, y, lw=1.5, label="phi(x)")
    ax.loglog(x, x, lw=1.0, ls="--", color="gray", label="x")
    if result.crossings:
        cx = np.asarray(result.crossings)
        ax.loglog(cx, cx, "o", ms=6, color="crimson", zorder=5,
                  label=f"{result.count} crossing(s)")
    ax.set_xlabel("x")
    ax.set_ylabel("phi(x)")
    ax.set_title(f"k={result.k}, alpha={result.alpha:g}")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_scan_figure(report: ScanReport, path: str) -> str:
    """Two-panel summary of a solution-count scan.

    Top: count staircase over alpha with refined transition windows
    shaded. Bottom: every solved branch as h1 against alpha, so
    pitchfork openings line up visually with the count jumps.
    """
    alphas = np.asarray(report.alphas)
    counts = np.asarray(report.counts)
    fig, (ax1, ax2) = plt.subplots(
        2, 1, figsize=(6.5, 6.0), sharex=True,
        gridspec_kw={"height_ratios": [1, 2]},
    )
    ax1.step(alphas, counts, where="mid", lw=1.5)
    for tr in report.transitions:
        ax1.axvspan(tr.alpha_lo, tr.alpha_hi, color="crimson", alpha=0.3)
    ax1.set_ylabel("solutions")
    ax1.grid(True, alpha=0.25)
    pts_a: list[float] = []
    pts_h: list[float] = []
    for a, recs in zip(report.alphas, report.records):
        for rec in recs:
            pts_a.append(a)
            pts_h.append(rec.h.h1)
    ax2.plot(pts_a, pts_h, ".", ms=3, alpha=0.7)
    ax2.set_xlabel("alpha")
    ax2.set_ylabel("h1 on solved branches")
    ax2.grid(True, alpha=0.25)
    title = f"k={report.k}, |A|={report.a_size}"
    if report.restrict != "full":
        title += f", {report.restrict} branch"
    ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
