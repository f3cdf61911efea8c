"""Chart rendering: stepwise Phase I traces and frozen Phase II limits.

Figures are written as SVG next to the delimited report table. Rendering
is deterministic for a given state and matplotlib version: the SVG hash
salt is pinned and the date metadata is dropped.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .chart import ChartState, PHASE1
from .io import report_summary, report_table

_SAVEFIG_KW = {"metadata": {"Date": None}}


def _apply_style():
    matplotlib.rcParams["svg.hashsalt"] = "weibayes"


def _split_records(chart: ChartState):
    p1 = [r for r in chart.records if r.phase == PHASE1]
    p2 = [r for r in chart.records if r.phase != PHASE1]
    return p1, p2


def _render(chart: ChartState, path: str, kind: str):
    _apply_style()
    p1, p2 = _split_records(chart)

    def point(rec):
        return rec.xr_point if kind == "xr" else rec.beta_point

    def lims(rec):
        return rec.xr_limits_at_k if kind == "xr" else rec.beta_limits_at_k

    frozen = chart.frozen_xr if kind == "xr" else chart.frozen_beta

    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    if p1:
        idx = [r.sample_index for r in p1]
        ax.step(idx, [lims(r).lcl for r in p1], where="post", color="tab:red", lw=1.0)
        ax.step(idx, [lims(r).ucl for r in p1], where="post", color="tab:red", lw=1.0)
        ax.step(
            idx,
            [lims(r).cl for r in p1],
            where="post",
            color="tab:green",
            lw=0.8,
            linestyle=":",
        )
        ax.plot(
            idx,
            [point(r) for r in p1],
            marker="o",
            mfc="white",
            color="tab:gray",
            lw=0.8,
            label="phase 1",
        )
    boundary = chart.config.phase1_samples + 0.5
    ax.axvline(boundary, color="black", linestyle="--", lw=1.0)
    if p2 and frozen is not None:
        idx = [r.sample_index for r in p2]
        span = [boundary, idx[-1] + 0.5]
        ax.plot(span, [frozen.lcl] * 2, color="tab:red", lw=1.4)
        ax.plot(span, [frozen.ucl] * 2, color="tab:red", lw=1.4)
        ax.plot(span, [frozen.cl] * 2, color="tab:green", lw=0.9, linestyle=":")
        ax.plot(
            idx,
            [point(r) for r in p2],
            marker="o",
            color="tab:blue",
            lw=0.8,
            label="phase 2",
        )
        flagged = [r for r in p2 if r.signal != "none"]
        if flagged:
            ax.plot(
                [r.sample_index for r in flagged],
                [point(r) for r in flagged],
                linestyle="none",
                marker="x",
                markersize=10,
                color="red",
                label="signal",
            )
        ax.annotate(
            f"ucl {frozen.ucl:.4g}",
            (span[1], frozen.ucl),
            textcoords="offset points",
            xytext=(4, 2),
            fontsize=8,
        )
        ax.annotate(
            f"lcl {frozen.lcl:.4g}",
            (span[1], frozen.lcl),
            textcoords="offset points",
            xytext=(4, -10),
            fontsize=8,
        )
    ax.set_xlabel("subgroup")
    if kind == "xr":
        ax.set_ylabel(f"estimated percentile (R = {chart.config.r})")
        ax.set_title("percentile control chart")
    else:
        ax.set_ylabel("estimated Weibull shape")
        ax.set_title("shape stability chart")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def render_xr_chart(chart: ChartState, path: str):
    """Render the percentile chart to an SVG file."""
    _render(chart, path, "xr")


def render_beta_chart(chart: ChartState, path: str):
    """Render the shape stability chart to an SVG file."""
    _render(chart, path, "beta")


def emit_report(chart: ChartState, out_dir: str, stem: str = "chart"):
    """Write the delimited table, the text summary, and the SVG figures.

    Returns the list of paths written. The beta figure is only produced
    when the chart was configured with the shape chart enabled.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    table_path = os.path.join(out_dir, f"{stem}_report.tsv")
    with open(table_path, "w") as fh:
        fh.write(report_table(chart))
    paths.append(table_path)

    summary_path = os.path.join(out_dir, f"{stem}_summary.txt")
    with open(summary_path, "w") as fh:
        fh.write(report_summary(chart))
    paths.append(summary_path)

    xr_path = os.path.join(out_dir, f"{stem}_xr.svg")
    render_xr_chart(chart, xr_path)
    paths.append(xr_path)

    if chart.config.enable_beta_chart:
        beta_path = os.path.join(out_dir, f"{stem}_beta.svg")
        render_beta_chart(chart, beta_path)
        paths.append(beta_path)
    return paths
