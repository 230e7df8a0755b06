"""Figures written next to the stats tables."""

from __future__ import annotations

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .export import StatsReport  # noqa: E402

CATEGORY_COLORS = {
    "SpatialRelations": "#4c72b0",
    "Counting": "#dd8452",
    "RankingExtremes": "#55a868",
    "Localization": "#c44e52",
    "SizeAspect": "#8172b3",
}

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def category_figure(report: StatsReport, path: Path) -> Path:
    cats = [c for c, n in report.categories.items()]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 2.8))
        shares = [report.shares[c] for c in cats]
        bars = ax.barh(cats, shares, color=[CATEGORY_COLORS.get(c, "grey") for c in cats])
        for bar, share, cat in zip(bars, shares, cats):
            ax.text(bar.get_width() + 0.5, bar.get_y() + bar.get_height() / 2,
                    f"{share:.1f}% ({report.categories[cat]})", va="center", fontsize=8)
        ax.invert_yaxis()
        ax.set_xlim(0, max(100.0, max(shares, default=0) + 15))
        ax.set_xlabel("share of QA pairs (%)")
        if report.total == 0:
            ax.set_title("no pairs")
        fig.savefig(path)
        plt.close(fig)
    return path


def hit_rate_figure(report: StatsReport, path: Path) -> Path:
    rows = [r for r in report.rows if r["Template"] in report.metrics]
    names = [r["Template"] for r in rows]
    rates = [100.0 * report.metrics[n].hit_rate for n in names]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 0.25 * max(4, len(names)) + 0.8))
        ax.barh(names, rates, color="#4c72b0")
        ax.invert_yaxis()
        ax.set_xlim(0, 100)
        ax.set_xlabel("predicate → QA hit rate (%)")
        fig.savefig(path)
        plt.close(fig)
    return path


def render_stats_figures(report: StatsReport, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [category_figure(report, out_dir / "category_distribution.png")]
    if report.metrics:
        written.append(hit_rate_figure(report, out_dir / "hit_rate.png"))
    return written
