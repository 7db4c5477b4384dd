"""Figure rendering for campaign reports.

Takes the same rows the CSV/JSON reports are built from and writes PNG
figures next to them: per-preset AP colored by family, and per-family
min/avg/max bars.  Rendering is optional; the delimited reports remain the
primary output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .campaign import FamilySummary, ReportRow, summarize


def render_report_figures(rows: list[ReportRow], out_dir) -> list[str]:
    """Render report figures; returns the written file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    scored = [r for r in rows if r.ap is not None]
    if scored:
        written.append(_ap_by_preset(scored, out_dir / "ap_by_preset.png"))
        written.append(_family_summary(summarize(scored), out_dir / "ap_by_family.png"))
    else:
        written.append(_injection_counts(rows, out_dir / "injections_by_family.png"))
    return written


def _family_palette(families: list[str]) -> dict[str, tuple]:
    cmap = plt.get_cmap("tab20")
    return {fam: cmap(i % 20) for i, fam in enumerate(dict.fromkeys(families))}


def _ap_by_preset(rows: list[ReportRow], path: Path) -> str:
    palette = _family_palette([r.family for r in rows])
    fig, ax = plt.subplots(figsize=(max(8, 0.14 * len(rows)), 4.5))
    xs = range(len(rows))
    ax.bar(xs, [r.ap for r in rows], color=[palette[r.family] for r in rows])
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r.preset for r in rows], rotation=90, fontsize=6)
    ax.set_ylabel("AP@40")
    ax.set_ylim(0, 1.02)
    ax.set_title("Average precision per failure preset")
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in palette.values()]
    ax.legend(handles, palette.keys(), fontsize=6, ncol=2, loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def _family_summary(summaries: list[FamilySummary], path: Path) -> str:
    scored = [s for s in summaries if s.ap_avg is not None]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(scored)), 4.0))
    xs = range(len(scored))
    avgs = [s.ap_avg for s in scored]
    err_low = [s.ap_avg - s.ap_min for s in scored]
    err_high = [s.ap_max - s.ap_avg for s in scored]
    ax.bar(xs, avgs, yerr=[err_low, err_high], capsize=3, color="#4878cf")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([s.family for s in scored], rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("AP@40 (min / avg / max)")
    ax.set_ylim(0, 1.02)
    ax.set_title("Average precision per failure family")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def _injection_counts(rows: list[ReportRow], path: Path) -> str:
    counts: dict[str, int] = {}
    for r in rows:
        counts[r.family] = counts.get(r.family, 0) + r.n_images
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(counts)), 4.0))
    xs = range(len(counts))
    ax.bar(xs, list(counts.values()), color="#6aa84f")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(list(counts.keys()), rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("images written")
    ax.set_title("Injected images per failure family")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
