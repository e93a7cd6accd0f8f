"""Figures written next to a report file."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# keep PNG bytes stable across runs
_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def plot_comparison(table: dict, path: Path) -> Path:
    rows = table["rows"]
    names = [r["scheme"] for r in rows]
    fig, (ax_exp, ax_wear) = plt.subplots(1, 2, figsize=(10, 4))
    ax_exp.bar(names, [max(r["exposure"], 0.5) for r in rows], color="tab:red")
    ax_exp.set_yscale("log")
    ax_exp.set_ylabel("median exposure (level increments)")
    ax_exp.set_title("Program disturbance exposure")
    ax_wear.bar(names, [r["neighbor_flips"] for r in rows], color="tab:blue")
    ax_wear.set_ylabel("median neighbor flips")
    ax_wear.set_title("Adjacent-wordline disturbance")
    for ax in (ax_exp, ax_wear):
        ax.tick_params(axis="x", rotation=30)
    fig.suptitle(f"targets {table['target_lpas']}, {table['trials']} trials")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def plot_wear(summary: dict, path: Path) -> Path:
    hist = summary["wear"]["cell_wear_histogram"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([v for v, _ in hist], [c for _, c in hist], width=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("cumulative level increments per cell")
    ax.set_ylabel("cells")
    ax.set_title("Cell wear")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def render_figures(report, out: str | Path) -> list[Path]:
    """``<out stem>.compare<i>.png`` per comparison and ``<out stem>.wear.png``."""
    out = Path(out)
    stem = out.with_suffix("")
    written = []
    for i, table in enumerate(report.comparisons, 1):
        written.append(plot_comparison(table, stem.with_name(f"{stem.name}.compare{i}.png")))
    if report.summary.get("wear", {}).get("cell_wear_histogram"):
        written.append(plot_wear(report.summary, stem.with_name(f"{stem.name}.wear.png")))
    return written
