"""Figure rendering for report files.

Every CLI report path writes a PNG next to its delimited output. Rendering is
file-only (Agg backend); nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .analysis import MethodReport, SampleWorth, SimilarityReport  # noqa: E402

_DPI = 150


def save_eval_figure(report: MethodReport, path: str | Path) -> Path:
    """Per-seed accuracy bars with the seed-mean line."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    xs = range(len(report.seeds))
    ax.bar(xs, report.per_seed_accuracy, color="#4878d0", width=0.6)
    ax.axhline(report.mean, color="#d65f5f", linestyle="--", linewidth=1.2,
               label=f"mean = {report.mean:.4f}")
    ax.set_xticks(list(xs), [str(s) for s in report.seeds])
    ax.set_xlabel("seed")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(f"{report.task} / {report.method} (k={report.k}, {report.variant})")
    ax.legend(loc="lower right")
    return _save(fig, path)


def save_sweep_figure(
    few_shot: Sequence[MethodReport],
    sg_icl: MethodReport,
    worth: SampleWorth,
    path: str | Path,
) -> Path:
    """Few-shot accuracy vs k with a std band, against the SG-ICL level."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ks = [r.k for r in few_shot]
    means = [r.mean for r in few_shot]
    stds = [r.std for r in few_shot]
    ax.plot(ks, means, marker="o", color="#4878d0", label="few-shot (gold)")
    ax.fill_between(
        ks,
        [m - s for m, s in zip(means, stds)],
        [m + s for m, s in zip(means, stds)],
        color="#4878d0",
        alpha=0.2,
        linewidth=0,
    )
    ax.axhline(sg_icl.mean, color="#d65f5f", linestyle="--",
               label=f"sg-icl k={sg_icl.k} (mean {sg_icl.mean:.4f})")
    ax.axvline(worth.gold_equivalent, color="#6acc64", linestyle=":",
               label=f"gold-equivalent = {worth.gold_equivalent:.2f}")
    ax.set_xlabel("gold in-context samples (k)")
    ax.set_ylabel("accuracy")
    ax.set_title(f"{sg_icl.task} shot sweep ({sg_icl.variant})")
    ax.set_xticks(ks)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def save_similarity_figure(reports: Sequence[SimilarityReport], path: str | Path) -> Path:
    """Mean input-demonstration cosine similarity per conditioning mode."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    xs = range(len(reports))
    ax.bar(xs, [r.mean for r in reports], color=["#4878d0", "#d65f5f"][: len(reports)],
           width=0.5)
    ax.set_xticks(list(xs), [r.conditioning_mode for r in reports])
    ax.set_ylabel("mean cosine similarity")
    task = reports[0].task if reports else ""
    ax.set_title(f"{task}: input vs generated demonstration")
    for x, r in zip(xs, reports):
        ax.annotate(f"{r.mean:.4f}", (x, r.mean), ha="center", va="bottom", fontsize=8)
    return _save(fig, path)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


__all__ = ["save_eval_figure", "save_similarity_figure", "save_sweep_figure"]
