"""Benchmark report figures.

Renders the per-query rank comparison, the pooled rank distributions,
and the significance chart as PNG files next to the delimited output.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

if TYPE_CHECKING:
    from .evaluation import BenchmarkReport


def render_benchmark_figures(report: "BenchmarkReport", out_dir: str) -> list[str]:
    """Write the benchmark figures; returns the file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    queries = [r.query for r in report.results]
    x = np.arange(len(queries))

    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(queries)), 4.0))
    width = 0.38
    ax.bar(x - width / 2, [r.mean_soft for r in report.results], width, label="soft", color="#2a7fbf")
    ax.bar(x + width / 2, [r.mean_hard for r in report.results], width, label="hard", color="#c45b4e")
    ax.set_xticks(x)
    ax.set_xticklabels(queries, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("mean rank of purchase (lower is better)")
    ax.set_title(f"{report.scenario_name}: mean purchase rank per query")
    ax.legend()
    fig.tight_layout()
    path = out / "mean_ranks.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    soft = np.sort([rec.soft_rank for rec in report.records])
    hard = np.sort([rec.hard_rank for rec in report.records])
    y = np.arange(1, len(soft) + 1) / len(soft)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.step(soft, y, where="post", label="soft", color="#2a7fbf")
    ax.step(hard, y, where="post", label="hard", color="#c45b4e")
    ax.set_xscale("log")
    ax.set_xlabel("rank of purchased item")
    ax.set_ylabel("fraction of folds at or below rank")
    ax.set_title(f"{report.scenario_name}: rank distribution over all folds")
    ax.legend(loc="lower right")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = out / "rank_distribution.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    neglog = [-math.log10(max(r.p_value, 1e-300)) for r in report.results]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(queries)), 4.0))
    ax.bar(x, neglog, color="#4a9163")
    ax.axhline(4.0, color="black", linestyle="--", linewidth=1, label="p = 1e-4")
    ax.set_xticks(x)
    ax.set_xticklabels(queries, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("-log10 p (one-sided)")
    ax.set_title(f"{report.scenario_name}: evidence that soft ranks lower")
    ax.legend()
    fig.tight_layout()
    path = out / "significance.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))
    return written
