"""Matplotlib figures rendered next to the delimited reports.

Two figure kinds mirror the experiment axes: conversion accuracy as a
function of training-set size (learning curves), and accuracy by reference
digit length for a single report.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import CurvePoint, EvalReport

_MARKERS = ["o", "s", "^", "D", "v", "*"]


def learning_curve_figure(points: Sequence[CurvePoint], path: str | Path, title: str = "Conversion accuracy vs. training size") -> Path:
    """Accuracy (0-100) against training size, one line per series."""
    series: dict[str, list[CurvePoint]] = {}
    for p in points:
        series.setdefault(p.series, []).append(p)
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (name, pts) in enumerate(sorted(series.items())):
        pts = sorted(pts, key=lambda p: p.size)
        ax.plot(
            [p.size for p in pts],
            [100.0 * p.accuracy for p in pts],
            marker=_MARKERS[i % len(_MARKERS)],
            label=name,
        )
    ax.set_xscale("log")
    ax.set_xlabel("Size of training")
    ax.set_ylabel("Conversion accuracy")
    ax.set_ylim(0, 100)
    ax.grid(True, axis="y", linestyle="--", alpha=0.5)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def accuracy_by_length_figure(report: EvalReport, path: str | Path) -> Path:
    """Bar chart of accuracy per reference digit length for one report."""
    lengths = sorted(report.per_length)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar([str(k) for k in lengths], [100.0 * report.per_length[k] for k in lengths], color="#4878d0")
    ax.set_xlabel("Digits in reference")
    ax.set_ylabel("Conversion accuracy")
    ax.set_ylim(0, 100)
    ax.set_title(f"{report.label} @ tolerance {report.tolerance} (n={report.n})", fontsize=10)
    ax.grid(True, axis="y", linestyle="--", alpha=0.5)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
