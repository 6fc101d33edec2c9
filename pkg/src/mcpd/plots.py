"""Static figures for run-length traces, rendered to files (SVG/PNG).

Figures are post-hoc artifacts, never interactive, so the Agg backend is
forced before pyplot loads.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["runlength_figure", "overlay_figure", "save_figure"]


def _mark_truth(ax, cp_times):
    for i, cp in enumerate(cp_times):
        ax.axvline(cp, color="0.3", ls="--", lw=0.9, label="true CP" if i == 0 else None)


def runlength_figure(map_path, cp_times=(), events=(), title=None):
    """MAP run length per step, with dashed true-CP markers and detections."""
    path = np.asarray(map_path)
    fig, ax = plt.subplots(figsize=(9.0, 3.2))
    ax.plot(np.arange(path.size), path, lw=1.2, color="C0", label="MAP run length")
    _mark_truth(ax, cp_times)
    if events:
        xs = [e.detected_at for e in events]
        ys = [e.runlength_at_detection for e in events]
        ax.scatter(xs, ys, marker="v", color="C3", zorder=3, s=28, label="detection")
    ax.set_xlabel("step")
    ax.set_ylabel(r"MAP run length $r^*_t$")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    fig.tight_layout()
    return fig


def overlay_figure(paths: dict, cp_times=(), title=None):
    """Several MAP run-length paths (e.g. per sample size) on shared axes."""
    fig, ax = plt.subplots(figsize=(9.0, 3.2))
    for i, (label, path) in enumerate(paths.items()):
        path = np.asarray(path)
        ax.plot(np.arange(path.size), path, lw=1.2, color=f"C{i % 10}", label=label)
    _mark_truth(ax, cp_times)
    ax.set_xlabel("step")
    ax.set_ylabel(r"MAP run length $r^*_t$")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    fig.tight_layout()
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path)
    plt.close(fig)
