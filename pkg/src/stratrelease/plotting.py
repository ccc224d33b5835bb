"""Deterministic SVG line plots for parameter sweeps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_curve(xs, ys, path, xlabel: str, ylabel: str, title: str = "") -> None:
    """Write a self-contained SVG; identical inputs give identical bytes."""
    with matplotlib.rc_context({"svg.hashsalt": "stratrelease", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, linewidth=0.4, alpha=0.6)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
