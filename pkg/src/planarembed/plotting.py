"""Figure rendering for evaluation reports (file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import DistortionReport


def plot_report(report: DistortionReport, path: str) -> None:
    """Scatter per-pair stretch against input distance, with the distortion line."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = [r.d_g for r in report.pairs]
    ys = [r.stretch for r in report.pairs]
    ax.scatter(xs, ys, s=12, alpha=0.6, edgecolors="none")
    ax.axhline(report.distortion, color="crimson", lw=1.0, ls="--",
               label=f"distortion {report.distortion:.2f}")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xlabel("input distance")
    ax.set_ylabel("mean stretch")
    ax.set_title(f"{report.mode} sampler, {report.seeds} seeds")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_curve(xs, ys, xlabel: str, ylabel: str, title: str, path: str,
               bound=None) -> None:
    """Line plot used for the distortion trend curves."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, ys, marker="o", lw=1.2)
    if bound is not None:
        ax.plot(xs, bound, marker="", lw=1.0, ls="--", color="crimson",
                label="acceptance ceiling")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
