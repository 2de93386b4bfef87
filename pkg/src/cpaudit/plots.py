"""Matplotlib rendering of report artifacts to files.

Figures accompany the delimited outputs written by the CLI. Rendering uses
the Agg backend with fixed geometry and no timestamps so that repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 120


def save_cvp_figure(curve, path, title: str = "Conditional validity profile") -> None:
    """Quantile profile of reliability values with under/over areas shaded."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=_DPI)
    p = np.concatenate(([0.0], curve.props))
    q = np.concatenate(([curve.quantiles[0]], curve.quantiles))
    ax.step(p, q, where="post", color="#1f4e79", lw=1.8, label="estimated profile")
    ax.axhline(curve.target, color="black", ls="--", lw=1.0,
               label=f"target {curve.target:g}")
    ax.fill_between(p, q, curve.target, where=q < curve.target, step="post",
                    color="#c23b22", alpha=0.35, label="undercoverage area")
    ax.fill_between(p, q, curve.target, where=q >= curve.target, step="post",
                    color="#2e75b6", alpha=0.25, label="overcoverage area")
    ax.set_xlabel("cumulative proportion of points")
    ax.set_ylabel("estimated coverage probability")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_diagram_figure(diagram, path, title: str = "Reliability diagram") -> None:
    """Mean confidence vs empirical frequency per equal-frequency bin."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8), dpi=_DPI)
    ax.plot([0, 1], [0, 1], color="gray", ls=":", lw=1.0, label="ideal")
    ax.plot(diagram.mean_confidence, diagram.empirical_accuracy,
            marker="o", ms=5, color="#1f4e79", lw=1.4, label="bins")
    ax.set_xlabel("mean predicted coverage")
    ax.set_ylabel("empirical coverage")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title(f"{title} (ECE = {diagram.ece:.4f})")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_selection_figure(scores, candidate_names, selected: int, path) -> None:
    """Heatmap of the per-split validity scores with the winner marked."""
    scores = np.asarray(scores, dtype=float)
    display = np.where(np.isfinite(scores), scores, np.nan)
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(candidate_names), 3.6), dpi=_DPI)
    im = ax.imshow(display, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(candidate_names)))
    ax.set_xticklabels(
        [f"{n}*" if m == selected else n for m, n in enumerate(candidate_names)],
        rotation=20, ha="right", fontsize=8)
    ax.set_yticks(range(scores.shape[0]))
    ax.set_yticklabels([f"split {k}" for k in range(scores.shape[0])], fontsize=8)
    for (k, m), v in np.ndenumerate(scores):
        ax.text(m, k, "fail" if not np.isfinite(v) else f"{v:.3f}",
                ha="center", va="center", fontsize=7,
                color="white" if not np.isfinite(v) or v < np.nanmean(display) else "black")
    fig.colorbar(im, ax=ax, label="validity index")
    ax.set_title("Per-split conditional validity scores (* = selected)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_bench_figure(settings_data: dict, path) -> None:
    """Grouped bars of the rank-agreement summary per setting."""
    metrics = ("tau_w", "ndcg1", "ndcg3", "hit3")
    names = list(settings_data)
    fig, ax = plt.subplots(figsize=(2.4 + 1.8 * len(names), 4.0), dpi=_DPI)
    width = 0.8 / len(metrics)
    xs = np.arange(len(names))
    colors = ("#1f4e79", "#2e75b6", "#9dc3e6", "#c23b22")
    for i, metric in enumerate(metrics):
        means = [settings_data[s]["summary"][metric]["mean"] for s in names]
        sds = [settings_data[s]["summary"][metric]["sd"] for s in names]
        ax.bar(xs + (i - 1.5) * width, means, width, yerr=sds, capsize=3,
               color=colors[i], label=metric)
    ax.set_xticks(xs)
    ax.set_xticklabels([f"setting {s.upper()}" for s in names])
    ax.set_ylabel("rank agreement with the oracle")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.legend(fontsize=8)
    ax.set_title("Selection fidelity against oracle rankings")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
