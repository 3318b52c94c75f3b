"""Report figures rendered straight to files.

Every function takes an output path, draws one figure with the Agg backend,
and closes it, so the CLI can emit plots next to its delimited reports
without a display server.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_shrinkage_profile(path, column_norms: np.ndarray) -> None:
    """Bar plot of per-basis-column shrinkage norms from one fit."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    cols = np.arange(1, len(column_norms) + 1)
    ax.bar(cols, column_norms, color="tab:blue")
    ax.set_xlabel("basis column")
    ax.set_ylabel("posterior mean norm of shared loadings")
    ax.set_title("Shrinkage profile")
    ax.set_xticks(cols)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_mixture_trace(path, pi_draws: np.ndarray) -> None:
    """Trace of the cause-fraction draws across retained snapshots."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for c in range(pi_draws.shape[1]):
        ax.plot(pi_draws[:, c], label=f"cause {c + 1}", linewidth=1.0)
    ax.set_xlabel("retained snapshot")
    ax.set_ylabel("cause fraction")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("Mixture-weight trace")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_csmf_intervals(path, mean: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                        true_csmf: np.ndarray | None = None) -> None:
    """CSMF posterior means with 95% error bars, optional truth overlay."""
    causes = np.arange(1, len(mean) + 1)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.errorbar(causes, mean, yerr=np.vstack([mean - lo, hi - mean]),
                fmt="o", capsize=4, color="tab:blue", label="estimate")
    if true_csmf is not None:
        ax.scatter(causes, true_csmf, marker="x", color="tab:red", label="true")
        ax.legend(fontsize=8)
    ax.set_xlabel("cause")
    ax.set_ylabel("mortality fraction")
    ax.set_xticks(causes)
    ax.set_ylim(0.0, 1.0)
    ax.set_title("CSMF estimate")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_confusion(path, true_labels: np.ndarray, predicted: np.ndarray,
                   n_causes: int) -> None:
    """Row-normalized confusion heatmap of top-cause assignments."""
    table = np.zeros((n_causes, n_causes))
    for t, p in zip(true_labels, predicted):
        table[t, p] += 1
    rows = table.sum(axis=1, keepdims=True)
    shown = np.divide(table, rows, out=np.zeros_like(table), where=rows > 0)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(shown, vmin=0.0, vmax=1.0, cmap="Blues")
    ticks = np.arange(n_causes)
    ax.set_xticks(ticks, [str(c + 1) for c in ticks])
    ax.set_yticks(ticks, [str(c + 1) for c in ticks])
    ax.set_xlabel("predicted cause")
    ax.set_ylabel("true cause")
    ax.set_title("Confusion (row-normalized)")
    for i in range(n_causes):
        for j in range(n_causes):
            ax.text(j, i, f"{shown[i, j]:.2f}", ha="center", va="center",
                    fontsize=8, color="black" if shown[i, j] < 0.6 else "white")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_benchmark_strip(path, scores: dict[str, np.ndarray], metric: str) -> None:
    """Per-dataset scores of each model as jittered strips with means."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    rng = np.random.default_rng(0)
    for pos, (model, vals) in enumerate(scores.items()):
        vals = np.asarray(vals, dtype=float)
        jitter = rng.uniform(-0.12, 0.12, size=len(vals))
        ax.scatter(np.full(len(vals), pos) + jitter, vals, s=18, alpha=0.7)
        ax.hlines(vals.mean(), pos - 0.25, pos + 0.25, color="black", linewidth=2)
    ax.set_xticks(range(len(scores)), list(scores))
    ax.set_ylabel(metric)
    ax.set_title(f"Benchmark: {metric} per dataset")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_latent_summary(path, mean: np.ndarray, mean_lo: np.ndarray,
                        mean_hi: np.ndarray, cov: np.ndarray, cause: int) -> None:
    """Latent symptom means with 95% bands beside the covariance heatmap."""
    p = len(mean)
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.8))
    idx = np.arange(1, p + 1)
    left.errorbar(idx, mean, yerr=np.vstack([mean - mean_lo, mean_hi - mean]),
                  fmt="o", markersize=3, capsize=2, color="tab:blue")
    left.axhline(0.0, color="gray", linewidth=0.8)
    left.set_xlabel("symptom")
    left.set_ylabel("latent mean")
    left.set_title(f"E[z] for cause {cause + 1}")
    lim = np.abs(cov).max() or 1.0
    im = right.imshow(cov, cmap="RdBu_r", vmin=-lim, vmax=lim)
    right.set_title("Cov(z) posterior mean")
    right.set_xlabel("symptom")
    right.set_ylabel("symptom")
    fig.colorbar(im, ax=right, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
