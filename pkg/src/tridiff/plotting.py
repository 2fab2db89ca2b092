"""Render the four metric-versus-lambda curves of a sweep to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import METRIC_NAMES

_YLABEL = {
    "auc": "AUC",
    "recall": "recall",
    "diversification": "diversification",
    "novelty": "novelty (mean item degree)",
}


def render_figures(result, destination: str | Path) -> list[Path]:
    """One PNG per metric; list metrics get one line per list length.

    AUC does not depend on the list length, so its figure carries a
    single errorbar line and a marker at the optimum.
    """
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    grid = list(result.effective_grid)
    lengths = list(result.config.list_lengths)
    written = []

    for metric in METRIC_NAMES:
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        if metric == "auc":
            means = [result.aggregates[(lam, lengths[0])].auc_mean for lam in grid]
            stds = [result.aggregates[(lam, lengths[0])].auc_std for lam in grid]
            ax.errorbar(grid, means, yerr=stds, fmt="o-", ms=3, capsize=2, lw=1)
            opt_lam, opt_val = result.optima[("auc", lengths[0])]
            ax.plot([opt_lam], [opt_val], "r*", ms=12,
                    label=f"optimum {opt_val:.4f} at λ={opt_lam:.2f}")
            ax.legend(loc="lower center", fontsize=8)
        else:
            for length in lengths:
                means = [getattr(result.aggregates[(lam, length)], f"{metric}_mean")
                         for lam in grid]
                stds = [getattr(result.aggregates[(lam, length)], f"{metric}_std")
                        for lam in grid]
                ax.errorbar(grid, means, yerr=stds, fmt="o-", ms=3, capsize=2, lw=1,
                            label=f"L = {length}")
            ax.legend(fontsize=8)
        ax.set_xlabel("λ")
        ax.set_ylabel(_YLABEL[metric])
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = dest / f"{metric}_vs_lambda.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
