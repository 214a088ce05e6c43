"""Matplotlib figure emission for the experiment reports.

SVG output is byte-deterministic: object ids are salted with a fixed
string and the creation-date metadata is stripped, so identical inputs
give identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SVG_RC = {
    "svg.hashsalt": "gazeaug",
    "svg.fonttype": "path",
}


def _save_svg(fig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_svg_scatter(real, synth, path) -> None:
    """Side-by-side fixation scatter of a real and a synthetic dataset.

    Shared axes; bounds are the union bounding box padded by 5%.
    """
    if len(real) == 0 or len(synth) == 0:
        raise ValueError("both datasets must be non-empty")
    real_xy = np.concatenate([s.fixations[:, :2] for s in real.samples])
    synth_xy = np.concatenate([s.fixations[:, :2] for s in synth.samples])
    both = np.concatenate([real_xy, synth_xy])
    lo = both.min(axis=0)
    hi = both.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-9)
    lo, hi = lo - pad, hi + pad

    with plt.rc_context(_SVG_RC):
        fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharex=True, sharey=True)
        for ax, xy, title in ((axes[0], real_xy, "real"), (axes[1], synth_xy, "synthetic")):
            ax.scatter(xy[:, 0], xy[:, 1], s=3, alpha=0.4, linewidths=0)
            ax.set_title(title)
            ax.set_xlim(lo[0], hi[0])
            ax.set_ylim(lo[1], hi[1])
            ax.set_xlabel("x (px)")
        axes[0].set_ylabel("y (px)")
        fig.suptitle("fixation positions")
        fig.tight_layout()
        _save_svg(fig, path)


def emit_svg_bars(table, path) -> None:
    """Grouped mean-accuracy bars by (generator, size) per decoder,
    with standard-deviation error bars."""
    rows = table.row_labels()
    decoders = table.decoder_ids()
    n_rows, n_dec = len(rows), len(decoders)
    width = 0.8 / max(n_dec, 1)

    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(max(6, 1.6 * n_rows), 4))
        x = np.arange(n_rows)
        for j, dec in enumerate(decoders):
            means = [table.cell(row, dec).mean for row in rows]
            stds = [table.cell(row, dec).std for row in rows]
            ax.bar(x + (j - (n_dec - 1) / 2) * width, means, width,
                   yerr=stds, capsize=2, label=dec.upper())
        ax.set_xticks(x)
        ax.set_xticklabels([table.row_title(r) for r in rows], rotation=20, ha="right")
        ax.set_ylabel("holdout accuracy")
        ax.set_ylim(0, 1)
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save_svg(fig, path)
