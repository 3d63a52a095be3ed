"""Figures for per-scale series (headless matplotlib)."""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_series(rows, path, title: str = "") -> int:
    """One panel per source, one line per family, log-scaled values. Returns the number of lines."""
    groups: dict = defaultdict(lambda: defaultdict(list))
    for r in rows:
        v = float(r["value"])
        if math.isfinite(v) and v > 0:
            groups[r["source"]][r["family"]].append((float(r["scale"]), v))
    sources = sorted(groups)
    n = max(1, len(sources))
    fig, axes = plt.subplots(n, 1, figsize=(6.4, 2.6 * n), squeeze=False)
    lines = 0
    for ax, src in zip(axes[:, 0], sources):
        for fam in sorted(groups[src]):
            pts = sorted(groups[src][fam])
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", lw=1, label=fam)
            lines += 1
        ax.set_yscale("log")
        ax.set_ylabel(src, fontsize=8)
        ax.grid(alpha=0.3)
        if len(groups[src]) > 1:
            ax.legend(fontsize=7, ncol=3)
    axes[-1, 0].set_xlabel("scale")
    if title:
        fig.suptitle(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return lines
