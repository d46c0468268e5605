"""Matplotlib renderings of experiment reports, written next to the data files."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .engine import RemainderLadder, TailTable, VarianceLadder  # noqa: E402


def tail_ratio_figure(table: TailTable, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for tail, color in (("upper", "tab:blue"), ("lower", "tab:orange")):
        rows = [r for r in table.rows if r.tail == tail]
        xs = [r.x for r in rows]
        ax.plot(xs, [r.ratio for r in rows], "o-", color=color, label=f"{tail} tail")
        ax.fill_between(xs, [r.ci_lo for r in rows], [r.ci_hi for r in rows],
                        color=color, alpha=0.2, linewidth=0)
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xlabel("x")
    ax.set_ylabel("tail probability / normal tail")
    ax.set_title(f"{table.model_name}, {table.weight_name}, n={table.n}, "
                 f"{table.replicates} replicates")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def variance_ratio_figure(ladder: VarianceLadder, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ns = [r.n for r in ladder.rows]
    ax.errorbar(ns, [r.ratio for r in ladder.rows],
                yerr=[3 * r.se for r in ladder.rows], fmt="o-", capsize=3,
                label="n Var / sigma^2 (3 SE)")
    ax.plot(ns, [1.0 + r.bound for r in ladder.rows], ":", color="gray", label="1 +/- envelope")
    ax.plot(ns, [1.0 - r.bound for r in ladder.rows], ":", color="gray")
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("variance ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def remainder_figure(ladder: RemainderLadder, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ns = np.array([r.n for r in ladder.rows], dtype=float)
    rn = np.array([r.mean_n_rn2 for r in ladder.rows])
    ax.loglog(ns, rn, "o-", label="E[n Rn^2]")
    vn = np.array([r.mean_n_vn2 for r in ladder.rows])
    if np.all(vn > 0):
        ax.loglog(ns, vn, "s-", label="E[n Vn^2]")
    if math.isfinite(ladder.slope) and np.all(rn > 0):
        anchor = rn[0] * (ns / ns[0]) ** ladder.slope
        ax.loglog(ns, anchor, "--", color="gray",
                  label=f"slope {ladder.slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("scaled second moment")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def residual_histogram_figure(residuals, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    vals = np.log10(np.maximum(np.asarray(residuals, dtype=float), 1e-18))
    ax.hist(vals, bins=40, color="tab:blue", alpha=0.8)
    ax.set_xlabel("log10 |identity residual|")
    ax.set_ylabel("replicates")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
