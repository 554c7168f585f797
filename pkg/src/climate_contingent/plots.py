"""Optional PNG charts (needs matplotlib: ``pip install .[plots]``)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def outcome_histograms(outcome_a, outcome_b, path: Path, bins: int = 30) -> None:
    plt = _plt()
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, vals, label in zip(axes, (outcome_a, outcome_b), ("Adapter", "Backer")):
        ax.hist(vals, bins=bins, color="tab:blue" if label == "Adapter" else "tab:orange")
        ax.axvline(np.mean(vals), color="k", lw=1)
        ax.set_title(f"{label} outcome")
        ax.set_xlabel("wealth change")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def price_bars(names, floors, prices, path: Path) -> None:
    plt = _plt()
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - 0.2, floors, 0.4, label="minimum")
    ax.bar(x + 0.2, prices, 0.4, label="optimized")
    ax.set_xticks(x, names)
    ax.set_ylabel("price per unit principal")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def ccb_charts(bins, schedule, cum, trad, totals, target, pooled, out_dir: Path) -> list[str]:
    plt = _plt()
    out_dir = Path(out_dir)
    names = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(pooled, bins=40)
    for e in bins.edges:
        ax.axvline(e, color="k", lw=0.5, alpha=0.5)
    ax.set_xlabel("climate value")
    ax.set_title("pooled outcomes and bin edges")
    fig.tight_layout()
    fig.savefig(out_dir / "pooled.png", dpi=120)
    plt.close(fig)
    names.append("pooled.png")

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(range(bins.n_bins), schedule.rates, where="mid")
    ax.set_xlabel("bin")
    ax.set_ylabel("coupon rate")
    fig.tight_layout()
    fig.savefig(out_dir / "schedule.png", dpi=120)
    plt.close(fig)
    names.append("schedule.png")

    fig, ax = plt.subplots(figsize=(7, 4))
    t = np.arange(1, cum.shape[1] + 1)
    for row in cum[:50]:
        ax.plot(t, row, color="tab:blue", alpha=0.2, lw=0.8)
    ax.plot(t, trad, color="k", lw=2, label="traditional")
    ax.set_xlabel("year")
    ax.set_ylabel("cumulative discounted return")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "paths.png", dpi=120)
    plt.close(fig)
    names.append("paths.png")

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(totals, bins=40)
    ax.axvline(target, color="k", lw=1.5)
    ax.set_xlabel("total return (NPV)")
    fig.tight_layout()
    fig.savefig(out_dir / "total_returns.png", dpi=120)
    plt.close(fig)
    names.append("total_returns.png")
    return names
