"""Figure rendering for benchmark tables and parameter sweeps.

Used by the CLI to drop a PNG next to every delimited report it writes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["benchmark_figure", "sweep_figure", "sparsity_figure"]


def benchmark_figure(table, path):
    """Grouped bars of mean accuracy (with std whiskers) per rate and variant."""
    rates = sorted({r.rate for r in table.rows})
    variants = []
    for r in table.rows:
        if r.variant not in variants:
            variants.append(r.variant)
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(1, len(variants))
    xs = np.arange(len(rates))
    for i, variant in enumerate(variants):
        means, stds = [], []
        for rate in rates:
            row = next(r for r in table.rows if r.variant is variant and r.rate == rate)
            means.append(row.mean)
            stds.append(row.std)
        ax.bar(xs + i * width, means, width, yerr=stds, capsize=3, label=variant.value)
    ax.set_xticks(xs + width * (len(variants) - 1) / 2)
    ax.set_xticklabels([f"{r:g}%" for r in rates])
    ax.set_xlabel("training rate")
    ax.set_ylabel("accuracy over full set (%)")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sweep_figure(x, series, path, xlabel, ylabel, logx=True, logy=False):
    """One line per named series against a shared (usually log-scaled) axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, values in series.items():
        ax.plot(x, values, marker="o", markersize=3, label=name)
    if logx:
        ax.set_xscale("log", base=2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sparsity_figure(W, path, reference=None, tol=1e-6):
    """Nonzero pattern of a surface matrix, optionally next to a reference."""
    W = np.asarray(W)
    cutoff = tol * (1.0 + np.abs(W).max(initial=0.0))
    panels = [("fitted", np.abs(W) > cutoff)]
    if reference is not None:
        reference = np.asarray(reference)
        ref_cut = tol * (1.0 + np.abs(reference).max(initial=0.0))
        panels.append(("reference", np.abs(reference) > ref_cut))
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 4))
    if len(panels) == 1:
        axes = [axes]
    for ax, (title, mask) in zip(axes, panels):
        ax.imshow(mask, cmap="Greys", interpolation="nearest")
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
