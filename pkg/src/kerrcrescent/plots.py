"""Figure rendering for the report path: every command can drop a PNG
next to its CSV output.  matplotlib is imported lazily so runs with
plot=false never pay for it."""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = [
    "render_photon_stats",
    "render_wigner",
    "render_fidelity",
    "render_ensemble",
    "render_scan",
]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_photon_stats(path: str | Path, baseline: np.ndarray, per_x: dict) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.arange(baseline.size)
    ax.plot(n, baseline, "k-", lw=1.5, label="coherent baseline")
    for x, probs in per_x.items():
        ax.plot(n, probs, lw=1.2, label=f"x = {x:g}")
    nz = np.where(baseline + sum(per_x.values(), np.zeros_like(baseline)) > 1e-8)[0]
    if nz.size:
        ax.set_xlim(max(nz.min() - 2, 0), nz.max() + 2)
    ax.set_xlabel("photon number n")
    ax.set_ylabel("p(n)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_wigner(path: str | Path, x_axis, p_axis, values) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 5))
    vmax = float(np.max(np.abs(values)))
    mesh = ax.pcolormesh(x_axis, p_axis, values.T, cmap="RdBu_r",
                         vmin=-vmax, vmax=vmax, shading="auto")
    fig.colorbar(mesh, ax=ax, label="W(x, p)")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_fidelity(path: str | Path, xs, f_abs, dens) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, f_abs, "r-", lw=1.5, label="|F(x)|")
    ax.set_xlabel("homodyne outcome x")
    ax.set_ylabel("|F(x)|")
    ax.set_ylim(0, 1.05)
    ax2 = ax.twinx()
    ax2.plot(xs, dens, "g--", lw=1.2, label="P(x)")
    ax2.set_ylabel("P(x)")
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], frameon=False, loc="lower center")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_ensemble(path: str | Path, probs, purity_value: float) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.arange(len(probs))
    ax.bar(n, probs, width=1.0, color="steelblue")
    nz = np.where(probs > 1e-8)[0]
    if nz.size:
        ax.set_xlim(max(nz.min() - 2, 0), nz.max() + 2)
    ax.set_xlabel("photon number n")
    ax.set_ylabel("p(n)")
    ax.set_title(f"ensemble state, purity = {purity_value:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_scan(path: str | Path, rows: list[dict], sweep_label: str) -> Path:
    plt = _pyplot()
    metrics = ["mean_n", "var_n", "fano", "min_W", "neg_volume", "purity", "F_min_over_support"]
    fig, axes = plt.subplots(2, 4, figsize=(14, 6))
    xs = [r["sweep_value"] for r in rows]
    for ax, key in zip(axes.flat, metrics):
        ax.plot(xs, [r[key] for r in rows], "o-")
        ax.set_xlabel(sweep_label)
        ax.set_ylabel(key)
    axes.flat[-1].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
