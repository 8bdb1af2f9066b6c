"""Matplotlib rendering of the analysis products to image files.

Used by the CLI when --emit-plots is set; figures land next to the
delimited-text tables they mirror.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_heatmap(k_axis, gamma_axis, j_grid, eta_grid, path, title="") -> Path:
    """Two-panel (k, gamma) map of the current and the participation ratio."""
    path = Path(path)
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 7.0), sharex=True, constrained_layout=True)
    for ax, grid, label in ((axes[0], j_grid, "J"), (axes[1], eta_grid, r"$\eta$")):
        mesh = ax.pcolormesh(k_axis, gamma_axis, grid, shading="nearest", cmap="RdBu_r" if label == "J" else "viridis")
        fig.colorbar(mesh, ax=ax, label=label)
        ax.set_ylabel(r"$\gamma$")
    axes[1].set_xlabel("k")
    if title:
        axes[0].set_title(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_eta_hist(edges, columns: dict, path) -> Path:
    """Comparative eta histograms with an inset zoom on the low-eta range."""
    path = Path(path)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    for tag, counts in columns.items():
        ax.plot(centers, counts, marker="o", markersize=3, label=tag)
    ax.set_xlabel(r"$\eta$")
    ax.set_ylabel(r"$P_\eta$")
    ax.legend()
    inset = ax.inset_axes([0.45, 0.45, 0.5, 0.5])
    for tag, counts in columns.items():
        inset.plot(centers, counts, marker="o", markersize=2)
    inset.set_xlim(0.0, 0.05)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_cut(k, columns: dict, gamma_value, path) -> Path:
    """J versus k along a gamma row; the classical series gets its own scale."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax_c = None
    for tag, series in columns.items():
        if tag == "classical":
            ax_c = ax.twinx()
            ax_c.plot(k, series, "k--", label=tag)
            ax_c.set_ylabel(r"$J_c$")
        else:
            ax.plot(k, series, label=tag)
    ax.set_xlabel("k")
    ax.set_ylabel(r"$J_q$")
    ax.set_title(rf"$\gamma = {gamma_value:g}$")
    handles, labels = ax.get_legend_handles_labels()
    if ax_c is not None:
        h2, l2 = ax_c.get_legend_handles_labels()
        handles += h2
        labels += l2
    ax.legend(handles, labels)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_eta_vs_j(columns: dict, path) -> Path:
    """Scatter of eta against the current for each source."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    for tag, rows in columns.items():
        rows = np.asarray(rows)
        if rows.size:
            ax.scatter(rows[:, 0], rows[:, 1], s=8, label=tag)
    ax.set_xlabel("J")
    ax.set_ylabel(r"$\eta$")
    ax.legend()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_distribution(p, prob, path, title="") -> Path:
    """Momentum distribution P(p) from a point run."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax.semilogy(p, np.where(prob > 0, prob, np.nan), lw=0.8)
    ax.set_xlabel("p")
    ax.set_ylabel("P(p)")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
