"""Figures for reports, rendered off-screen with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_traces(traces: dict, path: Path, title: str = "training loss") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, losses in sorted(traces.items()):
        ax.plot(np.arange(1, len(losses) + 1), losses, label=name, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("cross-entropy")
    ax.set_yscale("log")
    ax.set_title(title)
    if len(traces) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_heatmap(rows, path: Path, x: str = "layers", y: str = "qubits", value: str = "accuracy") -> Path:
    xs = sorted({r[x] for r in rows})
    ys = sorted({r[y] for r in rows})
    grid = np.full((len(ys), len(xs)), np.nan)
    for i, yv in enumerate(ys):
        for j, xv in enumerate(xs):
            vals = [r[value] for r in rows if r[x] == xv and r[y] == yv and r[value] is not None]
            if vals:
                grid[i, j] = np.mean(vals)
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(grid, origin="lower", cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(xs)), [str(v) for v in xs])
    ax.set_yticks(range(len(ys)), [str(v) for v in ys])
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    for i in range(len(ys)):
        for j in range(len(xs)):
            if np.isfinite(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center", fontsize=7, color="w")
    fig.colorbar(im, ax=ax, label=value)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_curve(rows, path: Path, x: str, value: str = "accuracy", group: str | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    groups = sorted({r[group] for r in rows}) if group else [None]
    for g in groups:
        sub = [r for r in rows if group is None or r[group] == g]
        xs = sorted({r[x] for r in sub})
        means = [np.mean([r[value] for r in sub if r[x] == xv]) for xv in xs]
        ax.plot(xs, means, marker="o", label=None if g is None else str(g))
    ax.set_xlabel(x)
    ax.set_ylabel(value)
    if group:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def render_figures(report, out: Path, stem: str) -> dict:
    """Pick figures by table shape; returns ``{name: path}``."""
    paths = {}
    if report.traces:
        paths["loss"] = plot_traces(report.traces, out / f"{stem}_loss.png")
    for name, rows in report.tables.items():
        if not rows:
            continue
        keys = set(rows[0])
        if {"qubits", "layers", "accuracy"} <= keys:
            paths[name] = plot_heatmap(rows, out / f"{stem}_{name}.png")
        elif {"window_s", "accuracy"} <= keys:
            paths[name] = plot_curve(rows, out / f"{stem}_{name}.png", "window_s")
        elif {"epsilon", "accuracy", "method"} <= keys:
            paths[name] = plot_curve(rows, out / f"{stem}_{name}.png", "epsilon", group="method")
    return paths
