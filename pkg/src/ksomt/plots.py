"""Figure rendering for the CLI report path.

All figures are written to files (Agg backend); nothing is shown
interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_curves(dataset, path) -> str:
    """All curves, one color per group."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    cmap = plt.get_cmap("tab10")
    for g, sample in enumerate(dataset.samples):
        color = cmap(g % 10)
        for i, row in enumerate(sample.values):
            ax.plot(
                dataset.grid.points,
                row,
                color=color,
                lw=0.6,
                alpha=0.6,
                label=sample.label if i == 0 else None,
            )
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def _scatter(ax, pts, **kw):
    if pts.shape[1] >= 3:
        ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], **kw)
    else:
        ax.scatter(pts[:, 0], pts[:, 1], **kw)


def _axes_for(d: int, fig):
    if d >= 3:
        return fig.add_subplot(111, projection="3d")
    return fig.add_subplot(111)


def plot_cloud(cloud: np.ndarray, path) -> str:
    """T_0 (square) among its permutation replicas (circles).

    For d > 3 only the first three coordinates are drawn.
    """
    cloud = np.asarray(cloud, dtype=float)
    fig = plt.figure(figsize=(5.5, 5))
    ax = _axes_for(cloud.shape[1], fig)
    _scatter(ax, cloud[1:], s=8, alpha=0.5, label="replicas")
    _scatter(ax, cloud[:1], s=70, marker="s", color="red", label="T0")
    ax.set_title("statistic cloud")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_transport(grid_points: np.ndarray, image_of_t0: np.ndarray, path) -> str:
    """Reference grid with the transported image of T_0 highlighted."""
    grid_points = np.asarray(grid_points, dtype=float)
    fig = plt.figure(figsize=(5.5, 5))
    ax = _axes_for(grid_points.shape[1], fig)
    _scatter(ax, grid_points, s=6, alpha=0.4, label="grid")
    _scatter(ax, image_of_t0[None, :], s=70, marker="s", color="red", label="F*(T0)")
    ax.set_title("reference grid and image of T0")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
