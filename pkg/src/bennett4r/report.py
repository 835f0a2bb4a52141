"""Static figure rendering for generated samples.

Figures are written straight to files (headless Agg backend) next to
the delimited trajectory export, so a report for one sample is a CSV
plus its rendered views: a 3D curve coloured by speed and the three
coordinate-plane projections with waypoint markers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import Sample

_DPI = 150


def render_sample_figure(sample: Sample, path: Path | str) -> Path:
    """Render one sample's trajectory views into a single image file."""
    path = Path(path)
    pts = sample.positions
    wps = sample.waypoints
    speeds = np.linalg.norm(sample.velocities, axis=1)
    closed = np.vstack([pts, pts[:1]])

    fig = plt.figure(figsize=(9, 7))
    ax3d = fig.add_subplot(2, 2, 1, projection="3d")
    sc = ax3d.scatter(pts[:, 0], pts[:, 1], pts[:, 2], c=speeds, cmap="viridis", s=12)
    ax3d.plot(closed[:, 0], closed[:, 1], closed[:, 2], color="0.6", lw=0.8)
    ax3d.set_title(f"a12={sample.a12:.4g}, alpha12={sample.alpha12:.4g}")
    fig.colorbar(sc, ax=ax3d, shrink=0.6, label="speed")

    planes = [(0, 1, "x", "y"), (0, 2, "x", "z"), (1, 2, "y", "z")]
    for slot, (i, j, li, lj) in enumerate(planes, start=2):
        ax = fig.add_subplot(2, 2, slot)
        ax.plot(closed[:, i], closed[:, j], lw=1.0)
        ax.scatter(wps[:, i], wps[:, j], color="crimson", zorder=3, s=25, marker="x")
        ax.set_xlabel(li)
        ax.set_ylabel(lj)
        ax.set_aspect("equal", adjustable="datalim")
        ax.grid(True, alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
