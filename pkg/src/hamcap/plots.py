"""Static SVG figures with reproducible bytes."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "hamcap"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_profiles(path, p, curves: dict, lines: dict, tangents: dict, title: str):
    """Profiles as solid curves, comparison lines dashed, tangent lines dotted."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, y in curves.items():
        ax.plot(p, y, lw=2, label=name)
    for name, y in lines.items():
        ax.plot(p, y, "--", lw=0.8, label=name)
    for name, y in tangents.items():
        ax.plot(p, y, ":", lw=1, label=name)
    finite = np.concatenate([np.asarray(y)[np.isfinite(y)] for y in curves.values()])
    pad = 0.5 * (finite.max() - finite.min() + 1.0)
    ax.set_ylim(finite.min() - pad, finite.max() + pad)
    ax.set_xlabel("p")
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    _save(fig, path)


def plot_portrait(path, orbits, title: str):
    """Orbit traces in the (q mod 1, p) plane of the first degree of freedom."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for o in orbits:
        q = np.mod(o.trajectory.q[:, 0], 1.0)
        p = o.trajectory.p[:, 0]
        ax.plot(q, p, ".", ms=1)
        ax.plot([q[0]], [p[0]], "k+", ms=6)
    ax.set_xlim(0, 1)
    ax.set_xlabel("q mod 1")
    ax.set_ylabel("p")
    ax.set_title(title)
    _save(fig, path)
