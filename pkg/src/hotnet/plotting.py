"""Matplotlib figures for CLI reports (rendered off-screen to files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .density import Density  # noqa: E402
from .graph import MetricGraph  # noqa: E402
from .payoff import Profile, attraction_partition  # noqa: E402

__all__ = ["plot_profile", "plot_density_approx", "plot_gaps", "plot_counterexample"]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def _edge_axes(graph: MetricGraph, width=7.0):
    n = len(graph.edges)
    fig, axes = plt.subplots(n, 1, figsize=(width, 1.6 * n + 0.6), squeeze=False)
    return fig, [a[0] for a in axes]


def _density_curve(ax, density: Density, eid: str, **kw):
    for a, b, fa, fb in density.pieces[eid]:
        ax.plot([float(a), float(b)], [float(fa), float(fb)], **kw)
        kw.pop("label", None)


def plot_profile(graph: MetricGraph, density: Density, profile: Profile, path, title: str | None = None) -> Path:
    """Density on every edge with player locations and attraction boundaries."""
    part = attraction_partition(graph, profile)
    fig, axes = _edge_axes(graph)
    for ax, e in zip(axes, graph.edges):
        _density_curve(ax, density, e.id, color="tab:blue", lw=1.2)
        for p in part.pieces[e.id][1:]:
            ax.axvline(float(p.lo), color="0.75", lw=0.6, ls=":")
        lam = e.length
        for x, c in zip(profile.locations, profile.counts):
            arc = graph.arc_on(x, e.id)
            if arc is None:
                continue
            ax.plot([float(arc)], [0], marker="o" if c == 1 else "D", color="tab:red" if c > 1 else "k",
                    ms=4, clip_on=False)
        ax.set_xlim(0, float(lam))
        ax.set_ylim(bottom=0)
        ax.set_ylabel(f"{e.id}\n{e.u}-{e.v}", rotation=0, ha="right", va="center", fontsize=8)
    axes[-1].set_xlabel("arc length")
    fig.suptitle(title or f"profile with {profile.n} players (red diamonds: shared locations)", fontsize=10)
    return _save(fig, path)


def plot_density_approx(density: Density, step_density: Density, path) -> Path:
    graph = density.graph
    fig, axes = _edge_axes(graph)
    for ax, e in zip(axes, graph.edges):
        _density_curve(ax, density, e.id, color="tab:blue", lw=1.2, label="f")
        _density_curve(ax, step_density, e.id, color="tab:orange", lw=1.0, label="g")
        ax.set_xlim(0, float(e.length))
        ax.set_ylabel(e.id, rotation=0, ha="right", va="center", fontsize=8)
    axes[0].legend(fontsize=8, loc="upper left")
    axes[-1].set_xlabel("arc length")
    return _save(fig, path)


def plot_gaps(report: dict, path) -> Path:
    """Additive gap per player against the tested epsilon."""
    rows = report["players"]
    gaps = np.array([float(r["gap"]) for r in rows])
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.bar(np.arange(len(gaps)), gaps, color="tab:blue", width=0.8)
    ax.axhline(float(report["eps"]), color="tab:red", lw=1, label=f"eps = {float(report['eps']):.3g}")
    ax.set_xlabel("player")
    ax.set_ylabel("best deviation - payoff")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_counterexample(report: dict, path, density: Density | None = None) -> Path:
    suite = report["suite"]
    fig, ax = plt.subplots(figsize=(7, 3))
    if suite == "quartile" and density is not None:
        eid = density.graph.edges[0].id
        _density_curve(ax, density, eid, color="tab:blue")
        for q in report["quartiles_float"]:
            ax.axvline(q, color="tab:red", lw=0.8, ls="--")
        ax.set_ylim(bottom=0)
        ax.set_xlabel("position")
        ax.set_title("density and quartiles", fontsize=10)
    elif suite == "three-player":
        names = list(report["cases"])
        vals = [report["cases"][n]["min_gain"] for n in names]
        ax.bar(names, vals, color="tab:blue")
        ax.axhline(1 / 14, color="tab:red", lw=1, label="1/14")
        ax.set_ylabel("min over profiles of max gain")
        ax.legend(fontsize=8)
    else:
        names = list(report["candidates"])
        vals = [float(report["candidates"][n]["audit"]["max_gain"]) for n in names]
        ax.bar(names, vals, color="tab:blue")
        ax.set_ylabel("max gain")
        ax.set_title(f"n = {report['n']}", fontsize=10)
    return _save(fig, path)
