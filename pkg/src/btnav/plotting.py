"""Report figures: deployment layout and positioning-error distribution."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .engine import positioning_error  # noqa: E402
from .routing import build_adjacency  # noqa: E402
from .scenario import Scenario  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

MARKERS = {
    "reader": dict(marker="o", color="tab:blue", label="reader"),
    "gateway": dict(marker="s", color="tab:orange", label="gateway"),
    "wifiap": dict(marker="^", color="tab:green", label="Wi-Fi AP"),
}


def plot_layout(ax, scenario: Scenario):
    graph = build_adjacency(scenario.placements, scenario.ranges)
    for edge in sorted(tuple(sorted(e)) for e in graph.edges):
        a, b = (scenario.position_of(n) for n in edge)
        ax.plot([a.x, b.x], [a.y, b.y], color="0.75", lw=0.8, zorder=1)
    for r in scenario.readers:
        ax.add_patch(Circle((r.position.x, r.position.y), scenario.ranges.bt_range_m,
                            fill=False, ls=":", lw=0.6, color="tab:blue", zorder=0))
    for kind, style in MARKERS.items():
        pts = [pos for label, (k, pos) in scenario.placements.items() if k == kind]
        if pts:
            ax.scatter([p.x for p in pts], [p.y for p in pts], s=25, zorder=3,
                       marker=style["marker"], color=style["color"], label=style["label"])
    for label, (_, pos) in sorted(scenario.placements.items()):
        ax.annotate(label, (pos.x, pos.y), xytext=(3, 3), textcoords="offset points", fontsize=6)
    for m in scenario.mobiles:
        xs = [p.x for _, p in m.path.waypoints]
        ys = [p.y for _, p in m.path.waypoints]
        ax.plot(xs, ys, lw=0.9, alpha=0.8, zorder=2)
        ax.plot(xs[0], ys[0], marker=".", color="k", ms=3)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="best", frameon=False)


def plot_errors(ax, errors, bound: float):
    values = [e for _, e in errors]
    if values:
        ax.hist(values, bins=min(20, max(5, len(values) // 3)), range=(0, bound * 1.1),
                color="tab:blue", alpha=0.8)
    ax.axvline(bound, color="tab:red", ls="--", lw=1, label=f"BT range {bound:g} m")
    ax.set_xlabel("positioning error (m)")
    ax.set_ylabel("responses")
    ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    ax.legend(frameon=False)


def render_report_figure(scenario: Scenario, trace, path) -> None:
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
        plot_layout(left, scenario)
        plot_errors(right, positioning_error(trace, scenario), scenario.ranges.bt_range_m)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
