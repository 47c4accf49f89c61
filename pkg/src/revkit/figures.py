"""Matplotlib renderings of the report outputs.

Each function writes a figure file next to the delimited report it mirrors;
nothing here is needed by the library paths.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import PathPatch
from matplotlib.path import Path

from .analysis import END, START
from .corpus import CorpusStats

_INTENT_COLORS = {
    "clarity": "#4c72b0",
    "coherence": "#dd8452",
    "fluency": "#55a868",
    "style": "#c44e52",
    START: "#8c8c8c",
    END: "#8c8c8c",
}


def save_stats_figure(stats: CorpusStats, path: str) -> None:
    """Grouped bars of sentence and edit counts per intent and source group."""
    rows = stats.rows()
    intents = sorted({r["intent"] for r in rows}, key=lambda v: list(_INTENT_COLORS).index(v))
    groups = ("iterater", "task-specific")
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=False)
    for ax, measure in zip(axes, ("sentences", "edits")):
        width = 0.38
        for gi, group in enumerate(groups):
            values = [next((r[measure] for r in rows
                            if r["intent"] == i and r["group"] == group), 0)
                      for i in intents]
            offset = (gi - 0.5) * width
            ax.bar([x + offset for x in range(len(intents))], values, width, label=group)
        ax.set_xticks(range(len(intents)))
        ax.set_xticklabels(intents, rotation=20)
        ax.set_title(measure)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metrics_figure(rows: list[dict], path: str) -> None:
    """Bar chart of scored metrics; 0-1 metrics are drawn on their own axis."""
    small = [r for r in rows if r["metric"] == "bleu"]
    large = [r for r in rows if r["metric"] != "bleu"]
    fig, ax = plt.subplots(figsize=(6.5, 3.2))
    names = [r["metric"] for r in large]
    ax.bar(names, [r["value"] for r in large], color="#4c72b0", width=0.55)
    ax.set_ylabel("score (0-100)")
    ax.set_ylim(0, 105)
    if small:
        twin = ax.twinx()
        xs = [len(names) + i for i in range(len(small))]
        twin.bar(xs, [r["value"] for r in small], color="#dd8452", width=0.55)
        twin.set_ylim(0, 1.05)
        twin.set_ylabel("score (0-1)")
        ax.set_xticks(list(range(len(names))) + xs)
        ax.set_xticklabels(names + [r["metric"] for r in small])
    for label in ax.get_xticklabels():
        label.set_rotation(15)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _ribbon(ax, x0, y0, h0, x1, y1, h1, color, alpha=0.45):
    mid = (x0 + x1) / 2
    verts = [
        (x0, y0), (mid, y0), (mid, y1), (x1, y1),
        (x1, y1 + h1), (mid, y1 + h1), (mid, y0 + h0), (x0, y0 + h0),
        (x0, y0),
    ]
    codes = [Path.MOVETO, Path.CURVE4, Path.CURVE4, Path.CURVE4,
             Path.LINETO, Path.CURVE4, Path.CURVE4, Path.CURVE4, Path.CLOSEPOLY]
    ax.add_patch(PathPatch(Path(verts, codes), facecolor=color,
                           edgecolor="none", alpha=alpha))


def save_flow_figure(sankey: dict, path: str) -> None:
    """A layered flow diagram of the Sankey export: one column per depth,
    ribbons sized by transition counts."""
    links = sankey.get("links", [])
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if not links:
        ax.text(0.5, 0.5, "no transitions", ha="center", va="center")
        ax.set_axis_off()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        return

    depths = sorted({l["depth"] for l in links})
    min_col, max_col = depths[0] - 1, depths[-1]

    def column(node: str, depth: int) -> int:
        if node == START:
            return min_col
        if node == END:
            return max_col + 1
        return int(node.rsplit("@", 1)[1])

    # node throughput per column, stacked top-down in link order
    inflow: dict[tuple[int, str], float] = defaultdict(float)
    for link in links:
        src = link["source"]
        dst = link["target"]
        inflow[(column(src, link["depth"]), src)] += link["value"]
        inflow[(column(dst, link["depth"]), dst)] += link["value"]
    offsets: dict[tuple[int, str], float] = {}
    tops: dict[int, float] = defaultdict(float)
    for (col, node), size in sorted(inflow.items()):
        offsets[(col, node)] = tops[col]
        tops[col] += size * 1.15
    used: dict[tuple[int, str], float] = defaultdict(float)
    for link in links:
        src, dst, value = link["source"], link["target"], link["value"]
        c0, c1 = column(src, link["depth"]), column(dst, link["depth"])
        y0 = offsets[(c0, src)] + used[(c0, src)]
        y1 = offsets[(c1, dst)] + used[(c1, dst)]
        used[(c0, src)] += value
        used[(c1, dst)] += value
        intent = src.split("@", 1)[0]
        color = _INTENT_COLORS.get(intent, "#8c8c8c")
        _ribbon(ax, c0 + 0.08, y0, value, c1 - 0.08, y1, value, color)
    for (col, node), start in offsets.items():
        size = inflow[(col, node)]
        ax.add_patch(plt.Rectangle((col - 0.08, start), 0.16, size,
                                   color=_INTENT_COLORS.get(node.split("@")[0], "#444444")))
        ax.text(col, start + size + 0.15, node, ha="center", va="bottom", fontsize=7)
    ax.set_xlim(min_col - 0.5, max_col + 1.5)
    ax.set_ylim(0, max(tops.values()) + 1)
    ax.invert_yaxis()
    ax.set_xticks(range(min_col, max_col + 2))
    ax.set_xlabel("revision depth")
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
