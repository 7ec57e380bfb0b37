"""Report rendering: template diagrams, phase summaries, TSV tables.

Every figure goes to a file next to the delimited output; nothing opens a
display (the Agg backend is forced so the tool works headless).
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle, FancyArrowPatch

from .ring import ProcessTemplate, _cube_text, _merge_cubes

__all__ = ["render_template_figure", "render_phase_summary", "write_tsv"]


def render_template_figure(t: ProcessTemplate, path: str | Path,
                           title: str | None = None) -> Path:
    """Draw the template as a state diagram.

    Token states get a double ring, the initial pair a bold outline;
    node labels list the active outputs, edge labels only the decisive
    inputs (a missing input is don't-care).
    """
    path = Path(path)
    n = t.n_states
    radius = 3.2
    positions = {}
    for q in range(n):
        angle = math.pi / 2 - 2 * math.pi * q / max(1, n)
        positions[q] = (radius * math.cos(angle), radius * math.sin(angle))

    fig, ax = plt.subplots(figsize=(7.5, 7.5))
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)

    node_r = 0.55
    for q in range(n):
        x, y = positions[q]
        bold = q in (t.initial_token, t.initial_notoken)
        face = "#cfe8cf" if q in t.token_states else "#f2f2f2"
        ax.add_patch(Circle((x, y), node_r, facecolor=face, edgecolor="black",
                            linewidth=2.2 if bold else 1.0, zorder=3))
        if q in t.token_states:
            ax.add_patch(Circle((x, y), node_r * 0.82, fill=False,
                                edgecolor="black", linewidth=0.8, zorder=4))
        outs = ",".join(sorted(t.labels[q] - {"TOK"})) or "-"
        ax.text(x, y, f"t{q}\n{outs}", ha="center", va="center", fontsize=8,
                zorder=5)

    grouped: dict[tuple[int, int], list] = {}
    for (q, letter), targets in t.delta.items():
        for q2 in targets:
            grouped.setdefault((q, q2), []).append(letter)
    for (q, q2), letter_list in sorted(grouped.items()):
        cubes = _merge_cubes(letter_list, t.inputs)
        label = " | ".join(sorted(_cube_text(c) for c in cubes))
        x1, y1 = positions[q]
        x2, y2 = positions[q2]
        if q == q2:
            # self-loop drawn above the node
            loop = Circle((x1, y1 + node_r * 1.35), node_r * 0.8, fill=False,
                          edgecolor="gray", zorder=2)
            ax.add_patch(loop)
            ax.text(x1, y1 + node_r * 2.6, label, ha="center", fontsize=7,
                    color="dimgray")
            continue
        arrow = FancyArrowPatch(
            (x1, y1), (x2, y2), connectionstyle="arc3,rad=0.18",
            arrowstyle="-|>", mutation_scale=14, shrinkA=20, shrinkB=20,
            color="dimgray", zorder=2)
        ax.add_patch(arrow)
        mx, my = (x1 + x2) / 2, (y1 + y2) / 2
        off = 0.35 if q < q2 else -0.35
        ax.text(mx + off * (y2 - y1) / radius, my - off * (x2 - x1) / radius,
                label, fontsize=7, ha="center", color="dimgray")

    margin = radius + 2.2 * node_r
    ax.set_xlim(-margin, margin)
    ax.set_ylim(-margin, margin)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_phase_summary(rows: list[dict], path: str | Path) -> Path:
    """Bar chart of template sizes per synthesis phase, times annotated."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [str(r.get("phase", k + 1)) for k, r in enumerate(rows)]
    states = [r.get("states", 0) for r in rows]
    bars = ax.bar(labels, states, color="#6699cc", edgecolor="black")
    for bar, r in zip(bars, rows):
        ax.text(bar.get_x() + bar.get_width() / 2, bar.get_height() + 0.15,
                f"{r.get('seconds', 0):.0f}s", ha="center", fontsize=9)
    ax.set_xlabel("synthesis phase")
    ax.set_ylabel("template states")
    ax.set_title("decompositional synthesis")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_tsv(rows: list[dict], columns: list[str], path=None) -> str:
    """Tab-separated table; returns the text and optionally writes it."""
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(str(row.get(c, "")) for c in columns))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
