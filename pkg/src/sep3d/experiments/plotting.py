"""SVG line charts drawn from result CSVs.

The figure depends only on the CSV contents: the SVG hash salt is fixed and
the date metadata suppressed, so re-plotting a file reproduces its bytes.
"""

from __future__ import annotations

from collections import OrderedDict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tables import read_csv  # noqa: E402


def _parse_hint(hint: str) -> dict:
    out = {"x": None, "y": [], "group": [], "logy": False}
    for token in hint.split():
        key, _, value = token.partition("=")
        if key == "x":
            out["x"] = value
        elif key in ("y", "group"):
            out[key] = [v for v in value.split(",") if v]
        elif key == "logy":
            out["logy"] = value == "1"
    return out


def plot_csv(csv_path, svg_path=None) -> Path:
    """Render ``csv_path`` to SVG (default: same name, ``.svg`` suffix)."""
    csv_path = Path(csv_path)
    svg_path = csv_path.with_suffix(".svg") if svg_path is None else Path(svg_path)
    table, _ = read_csv(csv_path)
    hint = _parse_hint(table.metadata.get("plot", ""))
    x = hint["x"] or table.columns[0]
    ys = hint["y"] or [c for c in table.columns[1:] if isinstance(table.rows[0][table.columns.index(c)], float)]

    groups = OrderedDict()
    gidx = [table.columns.index(g) for g in hint["group"]]
    for row in table.rows:
        groups.setdefault(tuple(row[i] for i in gidx), []).append(row)

    with plt.rc_context({"svg.hashsalt": "sep3d", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        xi = table.columns.index(x)
        for key, rows in groups.items():
            tag = ", ".join(f"{g}={v}" for g, v in zip(hint["group"], key))
            for y in ys:
                yi = table.columns.index(y)
                label = f"{y} ({tag})" if tag else y
                style = "o" if len(rows) == 1 else "-"
                ax.plot([r[xi] for r in rows], [r[yi] for r in rows], style, label=label)
        if hint["logy"]:
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_title(table.kind)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return svg_path
