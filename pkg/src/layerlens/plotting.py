"""Matplotlib figures for explanations: signed bar charts and phrase heatmaps.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot
state) and written as SVG with a fixed hash salt and no timestamp, so the
same input always produces the same bytes.
"""

from __future__ import annotations

import html
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib import rcParams
from matplotlib.figure import Figure

from .attention import PhraseAttentionMatrix
from .errors import InputError

POSITIVE_COLOR = "#2e8b57"
NEGATIVE_COLOR = "#d62728"
HEATMAP_CMAP = "Blues"

STYLE = {
    "svg.hashsalt": "layerlens",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def bar_color(value: float) -> str:
    # zero counts as positive
    return NEGATIVE_COLOR if value < 0 else POSITIVE_COLOR


def _wrap(label: str, width: int = 38) -> str:
    if len(label) <= width:
        return label
    return label[: width - 3] + "..."


def render_bars(values: Sequence[float], labels: Sequence[str], title: str = "") -> Figure:
    """Horizontal signed bar chart, one bar per phrase, first phrase on top."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) != len(labels):
        raise InputError("need one value per label")
    if not np.all(np.isfinite(values)):
        raise InputError("bar values must be finite")
    n = len(values)
    fig = Figure(figsize=(7.5, 0.45 * n + 1.4))
    ax = fig.add_subplot()
    ypos = np.arange(n)[::-1]
    bars = ax.barh(ypos, values, color=[bar_color(v) for v in values], height=0.65)
    for i, bar in enumerate(bars):
        bar.set_gid(f"bar-{i}")
    ax.axvline(0.0, color="black", linewidth=0.8, gid="zero-line")
    ax.set_yticks(ypos)
    ax.set_yticklabels([_wrap(l) for l in labels])
    span = float(np.max(np.abs(values))) if n else 0.0
    span = span if span > 0 else 1.0
    ax.set_xlim(-1.25 * span, 1.25 * span)
    for y, v in zip(ypos, values):
        ax.text(v + (0.02 if v >= 0 else -0.02) * span, y, f"{v:.6g}",
                va="center", ha="left" if v >= 0 else "right", fontsize=7)
    ax.set_xlabel("SHAP value")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def render_heatmap(matrix: PhraseAttentionMatrix, title: str = "Attention scores by phrase") -> Figure:
    scores = np.asarray(matrix.scores, dtype=np.float64)
    if scores.size == 0:
        raise InputError("cannot render an empty attention matrix")
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise InputError(f"attention matrix must be square, got {scores.shape}")
    m = scores.shape[0]
    peak = float(scores.max())
    norm = scores / peak if peak > 0 else scores
    mapping = matrix.mapping
    fig = Figure(figsize=(6.0 + 0.1 * m, 4.2 + 0.22 * m))
    ax = fig.add_axes([0.14, 0.12 + 0.22 * m / (4.2 + 0.22 * m), 0.62, 0.8 - 0.22 * m / (4.2 + 0.22 * m)])
    mesh = ax.pcolormesh(norm, cmap=HEATMAP_CMAP, vmin=0.0, vmax=1.0, edgecolors="white", linewidth=0.5)
    mesh.set_gid("attention-cells")
    ax.set_xlim(0, m)
    ax.set_ylim(m, 0)
    ticks = np.arange(m) + 0.5
    names = [f"Phrase {i}" for i in range(m)]
    ax.set_xticks(ticks)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_yticks(ticks)
    ax.set_yticklabels(names)
    for i in range(m):
        for j in range(m):
            ax.text(j + 0.5, i + 0.5, f"{scores[i, j]:.3f}", ha="center", va="center",
                    fontsize=7, color="white" if norm[i, j] > 0.6 else "black")
    ax.set_title(title)
    cax = fig.add_axes([0.8, ax.get_position().y0, 0.03, ax.get_position().height])
    fig.colorbar(mesh, cax=cax, label="score / max")
    legend = "Phrase Index Mapping:\n" + "\n".join(_wrap(line, 90) for line in mapping)
    fig.text(0.02, 0.02, legend, fontsize=7, va="bottom", ha="left", family="DejaVu Sans Mono",
             gid="phrase-mapping")
    return fig


def _atomic_write(path: Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path, text: str):
    _atomic_write(Path(path), text.encode("utf-8"))


def figure_svg(fig: Figure) -> str:
    import io

    buf = io.StringIO()
    with _style():
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def save_svg(fig: Figure, path) -> Path:
    write_text(path, figure_svg(fig))
    return Path(path)


class _style:
    """Temporarily apply :data:`STYLE` (rcParams are read at draw time for SVG)."""

    def __enter__(self):
        self._saved = {k: rcParams[k] for k in STYLE}
        rcParams.update(STYLE)

    def __exit__(self, *exc):
        rcParams.update(self._saved)


def styled_figure(builder, *args, **kwargs) -> Figure:
    with _style():
        return builder(*args, **kwargs)


def render_html(title: str, sections: Sequence[tuple[str, str]], summary_rows: Sequence[Sequence[str]] = ()) -> str:
    """Static page embedding SVG documents inline. ``sections`` is (heading, svg)."""
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        '<head><meta charset="utf-8"><title>' + html.escape(title) + "</title>",
        "<style>body{font-family:sans-serif;max-width:960px;margin:2em auto}"
        "table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:2px 6px;text-align:right}"
        "td:first-child,th:first-child{text-align:left}</style></head>",
        "<body>",
        "<h1>" + html.escape(title) + "</h1>",
    ]
    if summary_rows:
        head, *rows = summary_rows
        parts.append("<table><tr>" + "".join(f"<th>{html.escape(c)}</th>" for c in head) + "</tr>")
        for row in rows:
            parts.append("<tr>" + "".join(f"<td>{html.escape(c)}</td>" for c in row) + "</tr>")
        parts.append("</table>")
    for heading, svg in sections:
        body = svg[svg.index("<svg"):] if "<svg" in svg else svg
        parts.append("<h2>" + html.escape(heading) + "</h2>")
        parts.append("<div>" + body + "</div>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"
