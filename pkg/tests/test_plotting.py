import re

import numpy as np
import pytest

from layerlens.attention import AttentionAggregationConfig, PhraseAttentionMatrix
from layerlens.errors import InputError
from layerlens.plotting import (
    NEGATIVE_COLOR,
    POSITIVE_COLOR,
    figure_svg,
    render_bars,
    render_heatmap,
    render_html,
    save_svg,
    styled_figure,
)


def bar_patches(fig):
    ax = fig.axes[0]
    return [p for p in ax.patches if (p.get_gid() or "").startswith("bar-")]


def hexcolor(patch):
    r, g, b, _ = patch.get_facecolor()
    return "#%02x%02x%02x" % tuple(round(c * 255) for c in (r, g, b))


def test_signed_bars():
    fig = render_bars([0.3, -0.2], ["good", "bad"])
    first, second = bar_patches(fig)
    assert hexcolor(first) == POSITIVE_COLOR and first.get_width() == pytest.approx(0.3)
    assert first.get_x() == 0.0
    assert hexcolor(second) == NEGATIVE_COLOR and second.get_width() == pytest.approx(-0.2)
    assert first.get_y() > second.get_y()  # first phrase on top


def test_all_zero_bars_still_draw_axis():
    fig = render_bars([0.0, 0.0, 0.0], ["a", "b", "c"])
    assert all(p.get_width() == 0 for p in bar_patches(fig))
    svg = figure_svg(fig)
    assert 'id="zero-line"' in svg


def test_bars_reject_nan():
    with pytest.raises(InputError):
        render_bars([0.1, float("nan")], ["a", "b"])
    with pytest.raises(InputError):
        render_bars([0.1], ["a", "b"])


def matrix(scores, labels=None):
    scores = np.asarray(scores, dtype=float)
    labels = labels or [f"p{i}" for i in range(len(scores))]
    return PhraseAttentionMatrix(scores, labels, AttentionAggregationConfig())


def test_heatmap_single_cell_full_intensity():
    fig = render_heatmap(matrix([[1.0]]))
    mesh = next(c for c in fig.axes[0].collections if c.get_gid() == "attention-cells")
    assert mesh.get_array().ravel().tolist() == [1.0]


def test_heatmap_diagonal_dominance():
    fig = render_heatmap(matrix(np.eye(3) * 0.8 + 0.05))
    cells = next(c for c in fig.axes[0].collections if c.get_gid() == "attention-cells")
    grid = np.asarray(cells.get_array()).reshape(3, 3)
    assert all(np.argmax(grid[i]) == i for i in range(3))


def test_heatmap_labels_and_legend():
    labels = ["Read the book, forget the movie!", "the book", "forget the movie", "the movie"]
    fig = render_heatmap(matrix(np.full((4, 4), 0.25), labels))
    ax = fig.axes[0]
    assert [t.get_text() for t in ax.get_xticklabels()] == [f"Phrase {i}" for i in range(4)]
    svg = figure_svg(fig)
    assert "Phrase Index Mapping:" in svg and "Phrase 3: the movie" in svg


def test_heatmap_empty():
    with pytest.raises(InputError):
        render_heatmap(matrix(np.zeros((0, 0)), []))


def test_svg_is_deterministic(tmp_path):
    a = figure_svg(styled_figure(render_bars, [0.5, -0.1], ["x", "y"], "t"))
    b = figure_svg(styled_figure(render_bars, [0.5, -0.1], ["x", "y"], "t"))
    assert a == b
    assert "<dc:date>" not in a
    path = save_svg(styled_figure(render_bars, [0.5], ["x"]), tmp_path / "sub" / "x.svg")
    assert path.read_text().startswith("<?xml")
    assert not list(tmp_path.glob("sub/.*tmp"))


def test_html_embeds_svg_and_escapes():
    page = render_html("a <b>", [("chart", '<?xml version="1.0"?>\n<svg></svg>')], [["h"], ["<x>"]])
    assert "a &lt;b&gt;" in page and "&lt;x&gt;" in page
    assert "<div><svg></svg></div>" in page
    assert not re.search(r"<div><\?xml", page)
