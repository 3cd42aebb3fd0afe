"""Write the full set of artifacts for one explained sentence."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

from .attention import AttentionAggregationConfig, PhraseAttentionMatrix, phrase_attention
from .engine import ExplainerConfig, ShapResult, TokenShapResult
from .model import ModelWeights, forward
from .plotting import (
    figure_svg,
    render_bars,
    render_heatmap,
    render_html,
    styled_figure,
    write_text,
)
from .report import build_report, emit_document

FORMATS = ("report", "svg", "html")


def slugify(sentence: str, max_words: int = 6) -> str:
    words = re.findall(r"[a-z0-9]+", sentence.lower())[:max_words]
    digest = hashlib.sha1(sentence.encode("utf-8")).hexdigest()[:8]
    return "-".join(words + [digest]) if words else digest


@dataclass
class Artifacts:
    slug: str
    files: list[Path] = field(default_factory=list)


def attention_for(weights: ModelWeights, result: ShapResult,
                  config: AttentionAggregationConfig = AttentionAggregationConfig()) -> PhraseAttentionMatrix:
    trace = forward(weights, result.seq.ids)
    return phrase_attention(trace, result.phrases, result.seq, config)


def write_artifacts(out_dir, slug: str, weights: ModelWeights, config: ExplainerConfig, *,
                    result: ShapResult | None = None, baseline: TokenShapResult | None = None,
                    attention: PhraseAttentionMatrix | None = None,
                    formats=FORMATS) -> Artifacts:
    out = Path(out_dir)
    art = Artifacts(slug)
    sections: list[tuple[str, str]] = []

    def emit(name: str, text: str):
        path = out / name
        write_text(path, text)
        art.files.append(path)

    charts = []
    if result is not None:
        labels = result.phrases.texts
        for label, la in result.layers.items():
            charts.append((f"{label}.bars.svg", f"{label} layer", la.values, labels))
        charts.append(("aggregate.bars.svg", "aggregated over layers", result.aggregated, labels))
    if baseline is not None:
        charts.append(("baseline.bars.svg", "token-level baseline", baseline.values, baseline.tokens))
    for suffix, title, values, labels in charts:
        svg = figure_svg(styled_figure(render_bars, values, labels, title))
        sections.append((title, svg))
        if "svg" in formats:
            emit(f"{slug}.{suffix}", svg)
    if attention is not None:
        svg = figure_svg(styled_figure(render_heatmap, attention))
        sections.append(("attention scores by phrase", svg))
        if "svg" in formats:
            emit(f"{slug}.attention.svg", svg)

    report = build_report(weights, config, result=result, baseline=baseline, attention=attention)
    if "report" in formats:
        emit(f"{slug}.report", emit_document(report))
    if "html" in formats:
        rows = []
        if result is not None:
            head = ["#", "phrase", *result.layers, "aggregate"]
            rows.append(head)
            for i, text in enumerate(result.phrases.texts):
                rows.append([str(i), text,
                             *(f"{la.values[i]:.6g}" for la in result.layers.values()),
                             f"{result.aggregated[i]:.6g}"])
        emit(f"{slug}.html", render_html(report.sentence, sections, rows))
    return art


def summary_lines(result: ShapResult | None = None, baseline: TokenShapResult | None = None,
                  attention: PhraseAttentionMatrix | None = None) -> list[str]:
    """Tab-separated text blocks for the output stream."""
    lines = []
    if result is not None:
        lines.append(f"# sentence\t{result.sentence}")
        lines.append(f"# prob_positive\t{result.prob_positive:.6g}\tmethod\t{result.method}")
        lines.append("\t".join(["index", "kind", "phrase", *result.layers, "aggregate"]))
        for i, p in enumerate(result.phrases):
            vals = [f"{la.values[i]:.6g}" for la in result.layers.values()]
            lines.append("\t".join([str(i), p.kind.value, p.text, *vals, f"{result.aggregated[i]:.6g}"]))
    if baseline is not None:
        if result is None:
            lines.append(f"# sentence\t{baseline.sentence}")
        lines.append(f"# baseline\tmethod\t{baseline.method}")
        lines.append("index\ttoken\tvalue")
        for i, (tok, v) in enumerate(zip(baseline.tokens, baseline.values)):
            lines.append(f"{i}\t{tok}\t{v:.6g}")
    if attention is not None:
        lines.append(f"# attention\tlayers={attention.config.layers}\theads={attention.config.heads}")
        lines.extend(attention.mapping)
        for i, row in enumerate(attention.scores):
            lines.append("\t".join([f"Phrase {i}", *(f"{x:.6g}" for x in row)]))
    return lines
