"""Machine-readable explanation reports.

A report is a JSON document written in a canonical form: fixed field order,
two-space indentation and every float printed with 17 significant digits, so
``emit(parse(emit(r))) == emit(r)`` byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .attention import PhraseAttentionMatrix
from .engine import ExplainerConfig, ShapResult, TokenShapResult
from .errors import ParseError, SerializationError
from .model import ModelWeights

SCHEMA = "layerlens/1"


@dataclass
class ExplanationReport:
    sentence: str
    tokens: list[str]
    phrases: list[dict]
    layers: dict[str, dict]
    aggregated: list[float]
    model: dict
    explainer: dict
    prob_positive: float | None = None
    baseline: dict | None = None
    attention: dict | None = None
    schema: str = SCHEMA

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "sentence": self.sentence,
            "tokens": list(self.tokens),
            "phrases": self.phrases,
            "layers": self.layers,
            "aggregated": list(self.aggregated),
            "baseline": self.baseline,
            "attention": self.attention,
            "prob_positive": self.prob_positive,
            "model": self.model,
            "explainer": self.explainer,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExplanationReport":
        required = ("schema", "sentence", "tokens", "phrases", "layers", "aggregated", "model", "explainer")
        for name in required:
            if name not in doc:
                raise ParseError(f"report is missing field {name!r}")
        if doc["schema"] != SCHEMA:
            raise ParseError(f"unsupported report schema {doc['schema']!r}")
        return cls(
            sentence=doc["sentence"],
            tokens=doc["tokens"],
            phrases=doc["phrases"],
            layers=doc["layers"],
            aggregated=doc["aggregated"],
            model=doc["model"],
            explainer=doc["explainer"],
            prob_positive=doc.get("prob_positive"),
            baseline=doc.get("baseline"),
            attention=doc.get("attention"),
            schema=doc["schema"],
        )


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def _phrase_entries(result: ShapResult) -> list[dict]:
    seq = result.seq
    out = []
    for i, p in enumerate(result.phrases):
        out.append({
            "index": i,
            "kind": p.kind.value,
            "text": p.text,
            "word_start": p.word_start,
            "word_end": p.word_end,
            "token_start": seq.word_spans[p.word_start][0],
            "token_end": seq.word_spans[p.word_end][1],
        })
    return out


def model_fingerprint(weights: ModelWeights) -> dict:
    return {"config": asdict(weights.config), "checksum": "sha256:" + weights.fingerprint()}


def explainer_echo(config: ExplainerConfig, method: str, targets: list[str]) -> dict:
    return {
        "method": method,
        "seed": config.seed,
        "samples": config.kernel_samples,
        "selector": config.selector,
        "exact_threshold": config.exact_threshold,
        "ridge": float(config.ridge),
        "encoder_baseline": config.encoder_baseline,
        "targets": targets,
    }


def build_report(weights: ModelWeights, config: ExplainerConfig, result: ShapResult | None = None,
                 baseline: TokenShapResult | None = None,
                 attention: PhraseAttentionMatrix | None = None) -> ExplanationReport:
    if result is None and baseline is None:
        raise SerializationError("a report needs a phrase result or a baseline result")
    layers: dict[str, dict] = {}
    if result is not None:
        seq = result.seq
        for label, la in result.layers.items():
            entry: dict[str, Any] = {
                "values": _floats(la.values),
                "v_empty": float(la.v_empty),
                "v_full": float(la.v_full),
                "method": la.method,
            }
            if la.words:
                entry["words"] = [
                    {
                        "phrase": w.phrase_index,
                        "words": list(w.words),
                        "values": _floats(w.values),
                        "total": float(w.total),
                        "v_empty": float(w.v_empty),
                        "v_full": float(w.v_full),
                        "method": w.method,
                    }
                    for w in la.words
                ]
            layers[label] = entry
        phrases = _phrase_entries(result)
        aggregated = _floats(result.aggregated)
        method = result.method
        prob = float(result.prob_positive)
    else:
        seq = baseline.seq
        phrases, aggregated, method, prob = [], [], baseline.method, None
    base = None
    if baseline is not None:
        base = {
            "tokens": list(baseline.tokens),
            "token_indices": list(baseline.token_indices),
            "values": _floats(baseline.values),
            "v_empty": float(baseline.v_empty),
            "v_full": float(baseline.v_full),
            "method": baseline.method,
        }
    att = None
    if attention is not None:
        att = {
            "layers": attention.config.layers,
            "heads": attention.config.heads,
            "scores": [_floats(row) for row in attention.scores],
        }
    report = ExplanationReport(
        sentence=seq.text,
        tokens=seq.texts,
        phrases=phrases,
        layers=layers,
        aggregated=aggregated,
        model=model_fingerprint(weights),
        explainer=explainer_echo(config, method, list(layers)),
        prob_positive=prob,
        baseline=base,
        attention=att,
    )
    validate(report)
    return report


def recompute_aggregate(layers: dict[str, dict]) -> list[float]:
    vectors = [entry["values"] for entry in layers.values()]
    if not vectors:
        return []
    total = [float(v) for v in vectors[0]]
    for vec in vectors[1:]:
        total = [a + float(b) for a, b in zip(total, vec)]
    return total


def validate(report: ExplanationReport) -> None:
    """Raise :class:`SerializationError` if the report breaks an invariant."""
    m = len(report.phrases)
    for label, entry in report.layers.items():
        if len(entry["values"]) != m:
            raise SerializationError(
                f"layer {label} has {len(entry['values'])} values for {m} phrases"
            )
    if len(report.aggregated) != (m if report.layers else 0):
        raise SerializationError(f"aggregated vector has {len(report.aggregated)} values for {m} phrases")
    expected = recompute_aggregate(report.layers)
    if [float(x) for x in report.aggregated] != expected:
        diffs = [abs(float(a) - b) for a, b in zip(report.aggregated, expected)]
        raise SerializationError(
            f"aggregated values differ from the sum of layer values (max diff {max(diffs, default=0):.3g})"
        )
    if report.baseline is not None and len(report.baseline["values"]) != len(report.baseline["tokens"]):
        raise SerializationError("baseline values and tokens differ in length")
    if report.attention is not None:
        scores = report.attention["scores"]
        if len(scores) != m or any(len(row) != m for row in scores):
            raise SerializationError(f"attention matrix is not {m}x{m}")


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise SerializationError(f"non-finite value {x!r} cannot be serialized")
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _emit(obj, indent: int, out: list[str]):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for k, (key, value) in enumerate(obj.items()):
            out.append(pad + "  " + json.dumps(str(key), ensure_ascii=False) + ": ")
            _emit(value, indent + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (dict, list, tuple)) for v in obj):
            parts: list[str] = []
            for v in obj:
                _emit(v, 0, parts)
                parts.append(", ")
            out.append("[" + "".join(parts[:-1]) + "]")
        else:
            out.append("[\n")
            for k, value in enumerate(obj):
                out.append(pad + "  ")
                _emit(value, indent + 1, out)
                out.append(",\n" if k < len(obj) - 1 else "\n")
            out.append(pad + "]")
    else:
        raise SerializationError(f"cannot serialize {type(obj).__name__}")


def emit_document(report: ExplanationReport) -> str:
    validate(report)
    out: list[str] = []
    _emit(report.to_dict(), 0, out)
    return "".join(out) + "\n"


def parse_document(text: str) -> ExplanationReport:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"report line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("report must be a JSON object")
    report = ExplanationReport.from_dict(doc)
    validate(report)
    return report
