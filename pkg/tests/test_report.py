import json

import pytest

from layerlens.engine import ExplainerConfig, baseline_token_shap, explain
from layerlens.errors import ParseError, SerializationError
from layerlens.pipeline import attention_for
from layerlens.report import SCHEMA, build_report, emit_document, parse_document

from conftest import S2

REQUIRED = ("schema", "sentence", "tokens", "phrases", "layers", "aggregated", "model", "explainer")


@pytest.fixture(scope="module")
def s2_report(weights, vocab, lexicon):
    cfg = ExplainerConfig()
    res = explain(S2, weights, vocab, lexicon, cfg)
    return build_report(weights, cfg, result=res, baseline=baseline_token_shap(S2, weights, vocab, cfg),
                        attention=attention_for(weights, res))


def test_round_trip_is_byte_identical(s2_report):
    text = emit_document(s2_report)
    assert emit_document(parse_document(text)) == text


def test_floats_keep_full_precision(s2_report):
    back = parse_document(emit_document(s2_report))
    assert back.aggregated == s2_report.aggregated
    assert back.layers["embedding"]["values"] == s2_report.layers["embedding"]["values"]


def test_mismatched_aggregate_refused(s2_report):
    doc = json.loads(emit_document(s2_report))
    doc["aggregated"][1] += 1e-12
    with pytest.raises(SerializationError, match="aggregated"):
        parse_document(json.dumps(doc))


def test_wrong_length_refused(s2_report):
    doc = json.loads(emit_document(s2_report))
    doc["layers"]["embedding"]["values"].pop()
    with pytest.raises(SerializationError, match="embedding"):
        parse_document(json.dumps(doc))


def test_non_finite_refused(s2_report):
    doc = json.loads(emit_document(s2_report))
    rep = parse_document(json.dumps(doc))
    rep.prob_positive = float("nan")
    with pytest.raises(SerializationError, match="non-finite"):
        emit_document(rep)


def test_minimal_one_phrase_report(weights, vocab, lexicon):
    cfg = ExplainerConfig()
    rep = build_report(weights, cfg, result=explain("wonderful", weights, vocab, lexicon, cfg))
    doc = json.loads(emit_document(rep))
    for name in REQUIRED:
        assert name in doc
    assert doc["schema"] == SCHEMA
    assert len(doc["phrases"]) == 1
    assert doc["model"]["checksum"].startswith("sha256:")
    assert doc["explainer"]["targets"] == ["embedding", "encoder0"]


def test_integral_floats_keep_decimal_point(s2_report):
    text = emit_document(s2_report)
    assert '"ridge": 9.9999999999999995e-07' in text
    assert '"seed": 0,' in text


def test_parse_errors():
    with pytest.raises(ParseError, match="line"):
        parse_document("{")
    with pytest.raises(ParseError, match="schema"):
        parse_document(json.dumps({"schema": "other/9", **{k: None for k in REQUIRED[1:]}}))
    with pytest.raises(ParseError, match="tokens"):
        parse_document(json.dumps({"schema": SCHEMA, "sentence": "x"}))


def test_report_needs_a_result(weights):
    with pytest.raises(SerializationError):
        build_report(weights, ExplainerConfig())
