import json

import pytest

from layerlens.errors import BoundsError, ParseError
from layerlens.phrases import (
    PhraseKind,
    PhraseSpan,
    PosTag,
    build_phrase_set,
    chunk,
    extract_phrases,
    load_external_phrases,
    pos_tag,
    read_lexicon,
)
from layerlens.tokenizer import tokenize

from conftest import S1, S2

S2_DOC = {
    "sentence": S2,
    "phrases": [
        {"kind": "NP", "word_start": 1, "word_end": 2},
        {"kind": "VP", "word_start": 4, "word_end": 6},
        {"kind": "NP", "word_start": 5, "word_end": 6},
    ],
}


def lowered(ps):
    return [t.lower() for t in ps.texts]


def test_pos_rules(lexicon):
    tags = [t.tag for t in pos_tag(["the", "parker", "waiting", "quickly", "blorped"], lexicon)]
    assert tags == [PosTag.DET, PosTag.NOUN, PosTag.VERB, PosTag.ADV, PosTag.VERB]


def test_lexicon_wins_over_suffix():
    lex = read_lexicon("# comment\nsing VERB\nthing NOUN\n")
    assert [t.tag for t in pos_tag(["thing"], lex)] == [PosTag.NOUN]


def test_read_lexicon_rejects_bad_tag():
    with pytest.raises(ParseError):
        read_lexicon("word NOTATAG")


def test_they_alone(vocab, lexicon):
    ps = extract_phrases(tokenize("they", vocab), lexicon)
    assert lowered(ps) == ["they"]
    spans = chunk(pos_tag(["they"], lexicon))
    assert [(s.kind, s.key) for s in spans] == [(PhraseKind.NP, (0, 0))]


def test_s2_golden(vocab, lexicon):
    ps = extract_phrases(tokenize(S2, vocab), lexicon)
    texts = lowered(ps)
    assert ps[0].kind is PhraseKind.SENT and texts[0] == S2.lower()
    for want in ("the book", "forget the movie", "the movie", "read the book"):
        assert want in texts


def test_s1_golden(vocab, lexicon):
    texts = lowered(extract_phrases(tokenize(S1, vocab), lexicon))
    for want in ("neither parker", "a typical romantic lead", "they",
                 "a fresh, quirky charm", "to the formula", "the formula"):
        assert want in texts


def test_build_orders_like_the_mapping():
    spans = [PhraseSpan(PhraseKind.NP, 5, 6), PhraseSpan(PhraseKind.NP, 1, 2), PhraseSpan(PhraseKind.VP, 4, 6)]
    ps = build_phrase_set(S2, spans)
    assert ps.texts == [S2, "the book", "forget the movie", "the movie"]
    assert ps.index_mapping()[3] == "Phrase 3: the movie"


def test_build_empty_and_duplicates():
    assert build_phrase_set(S2, []).texts == [S2]
    dup = [PhraseSpan(PhraseKind.NP, 1, 2)] * 3
    assert len(build_phrase_set(S2, dup)) == 2


def test_build_out_of_bounds():
    with pytest.raises(BoundsError):
        build_phrase_set("the book", [PhraseSpan(PhraseKind.NP, 1, 4)])


def test_span_end_before_start():
    with pytest.raises(BoundsError):
        PhraseSpan(PhraseKind.NP, 3, 1)


def test_external_matches_builtin():
    ext = load_external_phrases(json.dumps(S2_DOC))
    spans = [PhraseSpan(PhraseKind.NP, 1, 2), PhraseSpan(PhraseKind.VP, 4, 6), PhraseSpan(PhraseKind.NP, 5, 6)]
    assert ext == build_phrase_set(S2, spans)


def test_external_missing_sentence():
    with pytest.raises(ParseError, match="sentence"):
        load_external_phrases(json.dumps({"phrases": []}))


def test_external_names_bad_field():
    doc = {"sentence": S2, "phrases": [{"kind": "NP", "word_start": 1}]}
    with pytest.raises(ParseError, match=r"phrases\[0\].*word_end"):
        load_external_phrases(json.dumps(doc))


def test_external_bad_json_has_position():
    with pytest.raises(ParseError, match="line 1"):
        load_external_phrases("{not json")


def test_external_out_of_bounds():
    doc = {"sentence": "the book", "phrases": [{"kind": "NP", "word_start": 0, "word_end": 9}]}
    with pytest.raises(BoundsError):
        load_external_phrases(json.dumps(doc))


def test_labels_ignore_punctuation_spacing():
    a = build_phrase_set("a fresh , quirky charm .", [PhraseSpan(PhraseKind.NP, 0, 4)])
    b = build_phrase_set("a fresh, quirky charm.", [PhraseSpan(PhraseKind.NP, 0, 4)])
    assert a.texts == b.texts == ["a fresh, quirky charm.", "a fresh, quirky charm"]


def test_labels_keep_case():
    ps = build_phrase_set("Read (the) Book", [])
    assert ps.texts == ["Read (the) Book"]
