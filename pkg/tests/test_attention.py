import numpy as np
import pytest

from layerlens.attention import AttentionAggregationConfig, phrase_attention, reduce_attention
from layerlens.errors import ConfigurationError, InputError
from layerlens.model import ForwardTrace, forward
from layerlens.phrases import PhraseKind, PhraseSpan, build_phrase_set
from layerlens.tokenizer import tokenize, tokens_for_word_range

from conftest import S2

FIG8 = [PhraseSpan(PhraseKind.NP, 1, 2), PhraseSpan(PhraseKind.VP, 4, 6), PhraseSpan(PhraseKind.NP, 5, 6)]


def uniform_trace(T, layers=2, heads=2):
    att = np.full((layers, heads, T, T), 1.0 / T)
    return ForwardTrace(np.zeros((T, 2)), [np.zeros((T, 2))] * layers, att, np.zeros(2))


def test_single_phrase_uniform(small_vocab):
    seq = tokenize("the book", small_vocab)
    ps = build_phrase_set(seq, [])
    T = len(seq)
    m = phrase_attention(uniform_trace(T), ps, seq)
    np.testing.assert_allclose(m.scores, [[(T - 2) / T]], atol=1e-15)


def test_uniform_closed_form(vocab):
    seq = tokenize(S2, vocab)
    ps = build_phrase_set(seq, FIG8)
    T = len(seq)
    m = phrase_attention(uniform_trace(T), ps, seq)
    sizes = []
    for p in ps:
        lo, hi = tokens_for_word_range(seq, p.word_start, p.word_end)
        sizes.append(hi - lo + 1)
    for i in range(len(ps)):
        np.testing.assert_allclose(m.scores[i], np.array(sizes) / T, atol=1e-15)


def test_s2_matrix_shape_and_labels(weights, vocab):
    seq = tokenize(S2, vocab)
    ps = build_phrase_set(seq, FIG8)
    m = phrase_attention(forward(weights, seq.ids), ps, seq)
    assert m.scores.shape == (4, 4)
    assert m.mapping == ["Phrase 0: " + S2, "Phrase 1: the book", "Phrase 2: forget the movie",
                         "Phrase 3: the movie"]
    # rows are attention mass averaged over source tokens, so each is at most 1
    assert np.all(m.scores <= 1 + 1e-12)
    assert m.scores[0, 0] <= 1 and m.scores[0, 0] > 0


def test_span_mismatch(vocab):
    seq = tokenize(S2, vocab)
    ps = build_phrase_set(seq, FIG8)
    with pytest.raises(InputError):
        phrase_attention(uniform_trace(len(seq) - 1), ps, seq)


def test_reduce_modes():
    rng = np.random.default_rng(0)
    att = rng.random((3, 2, 4, 4))
    last_mean = reduce_attention(att, AttentionAggregationConfig("last", "mean"))
    np.testing.assert_allclose(last_mean, att[-1].mean(0))
    all_max = reduce_attention(att, AttentionAggregationConfig("mean_all", "max"))
    np.testing.assert_allclose(all_max, att.max(1).mean(0))
    with pytest.raises(InputError):
        reduce_attention(att[0], AttentionAggregationConfig())


def test_bad_config():
    with pytest.raises(ConfigurationError):
        AttentionAggregationConfig(layers="first")
    with pytest.raises(ConfigurationError):
        AttentionAggregationConfig(heads="min")
