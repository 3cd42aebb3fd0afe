"""Phrase-to-phrase attention matrices pooled from token attention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .model import ForwardTrace
from .phrases import PhraseSet
from .tokenizer import TokenSequence, tokens_for_word_range

LAYER_MODES = ("last", "mean_all")
HEAD_MODES = ("mean", "max")


@dataclass(frozen=True)
class AttentionAggregationConfig:
    layers: str = "last"
    heads: str = "mean"

    def __post_init__(self):
        if self.layers not in LAYER_MODES:
            raise ConfigurationError(f"layer selection must be one of {LAYER_MODES}")
        if self.heads not in HEAD_MODES:
            raise ConfigurationError(f"head reduction must be one of {HEAD_MODES}")


@dataclass
class PhraseAttentionMatrix:
    scores: np.ndarray  # (M, M)
    labels: list[str]  # phrase texts, index-aligned with the phrase set
    config: AttentionAggregationConfig

    @property
    def mapping(self) -> list[str]:
        return [f"Phrase {i}: {t}" for i, t in enumerate(self.labels)]


def reduce_attention(attention: np.ndarray, config: AttentionAggregationConfig) -> np.ndarray:
    """(n_layers, n_heads, T, T) -> (T, T)."""
    att = np.asarray(attention)
    if att.ndim != 4:
        raise InputError(f"expected a (layers, heads, T, T) tensor, got shape {att.shape}")
    per_layer = att.mean(axis=1) if config.heads == "mean" else att.max(axis=1)
    return per_layer[-1] if config.layers == "last" else per_layer.mean(axis=0)


def phrase_attention(trace: ForwardTrace, phrases: PhraseSet, seq: TokenSequence,
                     config: AttentionAggregationConfig = AttentionAggregationConfig()) -> PhraseAttentionMatrix:
    """``score[p][q]`` = mean over source tokens of p of the attention mass on q's tokens."""
    A = reduce_attention(trace.attention, config)
    T = A.shape[-1]
    if T != len(seq):
        raise InputError(f"trace covers {T} tokens but the sequence has {len(seq)}")
    spans = []
    for p in phrases:
        lo, hi = tokens_for_word_range(seq, p.word_start, p.word_end)
        spans.append(np.arange(lo, hi + 1))
    M = len(spans)
    scores = np.empty((M, M))
    for i, src in enumerate(spans):
        rows = A[src]
        for j, dst in enumerate(spans):
            scores[i, j] = rows[:, dst].sum() / len(src)
    return PhraseAttentionMatrix(scores, phrases.texts, config)
