"""Phrase-level coalition games over a transformer's internal layers.

Players are phrases (or words, or tokens for the baseline). A coalition's
value is the model's output after PAD-masking every token that belongs to an
absent player and to no present player, with the masking applied at a chosen
layer target:

* ``input``      token ids are replaced by ``[PAD]``
* ``embedding``  embedding rows are replaced by ``emb([PAD]) + position``
* ``encoderN``   rows of block N's output are replaced by the same rows from a
                 reference forward pass of the fully masked sentence
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import shapley
from .errors import ConfigurationError, InputError
from .model import (
    NEGATIVE,
    POSITIVE,
    ForwardTrace,
    ModelWeights,
    forward,
    forward_from_embeddings,
    forward_with_hidden_override,
)
from .phrases import PhraseSet, PosTag, build_phrase_set, extract_phrases
from .tokenizer import TokenSequence, Vocab, tokenize, tokens_for_word_range

log = logging.getLogger(__name__)

LOG_ODDS = "log_odds"
PROB = "prob"
SELECTORS = (LOG_ODDS, PROB)


@dataclass(frozen=True, order=True)
class LayerTarget:
    kind: str  # "input", "embedding" or "encoder"
    layer: int = -1

    def __post_init__(self):
        if self.kind not in ("input", "embedding", "encoder"):
            raise ConfigurationError(f"unknown layer target kind {self.kind!r}")
        if self.kind == "encoder" and self.layer < 0:
            raise ConfigurationError("encoder target needs a non-negative layer index")

    @property
    def label(self) -> str:
        return f"encoder{self.layer}" if self.kind == "encoder" else self.kind

    def __str__(self):
        return self.label

    @classmethod
    def parse(cls, text: str) -> "LayerTarget":
        t = text.strip().lower()
        if t in ("input", "embedding"):
            return cls(t)
        if t.startswith("encoder"):
            rest = t[len("encoder"):].strip("()[]:-_ ")
            try:
                return cls("encoder", int(rest))
            except ValueError:
                pass
        raise ConfigurationError(f"cannot parse layer target {text!r} (use input, embedding or encoderN)")

    def check(self, n_layers: int):
        if self.kind == "encoder" and self.layer >= n_layers:
            raise ConfigurationError(f"{self.label} needs layer < {n_layers}")


INPUT = LayerTarget("input")
EMBEDDING = LayerTarget("embedding")


def ENCODER(layer: int) -> LayerTarget:
    return LayerTarget("encoder", layer)


def default_targets(n_layers: int) -> list[LayerTarget]:
    """Embedding plus the deepest encoder block whose output still feeds attention.

    The classifier only reads the CLS row, and CLS is never masked, so masking
    the output of the final block cannot change the prediction. The default
    encoder target is therefore the block before the last one.
    """
    return [EMBEDDING, ENCODER(max(n_layers - 2, 0))]


@dataclass
class ExplainerConfig:
    exact_threshold: int = 12
    kernel_samples: int = 2048
    ridge: float = 1e-6
    seed: int = 0
    targets: list[LayerTarget] | None = None
    method: str = "exact"  # "exact" falls back to kernel above exact_threshold
    selector: str = LOG_ODDS
    encoder_baseline: str = "reference"  # or "zero"
    word_level: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.exact_threshold > shapley.MAX_EXACT_PLAYERS or self.exact_threshold < 1:
            raise ConfigurationError(
                f"exact_threshold must be in 1..{shapley.MAX_EXACT_PLAYERS}, got {self.exact_threshold}"
            )
        if self.method not in ("exact", "kernel"):
            raise ConfigurationError(f"method must be 'exact' or 'kernel', got {self.method!r}")
        if self.selector not in SELECTORS:
            raise ConfigurationError(f"selector must be one of {SELECTORS}, got {self.selector!r}")
        if self.encoder_baseline not in ("reference", "zero"):
            raise ConfigurationError(f"unknown encoder baseline {self.encoder_baseline!r}")

    def resolved_targets(self, n_layers: int) -> list[LayerTarget]:
        targets = list(self.targets) if self.targets else default_targets(n_layers)
        for t in targets:
            t.check(n_layers)
        if len(set(targets)) != len(targets):
            raise ConfigurationError("duplicate layer targets")
        return targets


# -- masking ------------------------------------------------------------------

def phrase_token_sets(phrases: PhraseSet, seq: TokenSequence) -> list[frozenset[int]]:
    out = []
    for p in phrases:
        lo, hi = tokens_for_word_range(seq, p.word_start, p.word_end)
        out.append(frozenset(range(lo, hi + 1)))
    return out


def mask_from_players(coalition: int, players: Sequence[frozenset[int]]) -> frozenset[int]:
    absent: set[int] = set()
    present: set[int] = set()
    for i, toks in enumerate(players):
        (present if coalition >> i & 1 else absent).update(toks)
    return frozenset(absent - present)


def token_mask_of(coalition: int, phrases: PhraseSet, seq: TokenSequence) -> frozenset[int]:
    """Token indices to PAD for a phrase coalition.

    Present phrases protect their tokens from absent overlapping phrases;
    CLS, SEP and tokens outside every phrase are never masked.
    """
    return mask_from_players(coalition, phrase_token_sets(phrases, seq))


class ValueFunction:
    """``v(coalition)`` for one sentence, player list and layer target.

    Values are memoized on the derived token mask, so coalitions that mask the
    same tokens share one forward pass. The cache is safe for concurrent use.
    """

    def __init__(self, weights: ModelWeights, seq: TokenSequence, players: Sequence[frozenset[int]],
                 target: LayerTarget, pad_id: int, *, selector: str = LOG_ODDS,
                 maskable: Iterable[int] | None = None, encoder_baseline: str = "reference",
                 cache: bool = True, _shared: dict | None = None):
        target.check(weights.config.n_layers)
        if selector not in SELECTORS:
            raise ConfigurationError(f"unknown selector {selector!r}")
        self.weights = weights
        self.seq = seq
        self.players = list(players)
        self.target = target
        self.pad_id = pad_id
        self.selector = selector
        self.encoder_baseline = encoder_baseline
        self.maskable = frozenset(maskable) if maskable is not None else frozenset().union(*self.players)
        self.use_cache = cache
        self._cache: dict[frozenset[int], float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self._ids = np.asarray(seq.ids)
        shared = _shared if _shared is not None else {}
        if "trace" not in shared:
            shared["trace"] = forward(weights, self._ids)
        self._trace: ForwardTrace = shared["trace"]
        if target.kind == "encoder" and "reference" not in shared:
            ids = self._ids.copy()
            ids[sorted(self.maskable)] = pad_id
            shared["reference"] = forward(weights, ids)
        self._reference: ForwardTrace | None = shared.get("reference")
        self._shared = shared

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def full_coalition(self) -> int:
        return (1 << self.n_players) - 1

    def sub_game(self, players: Sequence[frozenset[int]]) -> "ValueFunction":
        """Same sentence, target and reference states, different players."""
        return ValueFunction(self.weights, self.seq, players, self.target, self.pad_id,
                             selector=self.selector, maskable=self.maskable,
                             encoder_baseline=self.encoder_baseline, cache=self.use_cache,
                             _shared=self._shared)

    def token_mask(self, coalition: int) -> frozenset[int]:
        if not 0 <= coalition <= self.full_coalition:
            raise InputError(f"coalition {coalition:#x} outside {self.n_players} players")
        return mask_from_players(coalition, self.players)

    def __call__(self, coalition: int) -> float:
        return self.value_of_mask(self.token_mask(coalition))

    def value_of_mask(self, mask: frozenset[int]) -> float:
        if not self.use_cache:
            return self._evaluate(mask)
        with self._lock:
            if mask in self._cache:
                self.hits += 1
                return self._cache[mask]
        value = self._evaluate(mask)
        with self._lock:
            self.misses += 1
            self._cache.setdefault(mask, value)
            return self._cache[mask]

    def _scalar(self, logits) -> float:
        if self.selector == LOG_ODDS:
            return float(logits[POSITIVE] - logits[NEGATIVE])
        z = logits - logits.max()
        e = np.exp(z)
        return float(e[POSITIVE] / e.sum())

    def masked_ids(self, mask: Iterable[int]) -> np.ndarray:
        ids = self._ids.copy()
        ids[sorted(mask)] = self.pad_id
        return ids

    def _evaluate(self, mask: frozenset[int]) -> float:
        rows = sorted(mask)
        kind = self.target.kind
        if kind == "input":
            return self._scalar(forward(self.weights, self.masked_ids(rows)).logits)
        if kind == "embedding":
            emb = self._trace.embedding_out.copy()
            if rows:
                emb[rows] = self.weights["tok_emb"][self.pad_id] + self.weights["pos_emb"][rows]
            return self._scalar(forward_from_embeddings(self.weights, emb).logits)
        layer = self.target.layer
        hidden = self._trace.hidden[layer].copy()
        if rows:
            if self.encoder_baseline == "zero":
                hidden[rows] = 0.0
            else:
                hidden[rows] = self._reference.hidden[layer][rows]
        logits, _ = forward_with_hidden_override(self.weights, layer, hidden)
        return self._scalar(logits)


# -- solving ------------------------------------------------------------------

def _solve(game: ValueFunction, config: ExplainerConfig, pool=None):
    """Returns (phi, method, diagnostics) using exact enumeration when allowed."""
    n = game.n_players
    map_fn = pool.map if pool is not None else map
    if config.method == "exact" and n <= config.exact_threshold:
        return shapley.exact_shapley(game, n, config.exact_threshold, map_fn), "exact", None
    if config.method == "exact":
        log.info("%d players exceed exact threshold %d; using kernel SHAP", n, config.exact_threshold)
    if n == 1:
        return np.array([game(1) - game(0)]), "exact", None
    phi, diag = shapley.kernel_shap(game, n, samples=config.kernel_samples, ridge=config.ridge,
                                    seed=config.seed, threshold=config.exact_threshold, map_fn=map_fn)
    return phi, "kernel", diag


@dataclass
class WordAttribution:
    phrase_index: int
    words: list[str]
    values: np.ndarray
    v_empty: float
    v_full: float
    method: str = "exact"

    @property
    def total(self) -> float:
        return shapley.aggregate_phrase(self.values)


def word_level_shap(game: ValueFunction, phrases: PhraseSet, phrase_index: int,
                    config: ExplainerConfig | None = None, pool=None) -> WordAttribution:
    """Shapley values of the words of one phrase, all other tokens held present.

    Phrases longer than the exact threshold use kernel SHAP, which still
    satisfies efficiency exactly.
    """
    config = config or ExplainerConfig()
    phrase = phrases[phrase_index]
    seq = game.seq
    players = [frozenset(range(seq.word_spans[w][0], seq.word_spans[w][1] + 1))
               for w in range(phrase.word_start, phrase.word_end + 1)]
    sub = game.sub_game(players)
    values, method, _ = _solve(sub, config, pool)
    return WordAttribution(phrase_index, seq.word_texts[phrase.word_start : phrase.word_end + 1],
                           values, sub(0), sub(sub.full_coalition), method)


@dataclass
class LayerAttribution:
    target: LayerTarget
    values: np.ndarray
    v_empty: float
    v_full: float
    method: str
    diagnostics: shapley.KernelDiagnostics | None = None
    words: list[WordAttribution] = field(default_factory=list)


@dataclass
class ShapResult:
    sentence: str
    seq: TokenSequence
    phrases: PhraseSet
    layers: dict[str, LayerAttribution]
    aggregated: np.ndarray
    method: str
    seed: int
    samples: int
    selector: str
    prob_positive: float

    @property
    def targets(self) -> list[LayerTarget]:
        return [la.target for la in self.layers.values()]

    def values(self, label: str) -> np.ndarray:
        return self.layers[label].values


def _pool(config: ExplainerConfig):
    return ThreadPoolExecutor(config.workers) if config.workers > 1 else None


def explain_phrases(weights: ModelWeights, seq: TokenSequence, phrases: PhraseSet, vocab: Vocab,
                    config: ExplainerConfig | None = None) -> ShapResult:
    config = config or ExplainerConfig()
    if len(phrases) == 0:
        raise InputError("cannot explain a sentence with no phrases")
    targets = config.resolved_targets(weights.config.n_layers)
    players = phrase_token_sets(phrases, seq)
    shared: dict = {}
    pool = _pool(config)
    layers = {}
    methods = set()
    try:
        for target in targets:
            game = ValueFunction(weights, seq, players, target, vocab.pad_id,
                                 selector=config.selector,
                                 encoder_baseline=config.encoder_baseline, _shared=shared)
            phi, method, diag = _solve(game, config, pool)
            methods.add(method)
            la = LayerAttribution(target, phi, game(0), game(game.full_coalition), method, diag)
            if config.word_level:
                for i in range(len(phrases)):
                    la.words.append(word_level_shap(game, phrases, i, config, pool))
            layers[target.label] = la
    finally:
        if pool is not None:
            pool.shutdown()
    aggregated = shapley.aggregate_layers([la.values for la in layers.values()])
    return ShapResult(seq.text, seq, phrases, layers, aggregated,
                      "kernel" if "kernel" in methods else "exact", config.seed,
                      config.kernel_samples, config.selector, shared["trace"].prob_positive)


def explain(text: str, weights: ModelWeights, vocab: Vocab, lexicon: Mapping[str, PosTag],
            config: ExplainerConfig | None = None, phrases: PhraseSet | None = None) -> ShapResult:
    """Tokenize, segment into phrases and attribute at every configured layer."""
    seq = tokenize(text, vocab)
    if phrases is None:
        phrases = extract_phrases(seq, lexicon)
    else:
        # re-anchor external spans onto this tokenization (also re-validates bounds)
        phrases = build_phrase_set(seq, phrases.phrases[1:])
    return explain_phrases(weights, seq, phrases, vocab, config)


@dataclass
class TokenShapResult:
    sentence: str
    seq: TokenSequence
    token_indices: list[int]
    tokens: list[str]
    values: np.ndarray
    v_empty: float
    v_full: float
    method: str
    seed: int
    samples: int
    selector: str
    diagnostics: shapley.KernelDiagnostics | None = None


def baseline_token_shap(text: str, weights: ModelWeights, vocab: Vocab,
                        config: ExplainerConfig | None = None) -> TokenShapResult:
    """Whole-model, token-level attribution: every non-special token is a player."""
    config = config or ExplainerConfig()
    seq = tokenize(text, vocab)
    idx = list(range(1, len(seq) - 1))
    players = [frozenset([i]) for i in idx]
    game = ValueFunction(weights, seq, players, INPUT, vocab.pad_id, selector=config.selector)
    pool = _pool(config)
    try:
        phi, method, diag = _solve(game, config, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    return TokenShapResult(seq.text, seq, idx, [seq.tokens[i].text for i in idx], phi,
                           game(0), game(game.full_coalition), method, config.seed,
                           config.kernel_samples, config.selector, diag)
