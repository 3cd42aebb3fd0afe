"""Access to the bundled vocabulary, lexicon, corpus, demo sentences and weights."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .model import ModelWeights, load_weights
from .phrases import PosTag, read_lexicon
from .tokenizer import Vocab, load_vocab

DEFAULT_SEED = 1234


def data_path(name: str):
    return resources.files("layerlens") / "data" / name


def read_text(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def default_vocab() -> Vocab:
    return load_vocab(read_text("vocab.txt"))


@lru_cache(maxsize=None)
def default_lexicon() -> dict[str, PosTag]:
    return read_lexicon(read_text("lexicon.txt"))


def default_weights() -> ModelWeights:
    return load_weights(read_text("model.weights"))[1]


def demo_sentences() -> list[str]:
    return [l for l in read_text("demo.txt").splitlines() if l.strip() and not l.startswith("#")]
