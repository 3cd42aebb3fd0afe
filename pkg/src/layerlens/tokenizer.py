"""WordPiece-style tokenization with word <-> token index maps.

Phrases are defined over words, while the model and every masking
intervention operate on tokens. :class:`TokenSequence` keeps both views
aligned so a word range can always be projected onto a token range.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .errors import BoundsError, ConfigurationError, DuplicateEntryError, EmptyInputError

PAD = "[PAD]"
UNK = "[UNK]"
CLS = "[CLS]"
SEP = "[SEP]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP)


@dataclass(frozen=True)
class Vocab:
    entries: Mapping[str, int]
    pad_id: int
    unk_id: int
    cls_id: int
    sep_id: int
    continuation_prefix: str = "##"
    id_to_token: tuple = field(default=(), repr=False)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, piece):
        return piece in self.entries

    def token(self, idx: int) -> str:
        return self.id_to_token[idx]

    @property
    def special_ids(self) -> frozenset:
        return frozenset((self.pad_id, self.unk_id, self.cls_id, self.sep_id))


def load_vocab(source: str, continuation_prefix: str = "##") -> Vocab:
    """Build a :class:`Vocab` from a newline-separated token list.

    The id of a token is its zero-based line number. Trailing newlines are
    ignored, blank interior lines are not allowed since they would shift ids.
    """
    lines = source.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmptyInputError("vocabulary source is empty")
    entries: dict[str, int] = {}
    for lineno, raw in enumerate(lines):
        piece = raw.strip()
        if not piece:
            raise ConfigurationError(f"blank vocabulary entry on line {lineno + 1}")
        if piece in entries:
            raise DuplicateEntryError(
                f"duplicate vocabulary entry {piece!r} on lines {entries[piece] + 1} and {lineno + 1}"
            )
        entries[piece] = lineno
    for special in SPECIAL_TOKENS:
        if special not in entries:
            raise ConfigurationError(f"vocabulary is missing special token {special}")
    return Vocab(
        entries=MappingProxyType(entries),
        pad_id=entries[PAD],
        unk_id=entries[UNK],
        cls_id=entries[CLS],
        sep_id=entries[SEP],
        continuation_prefix=continuation_prefix,
        id_to_token=tuple(entries),
    )


def read_vocab(path) -> Vocab:
    with open(path, encoding="utf-8") as fh:
        return load_vocab(fh.read())


@dataclass(frozen=True)
class Token:
    id: int
    text: str
    word_index: int  # -1 for CLS/SEP
    is_continuation: bool = False


@dataclass(frozen=True)
class Word:
    text: str  # lowercased form used for lookup
    start: int  # character offsets into the source sentence
    end: int


@dataclass(frozen=True)
class TokenSequence:
    text: str
    words: tuple[Word, ...]
    tokens: tuple[Token, ...]
    word_spans: tuple[tuple[int, int], ...]  # inclusive token ranges

    def __len__(self):
        return len(self.tokens)

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.tokens]

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def word_texts(self) -> list[str]:
        return [w.text for w in self.words]

    def surface(self, word_start: int, word_end: int) -> str:
        """Original-case substring of the sentence covering a word range."""
        return self.text[self.words[word_start].start : self.words[word_end].end]


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def split_words(text: str) -> list[Word]:
    """Split on whitespace and punctuation; each punctuation mark is a word."""
    words: list[Word] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace() or _is_punctuation(ch):
            if start is not None:
                words.append(Word(text[start:i].lower(), start, i))
                start = None
            if not ch.isspace():
                words.append(Word(ch.lower(), i, i + 1))
        elif start is None:
            start = i
    if start is not None:
        words.append(Word(text[start:].lower(), start, len(text)))
    return words


def wordpiece(word: str, vocab: Vocab) -> list[tuple[str, bool]]:
    """Greedy longest-match decomposition of a single word.

    Returns ``(piece, is_continuation)`` pairs; a word that cannot be fully
    decomposed collapses to a single ``[UNK]``.
    """
    pieces = []
    pos = 0
    prefix = vocab.continuation_prefix
    while pos < len(word):
        end = len(word)
        match = None
        while end > pos:
            candidate = word[pos:end]
            if pos > 0:
                candidate = prefix + candidate
            if candidate in vocab.entries:
                match = candidate
                break
            end -= 1
        if match is None:
            return [(UNK, False)]
        pieces.append((match, pos > 0))
        pos = end
    return pieces


def tokenize(text: str, vocab: Vocab) -> TokenSequence:
    normalized = unicodedata.normalize("NFC", text)
    if not normalized.strip():
        raise EmptyInputError("cannot tokenize empty text")
    words = split_words(normalized)
    tokens = [Token(vocab.cls_id, CLS, -1)]
    spans = []
    for wi, word in enumerate(words):
        first = len(tokens)
        for piece, cont in wordpiece(word.text, vocab):
            tokens.append(Token(vocab.entries[piece], piece, wi, cont))
        spans.append((first, len(tokens) - 1))
    tokens.append(Token(vocab.sep_id, SEP, -1))
    return TokenSequence(normalized, tuple(words), tuple(tokens), tuple(spans))


def tokens_for_word_range(seq: TokenSequence, word_start: int, word_end: int) -> tuple[int, int]:
    """Inclusive token index range covering words ``word_start..word_end``."""
    n = len(seq.words)
    if not (0 <= word_start <= word_end < n):
        raise BoundsError(f"word range ({word_start}, {word_end}) outside 0..{n - 1}")
    return seq.word_spans[word_start][0], seq.word_spans[word_end][1]


def strip_prefix(token: Token, prefix: str = "##") -> str:
    if token.is_continuation and token.text.startswith(prefix):
        return token.text[len(prefix):]
    return token.text
