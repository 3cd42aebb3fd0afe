"""Rule-based phrase segmentation.

A small lexicon-driven POS tagger feeds a longest-match chunk grammar::

    NP     := DET? (ADJ (","? ADJ)*)? NOUN+  |  PRON
    PP     := PREP NP
    ADJP   := ADV? ADJ+
    VP     := VERB+ (NP | ADJP)?
    CLAUSE := NP VP PP?

Chunks are matched left to right, the longest unit starting at a position
wins, and the inner parts of every unit are emitted too, so the resulting
spans nest and overlap. Users with a real parser can bypass all of this
with :func:`load_external_phrases`.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import BoundsError, ParseError
from .tokenizer import TokenSequence, _is_punctuation, split_words


class PosTag(str, enum.Enum):
    DET = "DET"
    ADJ = "ADJ"
    NOUN = "NOUN"
    VERB = "VERB"
    ADV = "ADV"
    PREP = "PREP"
    PRON = "PRON"
    CONJ = "CONJ"
    INTJ = "INTJ"
    PUNCT = "PUNCT"
    OTHER = "OTHER"


class PhraseKind(str, enum.Enum):
    SENT = "SENT"
    NP = "NP"
    VP = "VP"
    ADJP = "ADJP"
    PP = "PP"
    CLAUSE = "CLAUSE"


@dataclass(frozen=True)
class TaggedWord:
    text: str
    tag: PosTag


@dataclass(frozen=True)
class PhraseSpan:
    kind: PhraseKind
    word_start: int
    word_end: int
    text: str = ""

    def __post_init__(self):
        if self.word_start > self.word_end:
            raise BoundsError(f"phrase span end {self.word_end} precedes start {self.word_start}")
        if self.word_start < 0:
            raise BoundsError(f"negative phrase start {self.word_start}")

    @property
    def key(self):
        return (self.word_start, self.word_end)

    def __len__(self):
        return self.word_end - self.word_start + 1


@dataclass(frozen=True)
class PhraseSet:
    phrases: tuple[PhraseSpan, ...]
    sentence: str

    def __len__(self):
        return len(self.phrases)

    def __getitem__(self, i):
        return self.phrases[i]

    def __iter__(self):
        return iter(self.phrases)

    @property
    def texts(self) -> list[str]:
        return [p.text for p in self.phrases]

    def index_mapping(self) -> list[str]:
        return [f"Phrase {i}: {p.text}" for i, p in enumerate(self.phrases)]


def read_lexicon(source: str) -> dict[str, PosTag]:
    """Parse ``word<whitespace>TAG`` lines; ``#`` starts a comment."""
    lexicon = {}
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"lexicon line {lineno}: expected 'word TAG', got {raw!r}")
        try:
            lexicon[parts[0].lower()] = PosTag(parts[1].upper())
        except ValueError:
            raise ParseError(f"lexicon line {lineno}: unknown tag {parts[1]!r}") from None
    return lexicon


def pos_tag(words: Sequence[str], lexicon: Mapping[str, PosTag]) -> list[TaggedWord]:
    if not words:
        raise ValueError("pos_tag needs at least one word")
    tagged = []
    for word in words:
        w = word.lower()
        if w in lexicon:
            tag = lexicon[w]
        elif w and all(_is_punctuation(c) for c in w):
            tag = PosTag.PUNCT
        elif w.endswith("ing") or w.endswith("ed"):
            tag = PosTag.VERB
        elif w.endswith("ly"):
            tag = PosTag.ADV
        else:
            tag = PosTag.NOUN
        tagged.append(TaggedWord(word, tag))
    return tagged


# -- chunk grammar -----------------------------------------------------------
# Every matcher takes (tags, words, i) and returns (end_exclusive, parts) or
# None; ``parts`` lists the inner spans to emit alongside the unit itself.

def _match_np(tags, words, i):
    n = len(tags)
    if i < n and tags[i] is PosTag.PRON:
        return i + 1, []
    j = i
    if j < n and tags[j] is PosTag.DET:
        j += 1
    if j < n and tags[j] is PosTag.ADJ:
        k = j + 1
        while True:
            if k < n and tags[k] is PosTag.ADJ:
                k += 1
            elif k + 1 < n and words[k] == "," and tags[k + 1] is PosTag.ADJ:
                k += 2
            else:
                break
        # adjectives only belong to the NP when a noun follows
        if k < n and tags[k] is PosTag.NOUN:
            j = k
    if j < n and tags[j] is PosTag.NOUN:
        while j < n and tags[j] is PosTag.NOUN:
            j += 1
        return j, []
    return None


def _match_adjp(tags, words, i):
    n = len(tags)
    j = i
    if j < n and tags[j] is PosTag.ADV:
        j += 1
    if j < n and tags[j] is PosTag.ADJ:
        while j < n and tags[j] is PosTag.ADJ:
            j += 1
        return j, []
    return None


def _match_pp(tags, words, i):
    if i < len(tags) and tags[i] is PosTag.PREP:
        np_ = _match_np(tags, words, i + 1)
        if np_ is not None:
            return np_[0], [(PhraseKind.NP, i + 1, np_[0])]
    return None


def _match_vp(tags, words, i):
    n = len(tags)
    j = i
    while j < n and tags[j] is PosTag.VERB:
        j += 1
    if j == i:
        return None
    np_ = _match_np(tags, words, j)
    if np_ is not None:
        return np_[0], [(PhraseKind.NP, j, np_[0])]
    adjp = _match_adjp(tags, words, j)
    if adjp is not None:
        return adjp[0], [(PhraseKind.ADJP, j, adjp[0])]
    return j, []


def _match_clause(tags, words, i):
    np_ = _match_np(tags, words, i)
    if np_ is None:
        return None
    vp = _match_vp(tags, words, np_[0])
    if vp is None:
        return None
    parts = [(PhraseKind.NP, i, np_[0]), (PhraseKind.VP, np_[0], vp[0]), *vp[1]]
    end = vp[0]
    pp = _match_pp(tags, words, end)
    if pp is not None:
        parts += [(PhraseKind.PP, end, pp[0]), *pp[1]]
        end = pp[0]
    return end, parts


_MATCHERS = (
    (PhraseKind.CLAUSE, _match_clause),
    (PhraseKind.VP, _match_vp),
    (PhraseKind.PP, _match_pp),
    (PhraseKind.NP, _match_np),
    (PhraseKind.ADJP, _match_adjp),
)


def chunk(tagged: Sequence[TaggedWord]) -> list[PhraseSpan]:
    """Apply the chunk grammar; returned spans carry joined-word text."""
    tags = [t.tag for t in tagged]
    words = [t.text.lower() for t in tagged]
    spans: list[PhraseSpan] = []
    i = 0
    while i < len(tags):
        best = None
        for kind, matcher in _MATCHERS:
            m = matcher(tags, words, i)
            # strict '>' keeps the earlier (outer) kind on length ties
            if m is not None and (best is None or m[0] > best[1]):
                best = (kind, m[0], m[1])
        if best is None:
            i += 1
            continue
        kind, end, parts = best
        for k, s, e in [(kind, i, end), *parts]:
            spans.append(PhraseSpan(k, s, e - 1, " ".join(t.text for t in tagged[s:e])))
        i = end
    return spans


_NO_SPACE_BEFORE = set(",.!?;:%)]}")
_NO_SPACE_AFTER = set("([{")


def render_words(words: Sequence[str]) -> str:
    """Join words with single spaces, except before closing punctuation and after opening brackets."""
    out = ""
    for i, w in enumerate(words):
        if i and w not in _NO_SPACE_BEFORE and words[i - 1] not in _NO_SPACE_AFTER:
            out += " "
        out += w
    return out


def build_phrase_set(sentence: str | TokenSequence, spans: Iterable[PhraseSpan]) -> PhraseSet:
    """Prepend the whole-sentence span, drop duplicates, and order the rest.

    ``sentence`` may be raw text or an already tokenized sequence. Span text is
    the original-case words joined canonically (see :func:`render_words`), so
    "fresh , quirky" and "fresh, quirky" get the same label.
    """
    if isinstance(sentence, TokenSequence):
        text, words = sentence.text, sentence.words
    else:
        text, words = sentence, split_words(sentence)
    n = len(words)
    if n == 0:
        raise ParseError("sentence has no words")

    def surface(s, e):
        return render_words([text[w.start : w.end] for w in words[s : e + 1]])

    seen = {(0, n - 1)}
    kept = []
    for span in spans:
        if span.word_end >= n:
            raise BoundsError(
                f"phrase span ({span.word_start}, {span.word_end}) outside sentence of {n} words"
            )
        if span.key in seen:
            continue
        seen.add(span.key)
        kept.append(PhraseSpan(span.kind, span.word_start, span.word_end, surface(*span.key)))
    kept.sort(key=lambda p: (p.word_start, -len(p)))
    head = PhraseSpan(PhraseKind.SENT, 0, n - 1, surface(0, n - 1))
    return PhraseSet((head, *kept), text)


def extract_phrases(seq: TokenSequence, lexicon: Mapping[str, PosTag],
                    kinds: Iterable[PhraseKind] | None = None) -> PhraseSet:
    """Tag, chunk and assemble the phrase set for a tokenized sentence."""
    spans = chunk(pos_tag(seq.word_texts, lexicon))
    if kinds is not None:
        allowed = set(kinds)
        spans = [s for s in spans if s.kind in allowed]
    return build_phrase_set(seq, spans)


def load_external_phrases(source: str) -> PhraseSet:
    """Load a phrase document produced by an external parser.

    The document is JSON: ``{"sentence": str, "phrases": [{"kind", "word_start",
    "word_end"}, ...]}``.
    """
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"phrase document line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("phrase document must be an object")
    sentence = doc.get("sentence")
    if not isinstance(sentence, str) or not sentence.strip():
        raise ParseError("phrase document field 'sentence' missing or not a string")
    raw = doc.get("phrases", [])
    if not isinstance(raw, list):
        raise ParseError("phrase document field 'phrases' must be a list")
    spans = []
    for idx, item in enumerate(raw):
        where = f"phrases[{idx}]"
        if not isinstance(item, dict):
            raise ParseError(f"{where} must be an object")
        for name in ("kind", "word_start", "word_end"):
            if name not in item:
                raise ParseError(f"{where} is missing field {name!r}")
        try:
            kind = PhraseKind(str(item["kind"]).upper())
        except ValueError:
            raise ParseError(f"{where}.kind: unknown phrase kind {item['kind']!r}") from None
        start, end = item["word_start"], item["word_end"]
        if not (isinstance(start, int) and isinstance(end, int)):
            raise ParseError(f"{where}: word_start/word_end must be integers")
        spans.append(PhraseSpan(kind, start, end))
    return build_phrase_set(sentence, spans)
