import pytest

from layerlens.errors import BoundsError, ConfigurationError, DuplicateEntryError, EmptyInputError
from layerlens.tokenizer import load_vocab, split_words, tokenize, tokens_for_word_range, wordpiece


def test_vocab_ids_are_line_numbers():
    v = load_vocab("[PAD]\n[UNK]\n[CLS]\n[SEP]\nthe")
    assert v.pad_id == 0
    assert v.entries["the"] == 4
    assert len(v) == 5


def test_vocab_missing_special_names_token():
    with pytest.raises(ConfigurationError, match=r"\[PAD\]"):
        load_vocab("[UNK]\n[CLS]\n[SEP]\nthe")


def test_vocab_duplicate_entry():
    with pytest.raises(DuplicateEntryError):
        load_vocab("[PAD]\n[UNK]\n[CLS]\n[SEP]\nthe\nthe")


def test_quirky_splits(small_vocab):
    seq = tokenize("quirky", small_vocab)
    assert seq.texts == ["[CLS]", "qui", "##rky", "[SEP]"]
    assert seq.tokens[2].is_continuation
    assert tokens_for_word_range(seq, 0, 0) == (1, 2)


def test_whole_words(small_vocab):
    seq = tokenize("the book", small_vocab)
    assert seq.texts == ["[CLS]", "the", "book", "[SEP]"]
    assert seq.word_spans == ((1, 1), (2, 2))
    assert tokens_for_word_range(seq, 0, 1) == (1, 2)


def test_unknown_word(small_vocab):
    assert tokenize("zzqx", small_vocab).texts == ["[CLS]", "[UNK]", "[SEP]"]


def test_word_range_out_of_bounds(small_vocab):
    seq = tokenize("the book", small_vocab)
    with pytest.raises(BoundsError):
        tokens_for_word_range(seq, 3, 5)


def test_empty_text(small_vocab):
    with pytest.raises(EmptyInputError):
        tokenize("   ", small_vocab)


def test_punctuation_is_its_own_word():
    words = split_words("Read the book, forget the movie!")
    assert [w.text for w in words] == ["read", "the", "book", ",", "forget", "the", "movie", "!"]
    assert words[2].start == 9 and words[2].end == 13


def test_lowercase_and_surface(small_vocab):
    seq = tokenize("The BOOK.", small_vocab)
    assert seq.texts == ["[CLS]", "the", "book", ".", "[SEP]"]
    assert seq.surface(0, 1) == "The BOOK"


def test_wordpiece_partial_residue_is_unk(small_vocab):
    # "quix": "qui" matches but "##x" does not, so the whole word is unknown
    assert wordpiece("quix", small_vocab) == [("[UNK]", False)]


def test_bundled_vocab_splits_quirky(vocab):
    assert "quirky" not in vocab
    assert tokenize("quirky", vocab).texts == ["[CLS]", "qui", "##rky", "[SEP]"]
