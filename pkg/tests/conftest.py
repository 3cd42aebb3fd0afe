import numpy as np
import pytest

from layerlens import resources
from layerlens.tokenizer import load_vocab

S1 = ("neither parker nor donovan is a typical romantic lead , "
      "but they bring a fresh , quirky charm to the formula .")
S2 = "Read the book, forget the movie!"
S3 = ("Oh great, another email. I just love waiting an extra week for something "
      "I ordered two months ago.")


@pytest.fixture(scope="session")
def vocab():
    return resources.default_vocab()


@pytest.fixture(scope="session")
def lexicon():
    return resources.default_lexicon()


@pytest.fixture(scope="session")
def weights():
    return resources.default_weights()


@pytest.fixture
def small_vocab():
    # quirky is deliberately missing so it splits into qui + ##rky
    lines = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "the", "book", "movie", "qui", "##rky", "good", "bad", "."]
    return load_vocab("\n".join(lines))


def random_game(n, seed):
    """Value table over all 2**n coalitions, as a callable."""
    table = np.random.default_rng(seed).normal(size=1 << n)
    return lambda mask: float(table[mask]), table


ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion.

    Usage: ``check = criterion("AC1 efficiency")`` then ``check(ok, detail)``.
    The line is FAIL unless ``check`` was called with a true value.
    """
    state = {}

    def make(name):
        state["name"] = name
        ACCEPTANCE[name] = "FAIL  (did not finish)"

        def check(ok, detail=""):
            ACCEPTANCE[name] = ("PASS" if ok else "FAIL") + (f"  {detail}" if detail else "")
            assert ok, f"{name}: {detail}"

        return check

    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda n: int(n.split()[0][2:])):
        terminalreporter.write_line(f"{name}: {ACCEPTANCE[name]}")
