"""Regenerate the bundled POS lexicon and vocabulary.

    python scripts/build_assets.py

The vocabulary needs the ``wordfreq`` package (build-time only, not a runtime
dependency). Words starting with "quir" are kept out so that "quirky" splits
into "qui" + "##rky".
"""

from pathlib import Path

from layerlens.tokenizer import SPECIAL_TOKENS, split_words

DATA = Path(__file__).resolve().parents[1] / "src" / "layerlens" / "data"
VOCAB_SIZE = 3000

LEXICON = {
    "DET": """the a an this that these those another every each some any no neither
        either both all my your his her its our their what which whose
        one two three four five six seven eight nine ten several many few""",
    "PRON": """i you he she it we they me him her us them myself yourself himself
        herself itself ourselves themselves something nothing anything everything
        someone anyone everyone nobody somebody anybody mine yours hers ours theirs
        who whom thing""",
    "PREP": """to of in on at for with from by about into over under after before
        between through during without within against among across behind beyond
        like than toward towards upon near off out up down around since until via per
        as""",
    "CONJ": """and or but nor so yet because although though while if unless whereas
        whether then""",
    "INTJ": """oh ah wow hey ugh alas yes ouch hooray oops hmm please""",
    "ADV": """just not very too also only really quite never always often again still
        even already ever here there now soon almost rather simply sadly happily
        painfully far ago much more most less least enough maybe perhaps once twice
        indeed away back how why when where well""",
    "VERB": """is are was were be been being am do does did have has had will would
        can could should may might must shall read forget bring brings brought
        love loves hate hates make makes see saw seen watch go goes went
        come comes came get gets got give gives gave take takes took say says know
        knew think thought feel feels felt find found want wants keep seem seems
        become became leave ignore ignores sink sinks fall falls works
        wins care tell told let put try sit stand run tells win waste lose""",
    "ADJ": """good great bad best worst better worse fresh quirky typical romantic new
        old long short big small little real whole special strong weak warm funny
        boring dull lovely beautiful wonderful brilliant excellent awful terrible poor
        silly smart charming clever moving fun touching honest tired flat stale ugly
        lazy cynical predictable lifeless forgettable delightful sharp slow annoying
        angry bored extra full pure complete stiff happy sad nice fine perfect
        original familiar first last other same different entire true free easy hard
        high low young amazing interesting exciting worth next""",
}

SUFFIXES = """s es ed ing ly er est ion tion able ful less ness ment y ish ous al ic
    ity ive ize rky""".split()


def build_lexicon():
    lines = ["# word TAG; consulted before the suffix and default rules"]
    seen = set()
    for tag, words in LEXICON.items():
        for w in words.split():
            if w in seen:
                continue
            seen.add(w)
            lines.append(f"{w} {tag}")
    (DATA / "lexicon.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_vocab():
    from wordfreq import top_n_list

    entries = list(SPECIAL_TOKENS)
    entries += [c for c in "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"]
    entries += [str(d) for d in range(10)]
    entries += [chr(c) for c in range(ord("a"), ord("z") + 1)]
    entries += ["##" + chr(c) for c in range(ord("a"), ord("z") + 1)]
    entries += ["##" + s for s in SUFFIXES]
    entries.append("qui")
    entries = list(dict.fromkeys(entries))

    required = []
    for name in ("corpus.tsv", "demo.txt"):
        for line in (DATA / name).read_text(encoding="utf-8").splitlines():
            if line.startswith("#"):
                continue
            required += [w.text for w in split_words(line.split("\t")[-1])]
    for words in LEXICON.values():
        required += words.split()

    def usable(w):
        return w.isascii() and w.isalpha() and not w.startswith("quir")

    seen = set(entries)
    for w in required + top_n_list("en", 2 * VOCAB_SIZE):
        if len(seen) >= VOCAB_SIZE:
            break
        if usable(w) and w not in seen:
            seen.add(w)
            entries.append(w)
    missing = [w for w in required if usable(w) and w not in seen]
    assert not missing, missing
    (DATA / "vocab.txt").write_text("\n".join(entries) + "\n", encoding="utf-8")


if __name__ == "__main__":
    build_lexicon()
    build_vocab()
