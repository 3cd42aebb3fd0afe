"""Command-line entry point.

Exit status: 0 on success, 1 on usage errors, 2 on runtime errors. Data goes
to files and stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import resources
from .attention import AttentionAggregationConfig
from .engine import ExplainerConfig, LayerTarget, baseline_token_shap, explain
from .errors import LayerLensError
from .model import ModelConfig, init_weights, load_weights, save_weights
from .phrases import load_external_phrases
from .pipeline import FORMATS, attention_for, slugify, summary_lines, write_artifacts
from .plotting import write_text
from .tokenizer import load_vocab
from .training import TrainConfig, corpus_examples, read_corpus, train_classifier

log = logging.getLogger("layerlens")

SEED_ENV = "LAYERLENS_SEED"
DEMO_SLUGS = ("s1", "s2", "s3")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_model_args(p):
    p.add_argument("--model", type=Path, help="weight document (default: bundled model)")
    p.add_argument("--vocab", type=Path, help="vocabulary file (default: bundled vocab)")


def _add_explainer_args(p, phrase_level=True):
    p.add_argument("sentence", nargs="?", help="sentence to explain")
    p.add_argument("--input", type=Path, help="file with one sentence per line ('#' comments)")
    p.add_argument("--method", choices=("exact", "kernel"), default="exact")
    p.add_argument("--samples", type=int, default=2048, help="kernel SHAP sample budget")
    p.add_argument("--threshold", type=int, default=12, help="max players for exact enumeration")
    p.add_argument("--seed", type=int, help=f"random seed (default: ${SEED_ENV} or {resources.DEFAULT_SEED})")
    p.add_argument("--selector", choices=("log_odds", "prob"), default="log_odds",
                   help="explained scalar: positive-class log-odds or probability")
    p.add_argument("--out", type=Path, default=Path("layerlens_out"), help="output directory")
    p.add_argument("--formats", default=",".join(FORMATS), help="comma list of report,svg,html")
    p.add_argument("--workers", type=int, default=1, help="threads for coalition evaluation")
    if phrase_level:
        p.add_argument("--phrases", type=Path, help="external phrase document (bypasses the chunker)")
        p.add_argument("--targets", help="comma list of layer targets, e.g. embedding,encoder0")
    _add_model_args(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="layerlens", description="Layer-wise phrase SHAP explanations for a toy sentiment transformer.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("explain", help="phrase-level SHAP per layer target, plus aggregate")
    _add_explainer_args(p)
    p = sub.add_parser("baseline", help="token-level whole-model SHAP")
    _add_explainer_args(p, phrase_level=False)
    p = sub.add_parser("attention", help="phrase-to-phrase attention heatmap")
    _add_explainer_args(p)
    p.add_argument("--attn-layers", choices=("last", "mean_all"), default="last")
    p.add_argument("--attn-heads", choices=("mean", "max"), default="mean")

    p = sub.add_parser("train", help="train the toy classifier")
    p.add_argument("--corpus", type=Path, help="label<TAB>sentence file (default: bundled corpus)")
    p.add_argument("--out", type=Path, required=True, help="weight document to write")
    p.add_argument("--seed", type=int)
    p.add_argument("--vocab", type=Path)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)

    p = sub.add_parser("demo", help="explain the three bundled example sentences")
    p.add_argument("--out", type=Path, default=Path("layerlens_demo"))
    p.add_argument("--seed", type=int)
    p.add_argument("--formats", default=",".join(FORMATS))
    _add_model_args(p)
    for p in sub.choices.values():
        p.set_defaults(usage=p.format_usage())
    return parser


def resolve_seed(value):
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return resources.DEFAULT_SEED


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LayerLensError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_model(args):
    vocab = load_vocab(_read(args.vocab)) if args.vocab else resources.default_vocab()
    if args.model:
        weights = load_weights(_read(args.model))[1]
    else:
        weights = resources.default_weights()
    if weights.config.vocab_size != len(vocab):
        raise LayerLensError(
            f"model expects a vocabulary of {weights.config.vocab_size} entries, vocab has {len(vocab)}"
        )
    return weights, vocab


def _formats(text):
    formats = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise UsageError(f"unknown output format(s): {', '.join(bad)}")
    return formats


def _sentences(args, phrase_doc):
    if args.sentence and args.input:
        raise UsageError("give either a sentence or --input, not both")
    if args.input:
        lines = _read(args.input).splitlines()
        return [l.strip() for l in lines if l.strip() and not l.lstrip().startswith("#")]
    if args.sentence:
        return [args.sentence]
    if phrase_doc is not None:
        return [phrase_doc.sentence]
    raise UsageError("a sentence argument or --input is required")


def _explainer_config(args, seed):
    targets = None
    if getattr(args, "targets", None):
        targets = [LayerTarget.parse(t) for t in args.targets.split(",") if t.strip()]
    return ExplainerConfig(exact_threshold=args.threshold, kernel_samples=args.samples, seed=seed,
                           targets=targets, method=args.method, selector=args.selector,
                           workers=max(1, args.workers))


def cmd_analyze(args, out):
    seed = resolve_seed(args.seed)
    formats = _formats(args.formats)
    phrase_doc = load_external_phrases(_read(args.phrases)) if getattr(args, "phrases", None) else None
    sentences = _sentences(args, phrase_doc)
    weights, vocab = _load_model(args)
    config = _explainer_config(args, seed)
    lexicon = resources.default_lexicon()
    for sentence in sentences:
        result = baseline = attention = None
        if args.command == "baseline":
            baseline = baseline_token_shap(sentence, weights, vocab, config)
        else:
            phrases = phrase_doc if phrase_doc is not None and len(sentences) == 1 else None
            result = explain(sentence, weights, vocab, lexicon, config, phrases=phrases)
            if args.command == "attention":
                attention = attention_for(weights, result,
                                          AttentionAggregationConfig(args.attn_layers, args.attn_heads))
        slug = slugify(sentence)
        art = write_artifacts(args.out, slug, weights, config, result=result, baseline=baseline,
                              attention=attention, formats=formats)
        for line in summary_lines(result, baseline, attention):
            print(line, file=out)
        for path in art.files:
            log.info("wrote %s", path)
    return 0


def cmd_train(args, out):
    seed = resolve_seed(args.seed)
    vocab = load_vocab(_read(args.vocab)) if args.vocab else resources.default_vocab()
    source = _read(args.corpus) if args.corpus else resources.read_text("corpus.tsv")
    examples = corpus_examples(read_corpus(source), vocab)
    hyper = TrainConfig(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=seed)
    weights = init_weights(ModelConfig(vocab_size=len(vocab)), seed)
    result = train_classifier(weights, examples, hyper)
    write_text(args.out, save_weights(result.weights))
    print("epoch\tloss\taccuracy", file=out)
    for i, (loss, acc) in enumerate(zip(result.losses, result.accuracies), 1):
        print(f"{i}\t{loss:.6g}\t{acc:.4f}", file=out)
    return 0


def cmd_demo(args, out):
    seed = resolve_seed(args.seed)
    formats = _formats(args.formats)
    weights, vocab = _load_model(args)
    lexicon = resources.default_lexicon()
    config = ExplainerConfig(seed=seed)
    for slug, sentence in zip(DEMO_SLUGS, resources.demo_sentences()):
        result = explain(sentence, weights, vocab, lexicon, config)
        baseline = baseline_token_shap(sentence, weights, vocab, config)
        attention = attention_for(weights, result)
        write_artifacts(args.out, slug, weights, config, result=result, baseline=baseline,
                        attention=attention, formats=formats)
        print(f"## {slug}", file=out)
        for line in summary_lines(result, baseline, attention):
            print(line, file=out)
    return 0


COMMANDS = {"explain": cmd_analyze, "baseline": cmd_analyze, "attention": cmd_analyze,
            "train": cmd_train, "demo": cmd_demo}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s", stream=err)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        text = str(exc)
        if args is not None and not text.startswith("usage:"):
            text = f"{args.usage}layerlens {args.command}: error: {text}"
        print(text, file=err)
        return 1
    except LayerLensError as exc:
        print(f"layerlens: error: {exc}", file=err)
        return 2
    except OSError as exc:
        print(f"layerlens: error: {exc}", file=err)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
