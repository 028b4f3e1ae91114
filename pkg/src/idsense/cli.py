"""Command-line pipeline: label -> build-net -> train -> infer / nearest / eval.

Stages talk through files, so any stage can be rerun from the previous
stage's output. Errors print one line ``error: <kind>: <message>`` to stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import CorpusFormatError, EmptyVocabularyError, load_corpus, load_labeled_corpus, read_stopwords
from .corpus import save_labeled_corpus
from .evaluation import classify, evaluate_similarity, load_similarity_pairs, nearest_neighbors
from .hetnet import (NetworkFormatError, build_heterogeneous_network, load_heterogeneous_network,
                     save_heterogeneous_network)
from .identity import (infer_corpus_identities, label_category, label_none, label_sentiment, label_topics,
                       select_sentiment_words)
from .modelio import ModelFormatError, load_model, save_model
from .trainer import TrainerConfig, fit

log = logging.getLogger("idsense")

EXIT_USAGE, EXIT_MISSING, EXIT_VALUE, EXIT_FORMAT, EXIT_RUNTIME = 2, 3, 4, 5, 1


class CliError(Exception):
    def __init__(self, kind, message, code):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse reports bad flag values as "argument --flag: ..."
        if message.startswith("argument ") and not message.startswith("argument COMMAND"):
            raise CliError("invalid-value", message, EXIT_VALUE)
        raise CliError("usage", message, EXIT_USAGE)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _samples(text):
    # accepts 1e7 style counts
    v = float(text)
    if v < 1 or v != int(v):
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return int(v)


def _add_corpus_flags(p, labeled_default=False):
    p.add_argument("--input", required=True, help="raw corpus, one document per line")
    p.add_argument("--output", required=True, help="identity-labeled corpus to write")
    if not labeled_default:
        p.add_argument("--labeled", action="store_true", help="input lines are 'label<TAB>text'")
    p.add_argument("--min-count", type=_positive_int, default=5, help="drop rarer tokens")
    p.add_argument("--stopwords", help="stopword file, one token per line")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="idsense", description="Identity-sensitive word embeddings.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("label-topics", help="topic identities via collapsed Gibbs LDA", formatter_class=fmt)
    _add_corpus_flags(p)
    p.add_argument("--topics", type=_positive_int, required=True, help="number of topics K")
    p.add_argument("--alpha", type=_positive_float, default=None, help="document-topic prior (default 50/K)")
    p.add_argument("--beta", type=_positive_float, default=0.01, help="topic-word prior")
    p.add_argument("--iters", type=_positive_int, default=200, help="Gibbs sweeps")
    p.add_argument("--seed", type=int, default=1, help="random seed")

    p = sub.add_parser("label-sentiment", help="sentiment identities from a ratio-selected lexicon",
                       formatter_class=fmt)
    _add_corpus_flags(p, labeled_default=True)
    p.add_argument("--threshold", type=_positive_float, default=10.0, help="probability-ratio cutoff")
    p.add_argument("--smoothing", type=_positive_float, default=1.0,
                   help="additive smoothing of the class word probabilities")

    p = sub.add_parser("label-category", help="category identities from document labels", formatter_class=fmt)
    _add_corpus_flags(p, labeled_default=True)

    p = sub.add_parser("build-net", help="build word-context and word-identity networks", formatter_class=fmt)
    p.add_argument("--input", required=True, help="identity-labeled corpus")
    p.add_argument("--output", required=True, help="network directory to write")
    p.add_argument("--window", type=_positive_int, default=5, help="context half-window")
    p.add_argument("--baseline", action="store_true", help="collapse all identities into one")

    p = sub.add_parser(
        "train", formatter_class=fmt,
        help="embed the heterogeneous network",
        description="Each of the --samples iterations draws one word-context edge and one "
                    "word-identity edge, so 2 x samples edges are consumed in total.")
    p.add_argument("--input", required=True, help="network directory from build-net")
    p.add_argument("--output", required=True, help="model directory to write")
    p.add_argument("--dim", type=_positive_int, default=100, help="embedding dimension")
    p.add_argument("--negatives", type=_nonneg_int, default=5, help="negative samples per edge")
    p.add_argument("--samples", type=_samples, default=10_000_000, help="iterations T (edges drawn: 2T)")
    p.add_argument("--rho0", type=_positive_float, default=0.025, help="initial learning rate")
    p.add_argument("--workers", type=_positive_int, default=1, help="lock-free SGD workers")
    p.add_argument("--seed", type=int, default=1, help="random seed")

    p = sub.add_parser("infer-identity", help="label unseen documents with a trained model", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model directory from train")
    p.add_argument("--input", required=True, help="raw corpus")
    p.add_argument("--output", required=True, help="identity-labeled corpus to write")
    p.add_argument("--labeled", action="store_true", help="input lines are 'label<TAB>text'")
    p.add_argument("--stopwords", help="stopword file, one token per line")

    p = sub.add_parser("nearest", help="nearest senses by cosine", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model directory from train")
    p.add_argument("--query", required=True, action="append", help="sense as word#identity (repeatable)")
    p.add_argument("--k", type=_nonneg_int, default=10, help="neighbors per query")
    p.add_argument("--exclude-same-word", action="store_true", help="skip other senses of the query word")

    p = sub.add_parser("eval-classify", help="document classification with averaged sense vectors",
                       formatter_class=fmt)
    p.add_argument("--model", required=True, help="model directory from train")
    p.add_argument("--train", required=True, help="identity-labeled training corpus (from a label-* step)")
    p.add_argument("--test", required=True, help="raw labeled test corpus 'label<TAB>text'")
    p.add_argument("--l2", type=_positive_float, default=1.0, help="L2 penalty of the logistic regression")
    p.add_argument("--stopwords", help="stopword file, one token per line")
    p.add_argument("--output", help="write the report here instead of stdout")

    p = sub.add_parser("eval-similarity", help="contextual word similarity (Spearman)", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model directory from train")
    p.add_argument("--input", required=True, help="TSV word1, context1, word2, context2, score")
    p.add_argument("--stopwords", help="stopword file, one token per line")
    p.add_argument("--output", help="write the result here instead of stdout")
    return parser


def _stopwords(args):
    return read_stopwords(args.stopwords) if getattr(args, "stopwords", None) else set()


def _emit(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_label_topics(args):
    corpus = load_corpus(args.input, args.labeled, args.min_count, _stopwords(args))
    labeled = label_topics(corpus, args.topics, args.alpha, args.beta, args.iters, args.seed)
    save_labeled_corpus(labeled, args.output)


def cmd_label_sentiment(args):
    corpus = load_corpus(args.input, True, args.min_count, _stopwords(args))
    lexicon = select_sentiment_words(corpus, args.threshold, args.smoothing)
    log.info("selected %d sentiment words", len(lexicon))
    save_labeled_corpus(label_sentiment(corpus, lexicon), args.output)


def cmd_label_category(args):
    corpus = load_corpus(args.input, True, args.min_count, _stopwords(args))
    save_labeled_corpus(label_category(corpus), args.output)


def cmd_build_net(args):
    corpus = load_labeled_corpus(args.input)
    if args.baseline:
        corpus = label_none(corpus)
    hn = build_heterogeneous_network(corpus, args.window)
    save_heterogeneous_network(hn, args.output)
    log.info("%d senses, %d context edges, %d identity edges", len(hn.senses), len(hn.word_context),
             len(hn.word_identity))


def cmd_train(args):
    hn = load_heterogeneous_network(args.input)
    cfg = TrainerConfig(dim=args.dim, negatives=args.negatives, samples=args.samples, rho0=args.rho0,
                        seed=args.seed, workers=args.workers)
    model = fit(hn, cfg)
    save_model(model, args.output)
    log.info("trained in %.1fs", model.stats["seconds"])


def cmd_infer_identity(args):
    model = load_model(args.model)
    corpus = load_corpus(args.input, args.labeled, stopwords=_stopwords(args), vocab=model.vocab)
    save_labeled_corpus(infer_corpus_identities(model, corpus), args.output)


def cmd_nearest(args):
    model = load_model(args.model)
    out = []
    for q in args.query:
        try:
            row = model.senses.parse(q, model.vocab)
        except KeyError:
            raise CliError("invalid-value", f"unknown sense {q!r}", EXIT_VALUE) from None
        for rank, nb in enumerate(nearest_neighbors(model, row, args.k, args.exclude_same_word), 1):
            out.append(f"{q}\t{rank}\t{nb.name}\t{nb.similarity:.6f}\n")
    sys.stdout.write("".join(out))


def cmd_eval_classify(args):
    model = load_model(args.model)
    train = load_labeled_corpus(args.train, vocab=model.vocab)
    test = load_corpus(args.test, True, stopwords=_stopwords(args), vocab=model.vocab,
                       label_names=train.label_names)
    report = classify(model, train, test, args.l2)
    names = dict(enumerate(train.label_names))
    _emit(f"train_docs={len(train)}\ntest_docs={len(test)}\ntest_oov_tokens={test.n_oov}\n"
          + report.to_text(names), args.output)


def cmd_eval_similarity(args):
    model = load_model(args.model)
    res = evaluate_similarity(model, load_similarity_pairs(args.input, _stopwords(args)))
    _emit(f"spearman={res['spearman']:.6f}\npairs={res['pairs']}\nskipped={res['skipped']}\n", args.output)


COMMANDS = {
    "label-topics": cmd_label_topics,
    "label-sentiment": cmd_label_sentiment,
    "label-category": cmd_label_category,
    "build-net": cmd_build_net,
    "train": cmd_train,
    "infer-identity": cmd_infer_identity,
    "nearest": cmd_nearest,
    "eval-classify": cmd_eval_classify,
    "eval-similarity": cmd_eval_similarity,
}


def run(argv=None) -> int:
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        COMMANDS[args.command](args)
        return 0
    except CliError as exc:
        err = exc
    except FileNotFoundError as exc:
        err = CliError("missing-file", str(exc), EXIT_MISSING)
    except (CorpusFormatError, NetworkFormatError, ModelFormatError) as exc:
        err = CliError("format", str(exc), EXIT_FORMAT)
    except (ValueError, EmptyVocabularyError) as exc:
        err = CliError("invalid-value", str(exc), EXIT_VALUE)
    msg = " ".join(str(err).split())
    sys.stderr.write(f"error: {err.kind}: {msg}\n")
    return err.code


def main():
    sys.exit(run())
