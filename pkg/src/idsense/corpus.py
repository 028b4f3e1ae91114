"""Tokenization, vocabulary and (identity-labeled) document storage."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

IDENTITY_KINDS = ("topic", "sentiment", "category", "none")

_TOKEN_RE = re.compile(r"[^\W_]+")


class CorpusFormatError(ValueError):
    """A corpus file violates its line format; carries the 1-based line number."""

    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = str(path)
        self.lineno = lineno


class EmptyVocabularyError(ValueError):
    pass


def tokenize(text: str, stopwords: Iterable[str] = ()) -> list[str]:
    """Lowercase ``text``, split on anything that is not a letter or digit and drop stopwords."""
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [tok for tok in _TOKEN_RE.findall(text.lower()) if tok not in stop]


def read_stopwords(path) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        return {line.strip().lower() for line in fh if line.strip()}


@dataclass(frozen=True, eq=False)
class Vocabulary:
    tokens: tuple[str, ...]
    freq: np.ndarray
    index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.index is None:
            object.__setattr__(self, "index", {tok: i for i, tok in enumerate(self.tokens)})
        self.freq.setflags(write=False)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def id(self, token: str) -> int:
        return self.index[token]

    def encode(self, tokens: Iterable[str]) -> tuple[np.ndarray, int]:
        """Map tokens to ids, dropping unknown ones. Returns ``(ids, n_dropped)``."""
        ids = [self.index.get(tok, -1) for tok in tokens]
        kept = [i for i in ids if i >= 0]
        return np.asarray(kept, dtype=np.int64), len(ids) - len(kept)


def build_vocabulary(docs: Iterable[Sequence[str]], min_count: int = 5) -> Vocabulary:
    """Count tokens and keep those seen at least ``min_count`` times.

    Ids are assigned by descending frequency; ties keep first-appearance order.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts = Counter()
    for doc in docs:
        counts.update(doc)
    # Counter preserves insertion (first appearance) order; sorted() is stable
    kept = [(tok, c) for tok, c in counts.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(f"no token occurs at least {min_count} times")
    kept.sort(key=lambda tc: -tc[1])
    return Vocabulary(
        tokens=tuple(tok for tok, _ in kept),
        freq=np.array([c for _, c in kept], dtype=np.int64),
    )


@dataclass
class Document:
    words: np.ndarray
    identities: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    label: Optional[int] = None

    def __post_init__(self):
        self.words = np.asarray(self.words, dtype=np.int64)
        ids = () if self.identities is None else self.identities
        self.identities = np.asarray(ids, dtype=np.int64)
        if len(self.identities) and len(self.identities) != len(self.words):
            raise ValueError("identities must be empty or match words in length")

    def __len__(self):
        return len(self.words)

    @property
    def is_labeled(self):
        return len(self.identities) == len(self.words)


@dataclass
class LabeledCorpus:
    docs: list
    vocab: Vocabulary
    identity_kind: Optional[str] = None
    num_identities: int = 0
    label_names: tuple = ()
    n_oov: int = 0

    def __len__(self):
        return len(self.docs)

    @property
    def is_identity_labeled(self):
        return self.identity_kind is not None and all(d.is_labeled for d in self.docs)

    @property
    def labels(self):
        return np.array([-1 if d.label is None else d.label for d in self.docs], dtype=np.int64)

    @property
    def num_tokens(self):
        return sum(len(d) for d in self.docs)

    def with_identities(self, identities, kind, num_identities):
        """Copy of this corpus carrying per-document identity arrays."""
        if kind not in IDENTITY_KINDS:
            raise ValueError(f"unknown identity kind {kind!r}")
        docs = [Document(d.words, ids, d.label) for d, ids in zip(self.docs, identities)]
        for d in docs:
            if len(d.identities) and (d.identities.min() < 0 or d.identities.max() >= num_identities):
                raise ValueError("identity id out of range")
        return LabeledCorpus(docs, self.vocab, kind, num_identities, self.label_names, self.n_oov)

    def flat(self):
        """Concatenated ``(words, identities, doc_offsets)`` arrays for the kernels."""
        offsets = np.zeros(len(self.docs) + 1, dtype=np.int64)
        np.cumsum([len(d) for d in self.docs], out=offsets[1:])
        words = np.concatenate([d.words for d in self.docs]) if self.docs else np.zeros(0, np.int64)
        if all(d.is_labeled for d in self.docs) and self.docs:
            ids = np.concatenate([d.identities for d in self.docs])
        else:
            ids = np.zeros(0, dtype=np.int64)
        return words.astype(np.int64), ids.astype(np.int64), offsets


def _read_lines(path, labeled):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if labeled:
                if "\t" not in line:
                    raise CorpusFormatError(path, lineno, "expected 'label<TAB>text'")
                label, text = line.split("\t", 1)
                rows.append((lineno, label.strip(), text))
            else:
                rows.append((lineno, None, line))
    return rows


def load_corpus(path, labeled=False, min_count=5, stopwords=(), vocab=None, label_names=None):
    """Read a raw corpus file, one document per non-empty line.

    With ``vocab`` given (e.g. a training vocabulary applied to a test split),
    unknown tokens are dropped and counted in ``n_oov``. With ``label_names``
    given, labels map through that list instead of the sorted set of labels
    seen in the file.
    """
    rows = _read_lines(path, labeled)
    stop = set(stopwords)
    tokenized = [tokenize(text, stop) for _, _, text in rows]
    if vocab is None:
        vocab = build_vocabulary(tokenized, min_count)
    if labeled:
        if label_names is None:
            label_names = tuple(sorted({lab for _, lab, _ in rows}))
        label_ids = {name: i for i, name in enumerate(label_names)}
        for lineno, lab, _ in rows:
            if lab not in label_ids:
                raise CorpusFormatError(path, lineno, f"unknown label {lab!r}")
    else:
        label_names, label_ids = (), {}
    docs, n_oov = [], 0
    for (_, lab, _), toks in zip(rows, tokenized):
        ids, dropped = vocab.encode(toks)
        n_oov += dropped
        docs.append(Document(ids, label=label_ids[lab] if labeled else None))
    return LabeledCorpus(docs, vocab, label_names=tuple(label_names), n_oov=n_oov)


def corpus_from_texts(texts, labels=None, min_count=5, stopwords=(), vocab=None, label_names=None):
    """In-memory counterpart of :func:`load_corpus`; ``labels`` are raw label values."""
    stop = set(stopwords)
    tokenized = [tokenize(t, stop) for t in texts]
    if vocab is None:
        vocab = build_vocabulary(tokenized, min_count)
    label_ids = {}
    if labels is not None:
        if label_names is None:
            label_names = tuple(sorted({str(lab) for lab in labels}))
        label_ids = {name: i for i, name in enumerate(label_names)}
    docs, n_oov = [], 0
    for j, toks in enumerate(tokenized):
        ids, dropped = vocab.encode(toks)
        n_oov += dropped
        lab = label_ids[str(labels[j])] if labels is not None else None
        docs.append(Document(ids, label=lab))
    return LabeledCorpus(docs, vocab, label_names=tuple(label_names or ()), n_oov=n_oov)


# Labeled-corpus files: an optional "#idsense" metadata line, then one document
# per line rendered as "[label<TAB>]word#identity word#identity ...".
_HEADER = "#idsense"


def save_labeled_corpus(corpus: LabeledCorpus, path):
    if not corpus.is_identity_labeled:
        raise ValueError("corpus has no identity assignments to save")
    labeled = any(d.label is not None for d in corpus.docs)
    toks = corpus.vocab.tokens
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"{_HEADER} kind={corpus.identity_kind} identities={corpus.num_identities}"
            f" labels={','.join(corpus.label_names)}\n"
        )
        for d in corpus.docs:
            body = " ".join(f"{toks[w]}#{i}" for w, i in zip(d.words.tolist(), d.identities.tolist()))
            if labeled:
                lab = corpus.label_names[d.label] if d.label is not None else ""
                fh.write(f"{lab}\t{body}\n")
            else:
                fh.write(body + "\n")


def load_labeled_corpus(path, vocab=None):
    """Read a file written by :func:`save_labeled_corpus`.

    Without ``vocab`` the vocabulary is rebuilt from the file (min count 1), which
    reproduces the original ids because retained tokens keep their frequency
    order and first-appearance ties.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"labeled corpus not found: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    kind, num_ids, label_names, start = None, None, None, 0
    if lines and lines[0].startswith(_HEADER):
        meta = dict(kv.split("=", 1) for kv in lines[0].split()[1:])
        kind = meta.get("kind")
        num_ids = int(meta["identities"]) if "identities" in meta else None
        label_names = tuple(x for x in meta.get("labels", "").split(",") if x)
        start = 1
    parsed = []
    for lineno, line in enumerate(lines[start:], start + 1):
        lab, text = (line.split("\t", 1) if "\t" in line else (None, line))
        words, ids = [], []
        for tok in text.split():
            w, sep, i = tok.rpartition("#")
            if not sep or not w or not i.isdigit():
                raise CorpusFormatError(path, lineno, f"bad token {tok!r}, expected word#identity")
            words.append(w)
            ids.append(int(i))
        parsed.append((lab, words, ids))
    if vocab is None:
        vocab = build_vocabulary([p[1] for p in parsed], 1)
    if label_names is None or (not label_names and any(p[0] for p in parsed)):
        label_names = tuple(sorted({p[0] for p in parsed if p[0]}))
    label_ids = {name: i for i, name in enumerate(label_names)}
    docs = []
    for lineno, (lab, words, ids) in enumerate(parsed, start + 1):
        if any(w not in vocab for w in words):
            raise CorpusFormatError(path, lineno, "token outside the vocabulary")
        label = label_ids[lab] if lab else None
        docs.append(Document([vocab.id(w) for w in words], ids, label))
    if num_ids is None:
        num_ids = 1 + max((int(d.identities.max()) for d in docs if len(d)), default=0)
    return LabeledCorpus(docs, vocab, kind or "none", num_ids, label_names)
