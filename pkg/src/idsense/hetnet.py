"""Word-context and word-identity bipartite networks plus alias samplers.

Sense nodes are observed ``(word, identity)`` pairs. Both networks share one
:class:`SenseRegistry` as their source side; the word-context network targets
identity-free vocabulary words and the word-identity network targets identity
nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _rng
from ._jit import njit
from .corpus import LabeledCorpus, Vocabulary


class NetworkFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SenseRegistry:
    """Dense rows for observed (word, identity) pairs, sorted by word then identity."""

    words: np.ndarray
    identities: np.ndarray
    num_words: int
    num_identities: int

    def __post_init__(self):
        offsets = np.zeros(self.num_words + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.words, minlength=self.num_words), out=offsets[1:])
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_keys", self.words * self.num_identities + self.identities)

    @classmethod
    def from_tokens(cls, words, identities, num_words, num_identities):
        keys = np.unique(np.asarray(words, np.int64) * num_identities + np.asarray(identities, np.int64))
        return cls(keys // num_identities, keys % num_identities, num_words, num_identities)

    def __len__(self):
        return len(self.words)

    def lookup(self, token_words, token_identities):
        """Sense row of every token, ``-1`` for pairs without a row."""
        w = np.asarray(token_words, np.int64)
        i = np.asarray(token_identities, np.int64)
        valid = (w >= 0) & (w < self.num_words) & (i >= 0) & (i < self.num_identities)
        keys = np.where(valid, w * self.num_identities + i, -1)
        if len(self._keys) == 0:
            return np.full(len(keys), -1, dtype=np.int64)
        rows = np.minimum(np.searchsorted(self._keys, keys), len(self._keys) - 1)
        return np.where(valid & (self._keys[rows] == keys), rows, -1)

    def rows_of(self, token_words, token_identities):
        """Sense row of every token; raises KeyError for unobserved pairs."""
        rows = self.lookup(token_words, token_identities)
        if np.any(rows < 0):
            raise KeyError("token carries a (word, identity) pair without a sense row")
        return rows

    def row(self, word, identity):
        return int(self.rows_of([word], [identity])[0])

    def senses_of(self, word):
        """Rows of every sense of ``word`` (empty when the word never was a center)."""
        if word < 0 or word >= self.num_words:
            return np.zeros(0, dtype=np.int64)
        return np.arange(self._offsets[word], self._offsets[word + 1])

    def names(self, vocab: Vocabulary):
        toks = vocab.tokens
        return [f"{toks[w]}#{i}" for w, i in zip(self.words.tolist(), self.identities.tolist())]

    def parse(self, name: str, vocab: Vocabulary):
        word, sep, ident = name.rpartition("#")
        if not sep or word not in vocab or not ident.isdigit():
            raise KeyError(f"unknown sense {name!r}")
        rows = self.rows_of([vocab.id(word)], [int(ident)])
        return int(rows[0])


@dataclass(frozen=True, eq=False)
class BipartiteNetwork:
    source: np.ndarray
    target: np.ndarray
    weight: np.ndarray
    n_source: int
    n_target: int
    source_kind: str = "sense"
    target_kind: str = "context"

    def __post_init__(self):
        if not (len(self.source) == len(self.target) == len(self.weight)):
            raise ValueError("edge arrays differ in length")
        if len(self.weight) and self.weight.min() <= 0:
            raise ValueError("edge weights must be positive")

    def __len__(self):
        return len(self.weight)

    @property
    def source_degrees(self):
        return np.bincount(self.source, weights=self.weight, minlength=self.n_source)

    @property
    def target_degrees(self):
        return np.bincount(self.target, weights=self.weight, minlength=self.n_target)

    @property
    def total_weight(self):
        return float(self.weight.sum())

    def edge_dict(self):
        return {(int(s), int(t)): float(w) for s, t, w in zip(self.source, self.target, self.weight)}


def _require_identities(corpus: LabeledCorpus):
    if not corpus.is_identity_labeled:
        raise ValueError("corpus is not identity-labeled; run a labeler first")


def sense_registry(corpus: LabeledCorpus) -> SenseRegistry:
    _require_identities(corpus)
    words, ids, _ = corpus.flat()
    return SenseRegistry.from_tokens(words, ids, len(corpus.vocab), corpus.num_identities)


def _aggregate(src, dst, n_dst):
    keys, counts = np.unique(src * n_dst + dst, return_counts=True)
    return keys // n_dst, keys % n_dst, counts.astype(np.float64)


def window_pairs(offsets, window):
    """Position pairs ``(p, q)``, ``0 < |p - q| <= window``, inside each document."""
    n = int(offsets[-1])
    doc_of = np.repeat(np.arange(len(offsets) - 1), np.diff(offsets))
    left, right = [], []
    for o in range(1, window + 1):
        if o >= n:
            break
        p = np.arange(n - o)
        same = doc_of[p] == doc_of[p + o]
        p = p[same]
        left.append(p)
        right.append(p + o)
    if not left:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    a = np.concatenate(left)
    b = np.concatenate(right)
    return np.concatenate([a, b]), np.concatenate([b, a])


def build_word_context_network(corpus: LabeledCorpus, window: int = 5, registry=None) -> BipartiteNetwork:
    """Edges from each token's sense to every word within ``window`` positions.

    Windows stop at document boundaries; repeated pairs aggregate into weights.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    _require_identities(corpus)
    registry = registry or sense_registry(corpus)
    words, ids, offsets = corpus.flat()
    rows = registry.rows_of(words, ids)
    p, q = window_pairs(offsets, window)
    src, dst, w = _aggregate(rows[p], words[q], len(corpus.vocab))
    return BipartiteNetwork(src, dst, w, len(registry), len(corpus.vocab), "sense", "context")


def build_word_identity_network(corpus: LabeledCorpus, registry=None) -> BipartiteNetwork:
    """Edge from each sense to its identity, weighted by the sense's token count."""
    _require_identities(corpus)
    registry = registry or sense_registry(corpus)
    words, ids, _ = corpus.flat()
    counts = np.bincount(registry.rows_of(words, ids), minlength=len(registry)).astype(np.float64)
    src = np.arange(len(registry))
    return BipartiteNetwork(src, registry.identities.copy(), counts, len(registry), corpus.num_identities,
                            "sense", "identity")


@dataclass(frozen=True, eq=False)
class AliasTable:
    prob: np.ndarray
    alias: np.ndarray

    @property
    def n(self):
        return len(self.prob)

    def probabilities(self):
        """Outcome distribution implied by the table (slot mass plus aliased mass)."""
        p = self.prob / self.n
        return p + np.bincount(self.alias, weights=(1.0 - self.prob) / self.n, minlength=self.n)

    def sample(self, rng: np.random.Generator, size=None):
        slot = rng.integers(0, self.n, size=size)
        coin = rng.random(size=size)
        return np.where(coin < self.prob[slot], slot, self.alias[slot])


@njit
def _vose(scaled):
    n = scaled.shape[0]
    prob = np.ones(n)
    alias = np.arange(n)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    # leftovers are 1 up to rounding
    return prob, alias


def build_alias_table(weights) -> AliasTable:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError("weights must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("at least one weight must be positive")
    prob, alias = _vose(w * (len(w) / total))
    return AliasTable(prob, alias)


def build_noise_table(sense_freq, power=0.75) -> AliasTable:
    """Negative-sampling table over sense rows with mass ``freq ** power``."""
    f = np.asarray(sense_freq, dtype=np.float64)
    if len(f) == 0:
        raise ValueError("empty sense set")
    return build_alias_table(f**power)


def sample_edge(table: AliasTable, rng) -> int:
    """One O(1) draw; ``rng`` is a numpy Generator or an ``_rng`` state array."""
    if isinstance(rng, np.ndarray):
        return int(_rng.alias_draw(table.prob, table.alias, rng, 0))
    slot = int(rng.integers(0, table.n))
    return slot if rng.random() < table.prob[slot] else int(table.alias[slot])


@dataclass(frozen=True, eq=False)
class HeterogeneousNetwork:
    vocab: Vocabulary
    senses: SenseRegistry
    word_context: BipartiteNetwork
    word_identity: BipartiteNetwork
    identity_kind: str = "none"

    @property
    def num_identities(self):
        return self.senses.num_identities

    @property
    def sense_freq(self):
        return self.word_identity.source_degrees


def build_heterogeneous_network(corpus: LabeledCorpus, window: int = 5) -> HeterogeneousNetwork:
    registry = sense_registry(corpus)
    return HeterogeneousNetwork(
        corpus.vocab,
        registry,
        build_word_context_network(corpus, window, registry),
        build_word_identity_network(corpus, registry),
        corpus.identity_kind,
    )


def _fmt_weight(w):
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def save_network(net: BipartiteNetwork, path, source_names, target_names):
    with open(path, "w", encoding="utf-8") as fh:
        for s, t, w in zip(net.source.tolist(), net.target.tolist(), net.weight.tolist()):
            fh.write(f"{source_names[s]}\t{target_names[t]}\t{_fmt_weight(w)}\n")


def load_network(path, source_index, target_index, n_source, n_target, source_kind="sense", target_kind="context"):
    src, dst, wts = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise NetworkFormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
            try:
                src.append(source_index[parts[0]])
                dst.append(target_index[parts[1]])
                wts.append(float(parts[2]))
            except KeyError as exc:
                raise NetworkFormatError(f"{path}:{lineno}: unknown node {exc}") from None
            except ValueError:
                raise NetworkFormatError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
    return BipartiteNetwork(np.array(src, np.int64), np.array(dst, np.int64), np.array(wts, np.float64),
                            n_source, n_target, source_kind, target_kind)


def save_heterogeneous_network(hn: HeterogeneousNetwork, directory):
    """Write ``vocab.tsv``, ``word_context.tsv``, ``word_identity.tsv`` and ``meta.txt``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "vocab.tsv", "w", encoding="utf-8") as fh:
        for tok, f in zip(hn.vocab.tokens, hn.vocab.freq.tolist()):
            fh.write(f"{tok}\t{f}\n")
    with open(d / "meta.txt", "w", encoding="utf-8") as fh:
        fh.write(f"identity_kind={hn.identity_kind}\nnum_identities={hn.num_identities}\n")
    names = hn.senses.names(hn.vocab)
    save_network(hn.word_context, d / "word_context.tsv", names, hn.vocab.tokens)
    save_network(hn.word_identity, d / "word_identity.tsv", names, [str(i) for i in range(hn.num_identities)])


def read_vocab_tsv(path) -> Vocabulary:
    toks, freq = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or not parts[1].isdigit():
                raise NetworkFormatError(f"{path}:{lineno}: expected 'token<TAB>count'")
            toks.append(parts[0])
            freq.append(int(parts[1]))
    if not toks:
        raise NetworkFormatError(f"{path}: empty vocabulary")
    return Vocabulary(tuple(toks), np.array(freq, np.int64))


def load_heterogeneous_network(directory) -> HeterogeneousNetwork:
    d = Path(directory)
    for name in ("vocab.tsv", "meta.txt", "word_context.tsv", "word_identity.tsv"):
        if not (d / name).exists():
            raise FileNotFoundError(f"network file not found: {d / name}")
    vocab = read_vocab_tsv(d / "vocab.tsv")
    meta = dict(line.strip().split("=", 1) for line in open(d / "meta.txt", encoding="utf-8") if "=" in line)
    num_ids = int(meta["num_identities"])
    sense_words, sense_ids = [], []
    with open(d / "word_identity.tsv", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            name = line.split("\t", 1)[0]
            word, sep, ident = name.rpartition("#")
            if not sep or word not in vocab or not ident.isdigit():
                raise NetworkFormatError(f"{d / 'word_identity.tsv'}:{lineno}: bad sense node {name!r}")
            sense_words.append(vocab.id(word))
            sense_ids.append(int(ident))
    registry = SenseRegistry.from_tokens(sense_words, sense_ids, len(vocab), num_ids)
    if len(registry) != len(sense_words):
        raise NetworkFormatError(f"{d / 'word_identity.tsv'}: duplicate sense nodes")
    sense_index = {name: i for i, name in enumerate(registry.names(vocab))}
    wc = load_network(d / "word_context.tsv", sense_index, vocab.index, len(registry), len(vocab),
                      "sense", "context")
    wi = load_network(d / "word_identity.tsv", sense_index, {str(i): i for i in range(num_ids)},
                      len(registry), num_ids, "sense", "identity")
    return HeterogeneousNetwork(vocab, registry, wc, wi, meta.get("identity_kind", "none"))


__all__ = [
    "AliasTable",
    "BipartiteNetwork",
    "HeterogeneousNetwork",
    "NetworkFormatError",
    "SenseRegistry",
    "build_alias_table",
    "build_heterogeneous_network",
    "build_noise_table",
    "build_word_context_network",
    "build_word_identity_network",
    "load_heterogeneous_network",
    "load_network",
    "sample_edge",
    "save_heterogeneous_network",
    "save_network",
    "sense_registry",
    "window_pairs",
]
