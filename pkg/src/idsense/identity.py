"""Per-token identity assignment.

Topics come from collapsed Gibbs sampling of LDA, sentiment from a smoothed
probability-ratio lexicon plus the document polarity, categories straight from
document labels. Tokens of unseen documents get identities from a trained
model by scoring each sense against the mean context vector of the rest of the
document.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _rng
from ._jit import USE_NUMBA, njit
from .corpus import Document, LabeledCorpus

NEGATIVE, POSITIVE, NEUTRAL = 0, 1, 2


@dataclass
class TopicModelState:
    words: np.ndarray
    doc_offsets: np.ndarray
    assignments: np.ndarray
    n_wk: np.ndarray
    n_dk: np.ndarray
    n_k: np.ndarray
    alpha: float
    beta: float

    @property
    def K(self):
        return self.n_k.shape[0]

    @property
    def num_words(self):
        return self.n_wk.shape[0]

    def doc_topic_proportions(self):
        """Smoothed per-document topic mixture ``(n_dk + alpha) / (N_d + K alpha)``."""
        num = self.n_dk + self.alpha
        return num / num.sum(axis=1, keepdims=True)


if USE_NUMBA:

    @njit
    def _gibbs_sweep(words, doc_of, z, n_wk, n_dk, n_k, alpha, beta, vbeta, update_global, state, cum):
        K = n_k.shape[0]
        for i in range(words.shape[0]):
            w = words[i]
            d = doc_of[i]
            k = z[i]
            n_dk[d, k] -= 1
            if update_global:
                n_wk[w, k] -= 1
                n_k[k] -= 1
            total = 0.0
            for j in range(K):
                total += (n_wk[w, j] + beta) / (n_k[j] + vbeta) * (n_dk[d, j] + alpha)
                cum[j] = total
            u = _rng.next_uniform(state, 0) * total
            k = 0
            while k < K - 1 and cum[k] <= u:
                k += 1
            z[i] = k
            n_dk[d, k] += 1
            if update_global:
                n_wk[w, k] += 1
                n_k[k] += 1

else:

    def _gibbs_sweep(words, doc_of, z, n_wk, n_dk, n_k, alpha, beta, vbeta, update_global, state, cum):
        K = n_k.shape[0]
        for i in range(words.shape[0]):
            w = words[i]
            d = doc_of[i]
            k = z[i]
            n_dk[d, k] -= 1
            if update_global:
                n_wk[w, k] -= 1
                n_k[k] -= 1
            cum[:] = np.cumsum((n_wk[w] + beta) / (n_k + vbeta) * (n_dk[d] + alpha))
            u = _rng.next_uniform(state, 0) * cum[K - 1]
            k = min(int(np.searchsorted(cum, u, side="right")), K - 1)
            z[i] = k
            n_dk[d, k] += 1
            if update_global:
                n_wk[w, k] += 1
                n_k[k] += 1


def _doc_of(offsets):
    return np.repeat(np.arange(len(offsets) - 1), np.diff(offsets)).astype(np.int64)


def init_topic_state(corpus: LabeledCorpus, K, alpha=None, beta=0.01, seed=1) -> TopicModelState:
    if K < 1:
        raise ValueError(f"number of topics must be >= 1, got {K}")
    if len(corpus) == 0 or corpus.num_tokens == 0:
        raise ValueError("cannot fit topics on an empty corpus")
    alpha = 50.0 / K if alpha is None else float(alpha)
    words, _, offsets = corpus.flat()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    z = rng.integers(0, K, size=len(words)).astype(np.int64)
    doc_of = _doc_of(offsets)
    n_wk = np.zeros((len(corpus.vocab), K), dtype=np.int64)
    np.add.at(n_wk, (words, z), 1)
    n_dk = np.zeros((len(corpus), K), dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    n_k = np.bincount(z, minlength=K).astype(np.int64)
    return TopicModelState(words, offsets, z, n_wk, n_dk, n_k, alpha, float(beta))


def run_gibbs(state: TopicModelState, iters, seed=1, callback: Optional[Callable] = None):
    """Run ``iters`` full sweeps in place; ``callback(state, sweep)`` after each."""
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    rng_state = _rng.make_state(int(np.random.SeedSequence([int(seed), 3]).generate_state(1)[0]))
    doc_of = _doc_of(state.doc_offsets)
    cum = np.empty(state.K)
    vbeta = state.num_words * state.beta
    for sweep in range(iters):
        _gibbs_sweep(state.words, doc_of, state.assignments, state.n_wk, state.n_dk, state.n_k,
                     state.alpha, state.beta, vbeta, True, rng_state, cum)
        if callback is not None:
            callback(state, sweep)
    return state


def gibbs_conditional(state: TopicModelState, doc, position):
    """Topic distribution of one token given every other assignment."""
    i = int(state.doc_offsets[doc]) + int(position)
    if not (0 <= position < state.doc_offsets[doc + 1] - state.doc_offsets[doc]):
        raise IndexError(f"position {position} outside document {doc}")
    w, k = state.words[i], state.assignments[i]
    n_wk = state.n_wk[w].astype(np.float64)
    n_dk = state.n_dk[doc].astype(np.float64)
    n_k = state.n_k.astype(np.float64)
    n_wk[k] -= 1
    n_dk[k] -= 1
    n_k[k] -= 1
    p = (n_wk + state.beta) / (n_k + state.num_words * state.beta) * (n_dk + state.alpha)
    return p / p.sum()


def label_topics(corpus: LabeledCorpus, K, alpha=None, beta=0.01, iters=200, seed=1, callback=None,
                 return_state=False):
    """Assign every token the topic it holds after the last Gibbs sweep."""
    state = init_topic_state(corpus, K, alpha, beta, seed)
    run_gibbs(state, iters, seed, callback)
    out = corpus.with_identities(np.split(state.assignments.copy(), state.doc_offsets[1:-1]), "topic", K)
    return (out, state) if return_state else out


def infer_topics(state: TopicModelState, corpus: LabeledCorpus, iters=50, seed=1):
    """Fold unseen documents into a fitted topic model; topic-word counts stay fixed.

    Returns the ``(n_docs, K)`` smoothed topic mixtures.
    """
    words, _, offsets = corpus.flat()
    K = state.K
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 4]))
    z = rng.integers(0, K, size=len(words)).astype(np.int64)
    doc_of = _doc_of(offsets)
    n_dk = np.zeros((len(corpus), K), dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    rng_state = _rng.make_state(int(np.random.SeedSequence([int(seed), 5]).generate_state(1)[0]))
    cum = np.empty(K)
    vbeta = state.num_words * state.beta
    for _ in range(iters):
        _gibbs_sweep(words, doc_of, z, state.n_wk, n_dk, state.n_k, state.alpha, state.beta, vbeta,
                     False, rng_state, cum)
    num = n_dk + state.alpha
    return num / num.sum(axis=1, keepdims=True)


@dataclass
class SentimentLexicon:
    selected: dict
    threshold: float

    def __contains__(self, word):
        return word in self.selected

    def __len__(self):
        return len(self.selected)

    def polarity(self, word):
        return self.selected[word]


def _require_doc_labels(corpus):
    if any(d.label is None for d in corpus.docs):
        raise ValueError("every document needs a class label")


def class_word_counts(corpus: LabeledCorpus):
    """``(counts[2, V], totals[2])`` for negative (label 0) and positive (label 1) documents."""
    _require_doc_labels(corpus)
    labels = {d.label for d in corpus.docs}
    if not labels <= {NEGATIVE, POSITIVE}:
        raise ValueError(f"sentiment needs binary labels {{0, 1}}, got {sorted(labels)}")
    if len(labels) < 2:
        raise ValueError("sentiment selection needs both positive and negative documents")
    V = len(corpus.vocab)
    counts = np.zeros((2, V), dtype=np.int64)
    for d in corpus.docs:
        np.add.at(counts[d.label], d.words, 1)
    return counts, counts.sum(axis=1)


def select_sentiment_words(corpus: LabeledCorpus, threshold=10.0, smoothing=1.0) -> SentimentLexicon:
    """Select words whose smoothed class-probability ratio reaches ``threshold`` either way.

    ``p(w|c) = (count(w, c) + smoothing) / (N_c + smoothing * |V|)``.
    """
    if not smoothing > 0:
        raise ValueError("smoothing must be > 0")
    counts, totals = class_word_counts(corpus)
    V = len(corpus.vocab)
    lam = float(smoothing)
    # cross-multiplied so the threshold comparison is exact for integer inputs
    pos_num = (counts[POSITIVE] + lam) * (totals[NEGATIVE] + lam * V)
    neg_num = (counts[NEGATIVE] + lam) * (totals[POSITIVE] + lam * V)
    selected = {}
    for w in np.flatnonzero(pos_num >= threshold * neg_num):
        selected[int(w)] = POSITIVE
    for w in np.flatnonzero(neg_num >= threshold * pos_num):
        if int(w) in selected:  # only possible for threshold <= 1
            del selected[int(w)]
        else:
            selected[int(w)] = NEGATIVE
    return SentimentLexicon(selected, float(threshold))


def label_sentiment(corpus: LabeledCorpus, lexicon: SentimentLexicon) -> LabeledCorpus:
    """Lexicon words take the document's polarity; everything else is neutral."""
    _require_doc_labels(corpus)
    mask = np.zeros(len(corpus.vocab), dtype=bool)
    mask[list(lexicon.selected)] = True
    ids = [np.where(mask[d.words], d.label, NEUTRAL).astype(np.int64) for d in corpus.docs]
    return corpus.with_identities(ids, "sentiment", 3)


def label_category(corpus: LabeledCorpus) -> LabeledCorpus:
    _require_doc_labels(corpus)
    n = len(corpus.label_names) or 1 + max(d.label for d in corpus.docs)
    ids = [np.full(len(d), d.label, dtype=np.int64) for d in corpus.docs]
    return corpus.with_identities(ids, "category", n)


def label_none(corpus: LabeledCorpus) -> LabeledCorpus:
    """Single shared identity: the plain word-embedding baseline."""
    return corpus.with_identities([np.zeros(len(d), dtype=np.int64) for d in corpus.docs], "none", 1)


def _most_frequent_sense(model, rows):
    if model.sense_freq is None:
        return int(rows[0])
    f = model.sense_freq[rows]
    return int(rows[int(np.argmax(f))])


def infer_identity(model, doc_words, target_index) -> int:
    """Identity of the token at ``target_index`` given the rest of the document.

    Picks the sense with the largest dot product against the mean context
    vector of every other position; ties go to the lowest identity id. Falls
    back to the most frequent sense when no other position exists.
    """
    doc_words = np.asarray(doc_words, dtype=np.int64)
    w = int(doc_words[target_index])
    rows = model.senses.senses_of(w)
    if len(rows) == 0:
        raise KeyError(f"word id {w} has no sense in the model")
    if len(rows) == 1:
        return int(model.senses.identities[rows[0]])
    others = np.delete(doc_words, target_index)
    if len(others) == 0:
        return int(model.senses.identities[_most_frequent_sense(model, rows)])
    ctx = model.context_vectors[others].mean(axis=0)
    scores = model.sense_vectors[rows] @ ctx
    return int(model.senses.identities[rows[int(np.argmax(scores))]])


def infer_identities(model, doc_words) -> np.ndarray:
    """:func:`infer_identity` for every position; ``-1`` where the word has no sense."""
    doc_words = np.asarray(doc_words, dtype=np.int64)
    n = len(doc_words)
    out = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return out
    senses = model.senses
    ctx_sum = model.context_vectors[doc_words].sum(axis=0)
    for p in range(n):
        rows = senses.senses_of(int(doc_words[p]))
        if len(rows) == 0:
            continue
        if len(rows) == 1:
            out[p] = senses.identities[rows[0]]
        elif n == 1:
            out[p] = senses.identities[_most_frequent_sense(model, rows)]
        else:
            ctx = (ctx_sum - model.context_vectors[doc_words[p]]) / (n - 1)
            out[p] = senses.identities[rows[int(np.argmax(model.sense_vectors[rows] @ ctx))]]
    return out


def infer_corpus_identities(model, corpus: LabeledCorpus, kind=None) -> LabeledCorpus:
    """Label a held-out corpus token by token; tokens without senses are dropped."""
    docs, dropped = [], 0
    for d in corpus.docs:
        ids = infer_identities(model, d.words)
        keep = ids >= 0
        dropped += int((~keep).sum())
        docs.append(Document(d.words[keep], ids[keep], d.label))
    return LabeledCorpus(docs, corpus.vocab, kind or "none", model.senses.num_identities,
                         corpus.label_names, corpus.n_oov + dropped)
