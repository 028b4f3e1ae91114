"""Planted-identity corpora with known ground truth.

Each identity owns a disjoint topical vocabulary; a small set of ambiguous
words is shared by all identities. A document belongs to one identity and mixes
its topical words with ambiguous words, so every ambiguous token's true
identity is its document's identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PlantedCorpus:
    texts: list
    labels: np.ndarray
    topical: list
    ambiguous: list

    def identity_of_word(self):
        """Map topical word -> identity (ambiguous words are absent)."""
        return {w: k for k, words in enumerate(self.topical) for w in words}


def planted_corpus(n_docs=2000, n_identities=2, n_topical=200, n_ambiguous=20, doc_len=40,
                   ambiguous_rate=None, seed=0) -> PlantedCorpus:
    """Draw ``n_docs`` documents of ``doc_len`` tokens.

    By default tokens are uniform over the document identity's topical words
    plus the ambiguous words, so every word has the same expected frequency.
    """
    if ambiguous_rate is None:
        ambiguous_rate = n_ambiguous / (n_ambiguous + n_topical)
    rng = np.random.default_rng(seed)
    topical = [[f"t{k}w{j}" for j in range(n_topical)] for k in range(n_identities)]
    ambiguous = [f"amb{j}" for j in range(n_ambiguous)]
    labels = rng.integers(0, n_identities, size=n_docs)
    texts = []
    for k in labels:
        is_amb = rng.random(doc_len) < ambiguous_rate
        topic_ids = rng.integers(0, n_topical, size=doc_len)
        amb_ids = rng.integers(0, n_ambiguous, size=doc_len)
        toks = [ambiguous[a] if m else topical[k][t] for m, t, a in zip(is_amb, topic_ids, amb_ids)]
        texts.append(" ".join(toks))
    return PlantedCorpus(texts, labels, topical, ambiguous)
