"""Independent reference computations used to freeze expected values.

Everything here is written the slow, obvious way and shares no code with the
package beyond its data containers.
"""
import math

import numpy as np

from idsense.corpus import Document, LabeledCorpus, Vocabulary


def random_labeled_corpus(rng, n_tokens=200, V=25, K=3, max_doc=40):
    docs, left = [], n_tokens
    while left > 0:
        n = int(min(left, rng.integers(1, max_doc + 1)))
        docs.append(Document(rng.integers(0, V, size=n), rng.integers(0, K, size=n)))
        left -= n
    vocab = Vocabulary(tuple(f"w{i}" for i in range(V)), np.ones(V, dtype=np.int64))
    return LabeledCorpus(docs, vocab, "topic", K)


def brute_word_context(corpus, window):
    """{("word#id", "context"): count} from a plain double loop per document."""
    out = {}
    tok = corpus.vocab.tokens
    for d in corpus.docs:
        n = len(d.words)
        for p in range(n):
            for q in range(n):
                if p != q and abs(p - q) <= window:
                    key = (f"{tok[d.words[p]]}#{d.identities[p]}", tok[d.words[q]])
                    out[key] = out.get(key, 0) + 1
    return out


def brute_word_identity(corpus):
    out = {}
    tok = corpus.vocab.tokens
    for d in corpus.docs:
        for w, i in zip(d.words, d.identities):
            key = (f"{tok[w]}#{i}", int(i))
            out[key] = out.get(key, 0) + 1
    return out


def direct_edge_loss(w_pos, a, w_negs):
    def logsig(x):
        return -math.log1p(math.exp(-x)) if x >= 0 else x - math.log1p(math.exp(x))
    return -logsig(float(np.dot(w_pos, a))) - sum(logsig(-float(np.dot(w, a))) for w in w_negs)


def brute_ranks(x):
    """Average 1-based ranks by counting smaller and equal elements."""
    x = list(x)
    out = []
    for v in x:
        less = sum(1 for u in x if u < v)
        equal = sum(1 for u in x if u == v)
        out.append(less + (equal + 1) / 2)
    return out


def brute_spearman(xs, ys):
    rx, ry = brute_ranks(xs), brute_ranks(ys)
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def brute_report(pred, gold):
    """(micro_f1, macro_f1, per-class f1 dict, confusion dict)."""
    classes = sorted(set(pred) | set(gold))
    confusion = {}
    for g, p in zip(gold, pred):
        confusion[(g, p)] = confusion.get((g, p), 0) + 1
    f1s = {}
    TP = FP = FN = 0
    for c in classes:
        tp = sum(1 for g, p in zip(gold, pred) if g == c and p == c)
        fp = sum(1 for g, p in zip(gold, pred) if g != c and p == c)
        fn = sum(1 for g, p in zip(gold, pred) if g == c and p != c)
        TP, FP, FN = TP + tp, FP + fp, FN + fn
        f1s[c] = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
    micro = 2 * TP / (2 * TP + FP + FN)
    macro = sum(f1s.values()) / len(f1s)
    return micro, macro, f1s, confusion


def direct_gibbs_conditional(n_wk, n_dk, n_k, w, d, z_old, alpha, beta):
    V = n_wk.shape[0]
    K = n_k.shape[0]
    p = []
    for k in range(K):
        own = 1 if k == z_old else 0
        p.append((n_wk[w][k] - own + beta) / (n_k[k] - own + V * beta) * (n_dk[d][k] - own + alpha))
    s = sum(p)
    return [x / s for x in p]
