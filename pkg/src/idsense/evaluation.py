"""Document features, neighbors, contextual similarity and classification metrics."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .corpus import CorpusFormatError, Document, LabeledCorpus, tokenize
from .identity import infer_identities, infer_identity

log = logging.getLogger(__name__)


def document_embedding(model, doc: Document) -> np.ndarray:
    """Mean sense vector over tokens whose (word, identity) pair has a row; zeros if none."""
    if len(doc) == 0 or not doc.is_labeled:
        return np.zeros(model.dim)
    rows = model.senses.lookup(doc.words, doc.identities)
    rows = rows[rows >= 0]
    if len(rows) == 0:
        log.debug("document has no known senses; using the zero vector")
        return np.zeros(model.dim)
    return model.sense_vectors[rows].mean(axis=0)


def corpus_features(model, corpus: LabeledCorpus, infer=False) -> np.ndarray:
    """Document-embedding matrix; with ``infer`` token identities come from the model."""
    out = np.zeros((len(corpus), model.dim))
    for j, d in enumerate(corpus.docs):
        if infer:
            d = Document(d.words, infer_identities(model, d.words), d.label)
        out[j] = document_embedding(model, d)
    return out


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


class Neighbor(NamedTuple):
    row: int
    name: str
    similarity: float


def nearest_neighbors(model, query, k=10, exclude_same_word=False) -> list:
    """Top-``k`` sense rows by cosine to ``query`` (a row id or a ``word#identity`` name).

    The query row itself is never returned; ties rank by row id.
    """
    if isinstance(query, str):
        query = model.senses.parse(query, model.vocab)
    n = len(model.sense_vectors)
    if not 0 <= query < n:
        raise KeyError(f"unknown sense row {query}")
    if k <= 0:
        return []
    X = model.sense_vectors
    norms = np.linalg.norm(X, axis=1)
    q = X[query]
    qn = norms[query]
    denom = norms * qn
    sims = np.divide(X @ q, denom, out=np.zeros(n), where=denom > 0)
    mask = np.ones(n, dtype=bool)
    mask[query] = False
    if exclude_same_word:
        mask[model.senses.senses_of(int(model.senses.words[query]))] = False
    cand = np.flatnonzero(mask)
    order = cand[np.lexsort((cand, -sims[cand]))][:k]
    names = model.sense_names() if model.vocab is not None else [str(i) for i in range(n)]
    return [Neighbor(int(r), names[r], float(sims[r])) for r in order]


@dataclass
class SimilarityPair:
    word1: str
    word2: str
    context1: list
    context2: list
    position1: int
    position2: int
    human_score: float

    def __post_init__(self):
        if self.context1[self.position1] != self.word1 or self.context2[self.position2] != self.word2:
            raise ValueError("marked position does not hold the pair's word")


_MARK = re.compile(r"<b>(.*?)</b>", re.IGNORECASE | re.DOTALL)


def _marked_context(text, stopwords=()):
    m = _MARK.search(text)
    if m is None:
        raise ValueError("context lacks a <b>word</b> marker")
    before = tokenize(text[: m.start()], stopwords)
    target = tokenize(m.group(1))
    after = tokenize(text[m.end():], stopwords)
    if len(target) != 1:
        raise ValueError(f"marked target {m.group(1)!r} is not a single token")
    return before + target + after, len(before)


def load_similarity_pairs(path, stopwords=()) -> list:
    """Read ``word1<TAB>context1<TAB>word2<TAB>context2<TAB>score`` lines."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"similarity file not found: {path}")
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise CorpusFormatError(path, lineno, "expected 5 tab-separated fields")
            try:
                c1, p1 = _marked_context(parts[1], stopwords)
                c2, p2 = _marked_context(parts[3], stopwords)
                pairs.append(SimilarityPair(c1[p1], c2[p2], c1, c2, p1, p2, float(parts[4])))
            except ValueError as exc:
                raise CorpusFormatError(path, lineno, str(exc)) from None
    return pairs


def _encode_context(vocab, tokens, position):
    """Drop out-of-vocabulary tokens, tracking where the target lands."""
    if tokens[position] not in vocab:
        raise KeyError(f"word {tokens[position]!r} is out of vocabulary")
    ids, target = [], -1
    for j, tok in enumerate(tokens):
        if tok in vocab:
            if j == position:
                target = len(ids)
            ids.append(vocab.id(tok))
    return np.array(ids, dtype=np.int64), target


def contextual_sense(model, tokens, position) -> int:
    """Sense row chosen for ``tokens[position]`` from its context."""
    ids, target = _encode_context(model.vocab, tokens, position)
    w = int(ids[target])
    if len(model.senses.senses_of(w)) == 0:
        raise KeyError(f"word {tokens[position]!r} has no sense in the model")
    ident = infer_identity(model, ids, target)
    return model.senses.row(w, ident)


def contextual_similarity(model, pair: SimilarityPair) -> float:
    r1 = contextual_sense(model, pair.context1, pair.position1)
    r2 = contextual_sense(model, pair.context2, pair.position2)
    return cosine(model.sense_vectors[r1], model.sense_vectors[r2])


def evaluate_similarity(model, pairs):
    """Spearman correlation of model similarities with human scores; OOV pairs are skipped."""
    sims, gold, skipped = [], [], 0
    for pair in pairs:
        try:
            sims.append(contextual_similarity(model, pair))
        except KeyError as exc:
            log.info("skipping pair (%s, %s): %s", pair.word1, pair.word2, exc)
            skipped += 1
            continue
        gold.append(pair.human_score)
    rho = spearman(sims, gold) if len(sims) >= 2 else float("nan")
    return {"spearman": rho, "pairs": len(sims), "skipped": skipped}


def average_ranks(x) -> np.ndarray:
    """1-based ranks with tied values sharing the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    boundaries = np.flatnonzero(np.diff(sx) != 0) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(x)]])
    ranks = np.empty(len(x))
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    return ranks


def spearman(xs, ys) -> float:
    """Pearson correlation of average ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman needs two sequences of equal length")
    if len(xs) < 2:
        raise ValueError("spearman needs at least two observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    den = np.sqrt((rx @ rx) * (ry @ ry))
    if den == 0.0:
        raise ValueError("spearman is undefined for a constant sequence")
    return float(rx @ ry / den)


def _log1pexp(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def _fit_binary_logistic(X, y, l2, max_iter=100, tol=1e-10):
    """Newton's method on the L2-penalized log-loss; the bias (last column) is unpenalized."""
    n, p = X.shape
    s = 2.0 * y - 1.0
    reg = np.full(p, l2)
    reg[-1] = 1e-12
    w = np.zeros(p)

    def objective(w):
        return _log1pexp(-s * (X @ w)).sum() + 0.5 * (reg * w) @ w

    f = objective(w)
    for _ in range(max_iter):
        z = X @ w
        prob = _sigmoid(z)
        grad = X.T @ (prob - y) + reg * w
        if np.linalg.norm(grad) <= tol * max(1.0, n):
            break
        H = (X * (prob * (1.0 - prob))[:, None]).T @ X + np.diag(reg)
        step = np.linalg.solve(H, grad)
        t = 1.0
        while True:
            w_new = w - t * step
            f_new = objective(w_new)
            if f_new <= f - 1e-4 * t * (grad @ step) or t < 1e-10:
                break
            t *= 0.5
        if f - f_new <= 1e-14 * max(1.0, abs(f)):
            w, f = w_new, f_new
            break
        w, f = w_new, f_new
    return w


@dataclass
class LogisticClassifier:
    """One-vs-rest L2 logistic regression."""

    weights: np.ndarray
    classes: np.ndarray

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.hstack([X, np.ones((len(X), 1))]) @ self.weights.T

    def predict(self, X):
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def train_classifier(features, labels, l2=1.0) -> LogisticClassifier:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features must be (n, d) with one label per row")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("classification needs at least two classes")
    Xb = np.hstack([X, np.ones((len(X), 1))])
    W = np.vstack([_fit_binary_logistic(Xb, (y == c).astype(np.float64), float(l2)) for c in classes])
    return LogisticClassifier(W, classes)


@dataclass
class ClassificationReport:
    micro_f1: float
    macro_f1: float
    accuracy: float
    per_class: dict = field(default_factory=dict)
    confusion: Optional[np.ndarray] = None

    def to_text(self, class_names=None) -> str:
        lines = [f"micro_f1={self.micro_f1:.6f}", f"macro_f1={self.macro_f1:.6f}",
                 f"accuracy={self.accuracy:.6f}"]
        for c, m in self.per_class.items():
            lines.append(f"class_{c}_f1={m['f1']:.6f}")
        names = class_names or {}
        width = max([5] + [len(str(names.get(c, c))) for c in self.per_class])
        lines.append("")
        lines.append(f"{'class':<{width}}  {'prec':>7}  {'recall':>7}  {'f1':>7}  {'support':>7}")
        for c, m in self.per_class.items():
            lines.append(f"{str(names.get(c, c)):<{width}}  {m['precision']:7.4f}  {m['recall']:7.4f}"
                         f"  {m['f1']:7.4f}  {m['support']:7d}")
        return "\n".join(lines) + "\n"


def classification_report(predictions, gold, n_classes=None) -> ClassificationReport:
    """Micro/macro F1 with a confusion matrix (rows gold, columns predicted).

    Classes absent from both gold and predictions are left out of the macro mean.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape:
        raise ValueError("predictions and gold differ in length")
    if len(gold) == 0:
        raise ValueError("empty evaluation set")
    n = n_classes or int(max(pred.max(), gold.max())) + 1
    conf = np.zeros((n, n), dtype=np.int64)
    np.add.at(conf, (gold, pred), 1)
    tp = np.diag(conf)
    fp = conf.sum(axis=0) - tp
    fn = conf.sum(axis=1) - tp
    per_class, f1s = {}, []
    for c in range(n):
        if tp[c] + fp[c] + fn[c] == 0:
            continue
        prec = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] else 0.0
        rec = tp[c] / (tp[c] + fn[c]) if tp[c] + fn[c] else 0.0
        f1 = 2.0 * tp[c] / (2.0 * tp[c] + fp[c] + fn[c])
        per_class[c] = {"precision": float(prec), "recall": float(rec), "f1": float(f1),
                        "support": int(tp[c] + fn[c])}
        f1s.append(f1)
    TP, FP, FN = tp.sum(), fp.sum(), fn.sum()
    micro = 2.0 * TP / (2.0 * TP + FP + FN)
    return ClassificationReport(float(micro), float(np.mean(f1s)), float(TP / len(gold)), per_class, conf)


def classify(model, train: LabeledCorpus, test: LabeledCorpus, l2=1.0):
    """Train on identity-labeled training documents, test on identities inferred by the model."""
    X_train = corpus_features(model, train)
    X_test = corpus_features(model, test, infer=True)
    clf = train_classifier(X_train, train.labels, l2)
    pred = clf.predict(X_test)
    return classification_report(pred, test.labels, n_classes=max(len(train.label_names), 2))
