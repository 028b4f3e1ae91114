"""Negative-sampling SGD over the two bipartite networks.

Every iteration draws one word-context edge and one word-identity edge (alias
sampling proportional to weight, each drawn edge treated as unit weight), pairs
the positive sense with ``negatives`` noise senses and takes one descent step on

    -log s(w_j . a) - sum_n log s(-w_n . a)

where ``a`` is the context row (word-context edge) or identity row
(word-identity edge) and ``s`` the logistic function.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _rng
from ._jit import USE_NUMBA, njit, prange
from .hetnet import BipartiteNetwork, HeterogeneousNetwork, build_alias_table, build_noise_table

ANCHOR_KINDS = ("context", "identity")
MIN_RATE_FRACTION = 1e-4
MAX_RESAMPLE = 10


@dataclass
class TrainerConfig:
    dim: int = 100
    negatives: int = 5
    samples: int = 1_000_000
    rho0: float = 0.025
    window: int = 5
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.negatives < 0:
            raise ValueError(f"negatives must be >= 0, got {self.negatives}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be > 0, got {self.rho0}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class EmbeddingModel:
    sense_vectors: np.ndarray
    context_vectors: np.ndarray
    identity_vectors: np.ndarray
    vocab: Optional[object] = None
    senses: Optional[object] = None
    sense_freq: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.sense_vectors.shape[1]

    def anchors(self, kind):
        if kind == "context":
            return self.context_vectors
        if kind == "identity":
            return self.identity_vectors
        raise ValueError(f"anchor kind must be one of {ANCHOR_KINDS}, got {kind!r}")

    def sense_names(self):
        return self.senses.names(self.vocab)

    def copy(self):
        return EmbeddingModel(self.sense_vectors.copy(), self.context_vectors.copy(),
                              self.identity_vectors.copy(), self.vocab, self.senses,
                              None if self.sense_freq is None else self.sense_freq.copy(), dict(self.stats))


@njit
def sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@njit
def log_sigmoid(x):
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def learning_rate(t, T, rho0=0.025):
    """Linearly decayed rate, floored at ``rho0 * 1e-4``."""
    return max(rho0 * (1.0 - t / T), rho0 * MIN_RATE_FRACTION)


if USE_NUMBA:

    @njit
    def _sgd_step(sense, anchors, a, targets, labels, n, rho, err):
        # gradient of every term is taken at the pre-update values
        d = sense.shape[1]
        for k in range(d):
            err[k] = 0.0
        g = np.empty(n)
        for j in range(n):
            t = targets[j]
            x = 0.0
            for k in range(d):
                x += sense[t, k] * anchors[a, k]
            g[j] = rho * (labels[j] - sigmoid(x))
            for k in range(d):
                err[k] += g[j] * sense[t, k]
        for j in range(n):
            t = targets[j]
            for k in range(d):
                sense[t, k] += g[j] * anchors[a, k]
        for k in range(d):
            anchors[a, k] += err[k]

else:

    def _sgd_step(sense, anchors, a, targets, labels, n, rho, err):
        t = targets[:n]
        rows = sense[t]
        x = rows @ anchors[a]
        g = rho * (labels[:n] - 1.0 / (1.0 + np.exp(-np.clip(x, -700.0, 700.0))))
        err[:] = g @ rows
        np.add.at(sense, t, np.outer(g, anchors[a]))
        anchors[a] += err


@njit
def _fill_targets(targets, labels, positive, negatives, noise_prob, noise_alias, state, w):
    targets[0] = positive
    labels[0] = 1.0
    n = 1
    for _ in range(negatives):
        for _try in range(MAX_RESAMPLE):
            cand = _rng.alias_draw(noise_prob, noise_alias, state, w)
            if cand != positive:
                targets[n] = cand
                labels[n] = 0.0
                n += 1
                break
    return n


@njit(parallel=True)
def _train_kernel(sense, ctx, ident,
                  wc_src, wc_dst, wc_prob, wc_alias,
                  wi_src, wi_dst, wi_prob, wi_alias,
                  noise_prob, noise_alias,
                  iters, total, negatives, rho0, state, progress, counters):
    n_workers = iters.shape[0]
    d = sense.shape[1]
    floor = rho0 * MIN_RATE_FRACTION
    for w in prange(n_workers):
        targets = np.empty(negatives + 1, dtype=np.int64)
        labels = np.empty(negatives + 1)
        err = np.empty(d)
        for it in range(iters[w]):
            # each worker owns one progress slot; the sum is the shared sample count
            t = 0
            for v in range(n_workers):
                t += progress[v]
            rho = rho0 * (1.0 - t / total)
            if rho < floor:
                rho = floor

            e = _rng.alias_draw(wc_prob, wc_alias, state, w)
            n = _fill_targets(targets, labels, wc_src[e], negatives, noise_prob, noise_alias, state, w)
            _sgd_step(sense, ctx, wc_dst[e], targets, labels, n, rho, err)
            counters[w, 0] += 1

            e = _rng.alias_draw(wi_prob, wi_alias, state, w)
            n = _fill_targets(targets, labels, wi_src[e], negatives, noise_prob, noise_alias, state, w)
            _sgd_step(sense, ident, wi_dst[e], targets, labels, n, rho, err)
            counters[w, 1] += 1

            progress[w] = it + 1


def init_model(n_senses, n_context, n_identities, dim, seed):
    """Sense and context rows uniform in [-0.5/dim, 0.5/dim]; identity rows zero."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    half = 0.5 / dim
    sense = rng.uniform(-half, half, size=(n_senses, dim))
    ctx = rng.uniform(-half, half, size=(n_context, dim))
    return EmbeddingModel(sense, ctx, np.zeros((n_identities, dim)))


def train(g_wc: BipartiteNetwork, g_wi: BipartiteNetwork, config: TrainerConfig, model=None, sense_freq=None):
    """Run ``config.samples`` alternating iterations and return the trained model.

    Each iteration is one word-context update followed by one word-identity
    update, so ``2 * samples`` edges are consumed in total. Noise senses are
    drawn proportional to ``sense_freq ** 0.75``; by default the sense
    frequencies are the word-identity source degrees.
    """
    if len(g_wc) == 0 or len(g_wi) == 0:
        raise ValueError("cannot train on an empty network")
    if g_wc.n_source != g_wi.n_source:
        raise ValueError("the two networks must share the sense node set")
    if sense_freq is None:
        sense_freq = g_wi.source_degrees
    if model is None:
        model = init_model(g_wc.n_source, g_wc.n_target, g_wi.n_target, config.dim, config.seed)
    wc_tab = build_alias_table(g_wc.weight)
    wi_tab = build_alias_table(g_wi.weight)
    noise = build_noise_table(sense_freq)

    W = config.workers
    T = config.samples
    iters = np.full(W, T // W, dtype=np.int64)
    iters[: T % W] += 1
    state = _rng.make_state(int(np.random.SeedSequence([int(config.seed), 1]).generate_state(1)[0]), W)
    progress = np.zeros(W, dtype=np.int64)
    counters = np.zeros((W, 2), dtype=np.int64)

    start = time.perf_counter()
    _train_kernel(model.sense_vectors, model.context_vectors, model.identity_vectors,
                  g_wc.source, g_wc.target, wc_tab.prob, wc_tab.alias,
                  g_wi.source, g_wi.target, wi_tab.prob, wi_tab.alias,
                  noise.prob, noise.alias,
                  iters, float(T), int(config.negatives), float(config.rho0), state, progress, counters)
    model.sense_freq = np.asarray(sense_freq, dtype=np.float64)
    model.stats = {
        "wc_updates": int(counters[:, 0].sum()),
        "wi_updates": int(counters[:, 1].sum()),
        "seconds": time.perf_counter() - start,
        "backend": "numba" if USE_NUMBA else "python",
    }
    return model


def fit(hn: HeterogeneousNetwork, config: TrainerConfig) -> EmbeddingModel:
    """Train on a heterogeneous network and attach its vocabulary and sense registry."""
    model = train(hn.word_context, hn.word_identity, config, sense_freq=hn.sense_freq)
    model.vocab = hn.vocab
    model.senses = hn.senses
    return model


def _targets(source, negatives):
    return np.concatenate([[int(source)], np.asarray(negatives, dtype=np.int64)]).astype(np.int64)


def edge_loss(model: EmbeddingModel, source, anchor, anchor_kind, negatives=()):
    """Negative-sampling loss of one edge: positive term plus one term per negative."""
    a = model.anchors(anchor_kind)[anchor]
    loss = -log_sigmoid(float(model.sense_vectors[source] @ a))
    for n in negatives:
        loss -= log_sigmoid(-float(model.sense_vectors[n] @ a))
    return loss


def edge_gradients(model: EmbeddingModel, source, anchor, anchor_kind, negatives=()):
    """Analytic gradients of :func:`edge_loss`.

    Returns ``(rows, row_grads, anchor_grad)`` where ``row_grads[j]`` is the
    gradient contribution for sense row ``rows[j]`` (rows may repeat).
    """
    a = model.anchors(anchor_kind)[anchor]
    rows = _targets(source, negatives)
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    coef = np.array([sigmoid(float(model.sense_vectors[r] @ a)) for r in rows]) - labels
    row_grads = coef[:, None] * a[None, :]
    anchor_grad = coef @ model.sense_vectors[rows]
    return rows, row_grads, anchor_grad


def sgd_update(model: EmbeddingModel, source, anchor, anchor_kind, negatives=(), rho=0.025):
    """One in-place descent step on a single edge; only the touched rows move."""
    if not rho > 0:
        raise ValueError("rho must be > 0")
    rows = _targets(source, negatives)
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    err = np.empty(model.dim)
    _sgd_step(model.sense_vectors, model.anchors(anchor_kind), int(anchor), rows, labels, len(rows), float(rho), err)
    return model


def evaluate_softmax(model: EmbeddingModel, anchor, anchor_kind):
    """Full softmax over sense rows conditioned on one anchor row (small models only)."""
    x = model.sense_vectors @ model.anchors(anchor_kind)[anchor]
    x = x - x.max()
    p = np.exp(x)
    return p / p.sum()


def total_loss(model: EmbeddingModel, edges):
    """Sum of :func:`edge_loss` over ``(source, anchor, kind, negatives)`` tuples."""
    return sum(edge_loss(model, s, a, k, n) for s, a, k, n in edges)
