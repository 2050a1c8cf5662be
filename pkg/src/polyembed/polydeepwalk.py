"""Facet-aware skip-gram training on random-walk corpora.

For every center-context observation the trainer repeatedly (facet rate R)
assigns one facet to each node involved, then applies one negative-sampled
SGD update per (center, context) pair on the selected facet vectors.
Facets are drawn from the min-rule conditional distribution, so a facet
the prior rules out for a node is never activated for it. The tractable
training objective is the Jensen lower bound of the full facet-marginal
log-likelihood; `exact_objective_small` evaluates both sides exactly on
enumerable instances.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, NumericsError, ValidationError
from .facets import FacetPrior, conditional_distribution, sample_facet
from .tables import EmbeddingTables, init_tables
from .walks import Observation, sliding_windows

LR_FLOOR_RATIO = 1e-4
LOGIT_CLAMP = 30.0


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 32
    negatives: int = 10
    facet_rate: int = 1
    epochs: int = 5
    learning_rate: float = 0.025
    window: int = 8
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        if self.negatives < 1:
            raise ValidationError("negatives must be positive")
        if self.facet_rate < 1:
            raise ValidationError("facet_rate must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.window < 1:
            raise ValidationError("window must be positive")
        if self.workers < 1:
            raise ValidationError("workers must be positive")


class TrainResult(NamedTuple):
    tables: EmbeddingTables
    epoch_losses: list[float]


def corpus_node_counts(corpus, num_nodes: int) -> np.ndarray:
    counts = np.zeros(num_nodes, dtype=np.int64)
    for walk in corpus:
        np.add.at(counts, walk, 1)
    return counts


class NegativeSampler:
    """Draws (node, facet) negatives: node from counts**0.75, facet from
    that node's prior distribution."""

    def __init__(self, counts, facet_dist, power: float = 0.75):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.shape[0] != facet_dist.shape[0]:
            raise ValidationError("counts and prior disagree on node count")
        weights = counts ** power
        if weights.sum() <= 0:
            raise ValidationError("negative sampler needs a nonzero count vector")
        self.cdf = np.cumsum(weights)
        self.facet_dist = facet_dist
        self.facet_cdf = np.cumsum(facet_dist, axis=1)
        self.k = facet_dist.shape[1]

    def sample(self, rng) -> tuple[int, int]:
        u = rng.random() * self.cdf[-1]
        node = min(int(np.searchsorted(self.cdf, u, side="right")),
                   len(self.cdf) - 1)
        return node, sample_facet(self.facet_dist[node], rng)

    def sample_batch(self, rng, count: int):
        """Vectorized draw of `count` pairs; returns (nodes, facets) arrays.

        Node draws consume `count` uniforms, then (for K > 1) facet draws
        consume another `count`, so the stream matches a plain node-only
        sampler exactly when K == 1.
        """
        u = rng.random(count) * self.cdf[-1]
        nodes = np.minimum(np.searchsorted(self.cdf, u, side="right"),
                           len(self.cdf) - 1)
        if self.k == 1:
            return nodes, np.zeros(count, dtype=np.int64)
        rows = self.facet_cdf[nodes]
        thresholds = rng.random(count) * rows[:, -1]
        facet_idx = np.minimum((rows <= thresholds[:, None]).sum(axis=1),
                               self.k - 1)
        return nodes, facet_idx


def negative_sampler(counts, prior: FacetPrior, seed: int = 0):
    """Infinite stream of negative (node, facet) pairs."""
    sampler = NegativeSampler(counts, prior.dist)
    rng = np.random.default_rng(seed)
    while True:
        yield sampler.sample(rng)


def sgns_loss_and_grads(u_cen, h_ctx, h_neg):
    """Negative-sampling pair loss and its gradients.

    u_cen, h_ctx: (D,) vectors; h_neg: (R, D) matrix of negative context
    vectors. Logits are clamped to +-30 before the logistic, which
    perturbs the loss by < 1e-13. Returns (loss, g_u, g_ctx, g_neg).
    """
    s_pos = float(h_ctx @ u_cen)
    sp = min(max(s_pos, -LOGIT_CLAMP), LOGIT_CLAMP)
    s_neg = np.clip(h_neg @ u_cen, -LOGIT_CLAMP, LOGIT_CLAMP)
    e_neg = np.exp(s_neg)
    p_neg = e_neg / (1.0 + e_neg)
    p_pos = 1.0 / (1.0 + math.exp(-sp))
    loss = math.log1p(math.exp(-sp)) + float(np.log1p(e_neg).sum())
    g_u = (p_pos - 1.0) * h_ctx + h_neg.T @ p_neg
    g_ctx = (p_pos - 1.0) * u_cen
    g_neg = np.outer(p_neg, u_cen)
    return loss, g_u, g_ctx, g_neg


def pair_loss_and_grads(tables: EmbeddingTables, center, context, negatives):
    """Loss and gradients of one positive pair against its negatives.

    center/context are (node, facet) pairs; negatives a list of them.
    Gradients come back keyed by parameter role.
    """
    ci, ck = center
    xi, xk = context
    neg_nodes = np.array([n for n, _ in negatives])
    neg_facets = np.array([f for _, f in negatives])
    loss, g_u, g_ctx, g_neg = sgns_loss_and_grads(
        tables.u[ci, ck], tables.h[xi, xk], tables.h[neg_nodes, neg_facets])
    return loss, {"u_center": g_u, "h_context": g_ctx, "h_negatives": g_neg}


def _observations(corpus, window):
    out = []
    for walk in corpus:
        out.extend(sliding_windows(walk, window))
    return out


def _run_observations(tables, dist, obs_list, sampler, rng, config,
                      lr_total, step_counter, loss_box, epoch, hook):
    u, h = tables.u, tables.h
    k = dist.shape[1]
    lr0 = config.learning_rate
    decay = (1.0 - LR_FLOOR_RATIO) / lr_total
    negatives = config.negatives
    for oi, obs in enumerate(obs_list):
        ctx = obs.context
        p_o = (dist[obs.center] + dist[list(ctx)].sum(axis=0)) / (len(ctx) + 1)
        cond_center = conditional_distribution(dist[obs.center], p_o)
        cond_ctx = [conditional_distribution(dist[j], p_o) for j in ctx]
        for _ in range(config.facet_rate):
            k_i = sample_facet(cond_center, rng)
            ctx_facets = [sample_facet(c, rng) for c in cond_ctx]
            for j, k_j in zip(ctx, ctx_facets):
                neg_nodes, neg_facets = sampler.sample_batch(rng, negatives)
                loss, g_u, g_ctx, g_neg = sgns_loss_and_grads(
                    u[obs.center, k_i], h[j, k_j], h[neg_nodes, neg_facets])
                if not math.isfinite(loss):
                    raise NumericsError(
                        f"training diverged at epoch {epoch}, observation {oi}")
                step = step_counter[0]
                lr = lr0 * max(LR_FLOOR_RATIO, 1.0 - decay * step)
                step_counter[0] = step + 1
                u[obs.center, k_i] -= lr * g_u
                h[j, k_j] -= lr * g_ctx
                np.subtract.at(h, (neg_nodes, neg_facets), lr * g_neg)
                loss_box[0] += loss
                loss_box[1] += 1
                if hook is not None:
                    hook(step, tables)


def train(graph, prior: FacetPrior, corpus, config: TrainConfig,
          hook: Callable | None = None) -> TrainResult:
    """Run the facet-sampled negative-sampling trainer over a walk corpus.

    Single-worker runs are bit-reproducible for a fixed seed. With
    workers > 1 the observation stream is sharded across threads updating
    the shared tables without locks; results are then only statistically
    reproducible.
    """
    n = graph.num_nodes
    if prior.dist.shape[0] != n:
        raise ValidationError("prior row count differs from graph size")
    if not corpus:
        raise ValidationError("empty corpus")
    obs_list = _observations(corpus, config.window)
    if not obs_list:
        raise ValidationError("corpus yields no observations")

    root = np.random.SeedSequence(config.seed)
    init_ss, train_ss = root.spawn(2)
    tables = init_tables(n, prior.k, config.dim, seed=init_ss)
    counts = corpus_node_counts(corpus, n)
    sampler = NegativeSampler(counts, prior.dist)

    pairs_per_epoch = sum(len(o.context) for o in obs_list) * config.facet_rate
    lr_total = pairs_per_epoch * config.epochs
    step_counter = [0]
    epoch_losses = []
    dist = prior.dist

    if config.workers == 1:
        rng = np.random.default_rng(train_ss)
        for epoch in range(config.epochs):
            loss_box = [0.0, 0]
            _run_observations(tables, dist, obs_list, sampler, rng, config,
                              lr_total, step_counter, loss_box, epoch, hook)
            tables.check_finite(f"after epoch {epoch}")
            epoch_losses.append(loss_box[0] / max(loss_box[1], 1))
        return TrainResult(tables, epoch_losses)

    worker_rngs = [np.random.default_rng(s) for s in train_ss.spawn(config.workers)]
    shards = [obs_list[w::config.workers] for w in range(config.workers)]
    for epoch in range(config.epochs):
        boxes = [[0.0, 0] for _ in range(config.workers)]
        errors: list[BaseException] = []

        def run(w):
            try:
                _run_observations(tables, dist, shards[w], sampler,
                                  worker_rngs[w], config, lr_total,
                                  step_counter, boxes[w], epoch, hook)
            except BaseException as exc:  # surface worker failures
                errors.append(exc)

        threads = [threading.Thread(target=run, args=(w,))
                   for w in range(config.workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            raise errors[0]
        tables.check_finite(f"after epoch {epoch}")
        total = sum(b[0] for b in boxes)
        count = sum(b[1] for b in boxes)
        epoch_losses.append(total / max(count, 1))
    return TrainResult(tables, epoch_losses)


def exact_objective_small(obs: Observation, prior: FacetPrior,
                          tables: EmbeddingTables,
                          enumeration_cap: int = 10**5):
    """Exact facet-marginal log-likelihood of one observation and its
    Jensen lower bound, by enumerating every facet assignment.

    The softmax normalizer runs over all (node, facet) context vectors;
    no negative sampling is involved. Returns (l_exact, l_lower) with
    l_lower <= l_exact.
    """
    k = prior.k
    positions = 1 + len(obs.context)
    if k ** positions > enumeration_cap:
        raise CapacityError(
            f"{k}^{positions} facet assignments exceed cap {enumeration_cap}")
    dist = prior.dist
    p_o = (dist[obs.center] + dist[list(obs.context)].sum(axis=0)) / positions
    cond_center = conditional_distribution(dist[obs.center], p_o)
    cond_ctx = [conditional_distribution(dist[j], p_o) for j in obs.context]

    d = tables.dim
    flat_h = tables.h.reshape(-1, d)
    log_z = np.array([logsumexp(flat_h @ tables.u[obs.center, kc])
                      for kc in range(k)])

    log_ps_terms = []
    log_po_terms = []
    for assign in itertools.product(range(k), repeat=positions):
        kc, kctx = assign[0], assign[1:]
        ps = cond_center[kc]
        for cj, kj in zip(cond_ctx, kctx):
            ps *= cj[kj]
        if ps <= 0.0:
            continue
        log_po = sum(float(tables.h[j, kj] @ tables.u[obs.center, kc]) - log_z[kc]
                     for j, kj in zip(obs.context, kctx))
        log_ps_terms.append(np.log(ps))
        log_po_terms.append(log_po)
    log_ps_arr = np.array(log_ps_terms)
    log_po_arr = np.array(log_po_terms)
    l_lower = float(np.exp(log_ps_arr) @ log_po_arr)
    l_exact = float(logsumexp(log_ps_arr + log_po_arr))
    return l_exact, l_lower
