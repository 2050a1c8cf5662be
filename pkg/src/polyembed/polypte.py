"""Facet-aware edge-sampling trainer for bipartite networks.

Observations are single edges (type-A node, type-B node). Each sampled
edge gets `facet_rate` rounds of facet assignment; both endpoints draw
their facet from the edge's facet distribution (the observation rule,
since an edge has no wider context window), then one negative-sampled
update runs on the selected facet vectors. The target table U covers
type-A nodes, the context table H covers type-B nodes, and negatives are
(type-B node, facet) pairs drawn from item degree**0.75 and the item's
prior.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import NumericsError, ValidationError
from .facets import FacetPrior, conditional_distribution, sample_facet
from .polydeepwalk import LR_FLOOR_RATIO, NegativeSampler, sgns_loss_and_grads
from .tables import EmbeddingTables, init_tables


@dataclass(frozen=True)
class PteConfig:
    dim: int = 30
    negatives: int = 30
    facet_rate: int | None = None      # None: K**2 rounds per edge
    total_samples: int | None = None   # None: 100 * num_edges
    learning_rate: float = 0.025
    seed: int = 0
    workers: int = 1
    facet_mode: str = "observation"    # "observation" | "min"
    weighted_edges: bool = False
    trace_points: int = 10

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        if self.negatives < 1:
            raise ValidationError("negatives must be positive")
        if self.facet_rate is not None and self.facet_rate < 1:
            raise ValidationError("facet_rate must be positive")
        if self.total_samples is not None and self.total_samples < 1:
            raise ValidationError("total_samples must be positive")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.workers < 1:
            raise ValidationError("workers must be positive")
        if self.facet_mode not in ("observation", "min"):
            raise ValidationError(f"unknown facet_mode {self.facet_mode!r}")


class PteResult(NamedTuple):
    tables: EmbeddingTables
    loss_trace: list[float]


class AliasTable:
    """Walker alias sampler over nonnegative weights; O(1) per draw."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if (w < 0).any() or w.sum() <= 0:
            raise ValidationError("alias table needs nonnegative weights, not all zero")
        n = len(w)
        prob = w * n / w.sum()
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if prob[i] < 1.0]
        large = [i for i in range(n) if prob[i] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            self.prob[s] = prob[s]
            self.alias[s] = l
            prob[l] = prob[l] + prob[s] - 1.0
            (small if prob[l] < 1.0 else large).append(l)

    def sample(self, rng) -> int:
        i = int(rng.integers(len(self.prob)))
        if rng.random() < self.prob[i]:
            return i
        return int(self.alias[i])


def _edge_conditionals(dist_a_row, dist_b_row, mode):
    p_o = 0.5 * (dist_a_row + dist_b_row)
    if mode == "observation":
        return p_o, p_o
    return (conditional_distribution(dist_a_row, p_o),
            conditional_distribution(dist_b_row, p_o))


def _run_samples(tables, prior, edges, sampler, rng, config, facet_rate,
                 n_samples, lr_total, step_counter, losses, hook, edge_alias):
    u, h = tables.u, tables.h
    dist_a, dist_b = prior.dist, prior.dist_b
    lr0 = config.learning_rate
    decay = (1.0 - LR_FLOOR_RATIO) / lr_total
    n_edges = len(edges)
    for si in range(n_samples):
        if edge_alias is not None:
            ei = edge_alias.sample(rng)
        else:
            ei = int(rng.integers(n_edges))
        a, b = edges[ei]
        cond_a, cond_b = _edge_conditionals(dist_a[a], dist_b[b],
                                            config.facet_mode)
        for _ in range(facet_rate):
            k_a = sample_facet(cond_a, rng)
            k_b = sample_facet(cond_b, rng)
            neg_nodes, neg_facets = sampler.sample_batch(rng, config.negatives)
            loss, g_u, g_ctx, g_neg = sgns_loss_and_grads(
                u[a, k_a], h[b, k_b], h[neg_nodes, neg_facets])
            if not math.isfinite(loss):
                raise NumericsError(f"training diverged at edge sample {si}")
            step = step_counter[0]
            lr = lr0 * max(LR_FLOOR_RATIO, 1.0 - decay * step)
            step_counter[0] = step + 1
            u[a, k_a] -= lr * g_u
            h[b, k_b] -= lr * g_ctx
            np.subtract.at(h, (neg_nodes, neg_facets), lr * g_neg)
            losses.append(loss)
            if hook is not None:
                hook(step, tables)


def train_pte(bipartite, prior: FacetPrior, config: PteConfig,
              hook: Callable | None = None) -> PteResult:
    """Train facet embeddings by repeated edge sampling.

    Deterministic (bit-reproducible) with workers == 1; with more workers
    the sample stream is split across lock-free threads and only the
    statistics of the result are reproducible.
    """
    if prior.dist_b is None:
        raise ValidationError("PTE training needs a bipartite prior (P and Q)")
    if prior.dist.shape[0] != bipartite.num_a:
        raise ValidationError("prior P side does not match type-A node count")
    if prior.dist_b.shape[0] != bipartite.num_b:
        raise ValidationError("prior Q side does not match type-B node count")
    if bipartite.num_edges == 0:
        raise ValidationError("graph has no edges")

    facet_rate = config.facet_rate if config.facet_rate is not None else prior.k ** 2
    total = (config.total_samples if config.total_samples is not None
             else 100 * bipartite.num_edges)

    root = np.random.SeedSequence(config.seed)
    init_ss, train_ss = root.spawn(2)
    tables = init_tables(bipartite.num_a, prior.k, config.dim,
                         seed=init_ss, num_context=bipartite.num_b)
    sampler = NegativeSampler(bipartite.degrees_b(), prior.dist_b)
    edge_alias = AliasTable(bipartite.weights) if config.weighted_edges else None

    lr_total = total * facet_rate
    step_counter = [0]
    edges = bipartite.edges

    if config.workers == 1:
        rng = np.random.default_rng(train_ss)
        losses: list[float] = []
        _run_samples(tables, prior, edges, sampler, rng, config, facet_rate,
                     total, lr_total, step_counter, losses, hook, edge_alias)
        tables.check_finite("after training")
        return PteResult(tables, _bucket_means(losses, config.trace_points))

    shares = [total // config.workers] * config.workers
    shares[0] += total - sum(shares)
    all_losses: list[list[float]] = [[] for _ in range(config.workers)]
    errors: list[BaseException] = []
    worker_rngs = [np.random.default_rng(s) for s in train_ss.spawn(config.workers)]

    def run(w):
        try:
            _run_samples(tables, prior, edges, sampler, worker_rngs[w], config,
                         facet_rate, shares[w], lr_total, step_counter,
                         all_losses[w], hook, edge_alias)
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=run, args=(w,)) for w in range(config.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    tables.check_finite("after training")
    merged = [x for chunk in all_losses for x in chunk]
    return PteResult(tables, _bucket_means(merged, config.trace_points))


def _bucket_means(losses, points):
    if not losses:
        return []
    width = max(1, len(losses) // max(points, 1))
    return [float(np.mean(losses[i:i + width]))
            for i in range(0, len(losses), width)]


def pte_lower_bound_small(edge, prior: FacetPrior, tables: EmbeddingTables,
                          mode: str = "observation"):
    """Exact log-likelihood of one edge and its Jensen lower bound.

    Enumerates all K*K facet pairs with an exact softmax over every
    (type-B node, facet) context vector. Returns (l_exact, l_lower).
    """
    if prior.dist_b is None:
        raise ValidationError("needs a bipartite prior")
    a, b = edge
    cond_a, cond_b = _edge_conditionals(prior.dist[a], prior.dist_b[b], mode)
    k = prior.k
    d = tables.dim
    flat_h = tables.h.reshape(-1, d)
    log_z = np.array([logsumexp(flat_h @ tables.u[a, ka]) for ka in range(k)])

    log_ps, log_po = [], []
    for ka in range(k):
        for kb in range(k):
            ps = cond_a[ka] * cond_b[kb]
            if ps <= 0.0:
                continue
            log_ps.append(math.log(ps))
            log_po.append(float(tables.h[b, kb] @ tables.u[a, ka]) - log_z[ka])
    log_ps_arr = np.array(log_ps)
    log_po_arr = np.array(log_po)
    l_lower = float(np.exp(log_ps_arr) @ log_po_arr)
    l_exact = float(logsumexp(log_ps_arr + log_po_arr))
    return l_exact, l_lower
