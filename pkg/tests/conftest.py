"""Shared fixtures: planted graphs, reference implementations, oracles.

The reference trainers here re-implement classic (single-vector)
skip-gram and edge-sampling training with explicit loops, consuming
randomness in the documented order, so the facet trainers can be checked
step-for-step against them at K=1.
"""

import numpy as np
import pytest

from polyembed import graph as graphmod
from polyembed.polydeepwalk import LR_FLOOR_RATIO, sgns_loss_and_grads
from polyembed.tables import EmbeddingTables
from polyembed.walks import sliding_windows


def make_sbm(seed, n_block=60, p_in=0.3, p_out=0.02):
    """Two-block homogeneous stochastic block model."""
    rng = np.random.default_rng(seed)
    n = 2 * n_block
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            pr = p_in if (i < n_block) == (j < n_block) else p_out
            if rng.random() < pr:
                rows.append((i, j))
    return graphmod.from_edges(rows, num_nodes=n)


def make_planted_bipartite(seed, n_side=60, p_in=0.4, p_out=0.02):
    """Two user-blocks by two item-blocks; dense within, sparse across."""
    rng = np.random.default_rng(seed)
    half = n_side // 2
    rows = []
    for a in range(n_side):
        for b in range(n_side):
            pr = p_in if (a < half) == (b < half) else p_out
            if rng.random() < pr:
                rows.append((a, b))
    return graphmod.from_edges(rows, kind="bipartite", num_a=n_side, num_b=n_side)


def make_two_cliques(clique=4, gap=0):
    """Two disjoint cliques of the given size."""
    rows = []
    for base in (0, clique + gap):
        for i in range(base, base + clique):
            for j in range(i + 1, base + clique):
                rows.append((i, j))
    return graphmod.from_edges(rows)


@pytest.fixture
def triangle():
    return graphmod.from_edges([(0, 1), (1, 2), (0, 2)])


# ------------------------------------------------------- reference trainers

def reference_sgns_train(g, corpus, dim, negatives, epochs, learning_rate,
                         window, seed, max_updates=None, on_update=None):
    """Classic skip-gram with negative sampling over a walk corpus.

    No facet machinery at all: one target and one context vector per
    node, negatives drawn from corpus counts ** 0.75.
    """
    n = g.num_nodes
    root = np.random.SeedSequence(seed)
    init_ss, train_ss = root.spawn(2)
    rng_init = np.random.default_rng(init_ss)
    u = (rng_init.random((n, 1, dim)) - 0.5) / dim
    h = np.zeros((n, 1, dim))
    rng = np.random.default_rng(train_ss)

    counts = np.zeros(n)
    for walk in corpus:
        for v in walk:
            counts[v] += 1
    cdf = np.cumsum(counts ** 0.75)

    obs = []
    for walk in corpus:
        obs.extend(sliding_windows(walk, window))
    total = sum(len(o.context) for o in obs) * epochs
    decay = (1.0 - LR_FLOOR_RATIO) / total

    step = 0
    for _ in range(epochs):
        for o in obs:
            for j in o.context:
                draws = rng.random(negatives) * cdf[-1]
                negs = np.minimum(np.searchsorted(cdf, draws, side="right"), n - 1)
                _, g_u, g_ctx, g_neg = sgns_loss_and_grads(
                    u[o.center, 0], h[j, 0], h[negs, 0])
                lr = learning_rate * max(LR_FLOOR_RATIO, 1.0 - decay * step)
                step += 1
                u[o.center, 0] -= lr * g_u
                h[j, 0] -= lr * g_ctx
                np.subtract.at(h, (negs, np.zeros(negatives, dtype=np.int64)),
                               lr * g_neg)
                if on_update is not None:
                    on_update(step - 1, u, h)
                if max_updates is not None and step >= max_updates:
                    return EmbeddingTables(u=u, h=h)
    return EmbeddingTables(u=u, h=h)


def reference_pte_train(g, dim, negatives, total_samples, learning_rate,
                        seed, max_updates=None, on_update=None):
    """Classic PTE: uniform edge sampling, single vector per node,
    negatives from item degree ** 0.75."""
    num_a, num_b = g.num_a, g.num_b
    root = np.random.SeedSequence(seed)
    init_ss, train_ss = root.spawn(2)
    rng_init = np.random.default_rng(init_ss)
    u = (rng_init.random((num_a, 1, dim)) - 0.5) / dim
    h = np.zeros((num_b, 1, dim))
    rng = np.random.default_rng(train_ss)

    cdf = np.cumsum(g.degrees_b().astype(np.float64) ** 0.75)
    edges = g.edges
    decay = (1.0 - LR_FLOOR_RATIO) / total_samples

    for step in range(total_samples):
        ei = int(rng.integers(len(edges)))
        a, b = edges[ei]
        draws = rng.random(negatives) * cdf[-1]
        negs = np.minimum(np.searchsorted(cdf, draws, side="right"), num_b - 1)
        _, g_u, g_ctx, g_neg = sgns_loss_and_grads(u[a, 0], h[b, 0], h[negs, 0])
        lr = learning_rate * max(LR_FLOOR_RATIO, 1.0 - decay * step)
        u[a, 0] -= lr * g_u
        h[b, 0] -= lr * g_ctx
        np.subtract.at(h, (negs, np.zeros(negatives, dtype=np.int64)), lr * g_neg)
        if on_update is not None:
            on_update(step, u, h)
        if max_updates is not None and step + 1 >= max_updates:
            break
    return EmbeddingTables(u=u, h=h)


# ---------------------------------------------------------------- oracles

def similarity_double_loop(i, j, tables, prior, mode="homogeneous"):
    """Literal double sum over facet pairs; the production path must match."""
    if mode == "homogeneous":
        d_j, t_j = prior.dist[j], tables.u[j]
    else:
        d_j, t_j = prior.dist_b[j], tables.h[j]
    total = 0.0
    for k in range(prior.k):
        for kp in range(prior.k):
            total += prior.dist[i][k] * d_j[kp] * float(tables.u[i, k] @ t_j[kp])
    return total


def auc_brute_force(pos, neg):
    wins = ties = 0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1
            elif p == q:
                ties += 1
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def finite_difference(fn, arr, h=1e-6):
    """Central differences of a scalar function w.r.t. every arr entry."""
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + h
        fp = fn()
        arr[idx] = orig - h
        fm = fn()
        arr[idx] = orig
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def rel_error(analytic, numeric):
    denom = max(np.linalg.norm(numeric), 1e-12)
    return np.linalg.norm(analytic - numeric) / denom
