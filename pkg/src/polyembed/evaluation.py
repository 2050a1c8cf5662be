"""Held-out link prediction and node-classification evaluation.

Splits: "one-per-node" moves one random incident edge per node of degree
at least 2 into the test set (homogeneous); "latest-per-user" holds out
each type-A node's newest interaction, falling back to a random one when
timestamps are absent. Candidates for a test query are its true endpoint
plus uniform non-neighbor negatives. Metrics: HR@k over the ranked
candidates, exact tie-aware AUC over pooled scores, and micro/macro F1
from a one-vs-rest logistic-regression stand-in classifier.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from . import graph as graphmod
from . import inference
from .errors import ProtocolError, ValidationError
from .facets import FacetPrior
from .graph import BipartiteGraph, Graph
from .tables import EmbeddingTables


@dataclass
class EvalReport:
    hr_at_k: dict[int, float] = field(default_factory=dict)
    auc: float | None = None
    micro_f1: float | None = None
    macro_f1: float | None = None
    metadata: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for k in sorted(self.hr_at_k):
            out.append(f"hr@{k}={self.hr_at_k[k]:.6f}")
        if self.auc is not None:
            out.append(f"auc={self.auc:.6f}")
        if self.micro_f1 is not None:
            out.append(f"micro_f1={self.micro_f1:.6f}")
        if self.macro_f1 is not None:
            out.append(f"macro_f1={self.macro_f1:.6f}")
        for key in sorted(self.metadata):
            out.append(f"{key}={self.metadata[key]}")
        return out

    def table(self) -> str:
        rows = [("metric", "value")]
        for k in sorted(self.hr_at_k):
            rows.append((f"HR@{k}", f"{self.hr_at_k[k]:.4f}"))
        if self.auc is not None:
            rows.append(("AUC", f"{self.auc:.4f}"))
        if self.micro_f1 is not None:
            rows.append(("micro-F1", f"{self.micro_f1:.4f}"))
        if self.macro_f1 is not None:
            rows.append(("macro-F1", f"{self.macro_f1:.4f}"))
        width = max(len(r[0]) for r in rows)
        sep = "-" * (width + 12)
        body = "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
        return f"{sep}\n{body}\n{sep}"


def write_report(report: EvalReport, path) -> None:
    """Human-readable table followed by machine-readable key=value lines."""
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(report.table() + "\n\n")
        fh.write("\n".join(report.lines()) + "\n")


def split_links(g, strategy: str = "one-per-node", seed: int = 0):
    """Hold out test links and return (train_graph, test_edges).

    Nodes (type-A users for the bipartite strategy) of degree < 2 never
    lose their only link. Every edge is removed at most once.
    """
    rng = np.random.default_rng(seed)
    if strategy == "one-per-node":
        if not isinstance(g, Graph):
            raise ValidationError("one-per-node splitting needs a homogeneous graph")
        incident: list[list[int]] = [[] for _ in range(g.num_nodes)]
        for ei, (i, j) in enumerate(g.edges):
            incident[i].append(ei)
            incident[j].append(ei)
        held = np.zeros(g.num_edges, dtype=bool)
        test = []
        for v in range(g.num_nodes):
            if len(incident[v]) < 2:
                continue
            eligible = [ei for ei in incident[v] if not held[ei]]
            if not eligible:
                continue
            ei = eligible[int(rng.integers(len(eligible)))]
            held[ei] = True
            i, j = g.edges[ei]
            # orient the pair as (holdout node, other endpoint)
            test.append((v, int(j) if i == v else int(i)))
        keep = ~held
        if not keep.any():
            raise ValidationError("split removed every edge; graph too sparse")
        train = _rebuild_homogeneous(g, keep)
        return train, test

    if strategy == "latest-per-user":
        if not isinstance(g, BipartiteGraph):
            raise ValidationError("latest-per-user splitting needs a bipartite graph")
        incident = [[] for _ in range(g.num_a)]
        for ei, (a, _) in enumerate(g.edges):
            incident[a].append(ei)
        held = np.zeros(g.num_edges, dtype=bool)
        test = []
        for a in range(g.num_a):
            if len(incident[a]) < 2:
                continue
            if g.timestamps is not None and max(g.timestamps[incident[a]]) >= 0:
                stamps = g.timestamps[incident[a]]
                ei = incident[a][int(np.argmax(stamps))]
            else:
                ei = incident[a][int(rng.integers(len(incident[a])))]
            held[ei] = True
            test.append((a, int(g.edges[ei][1])))
        keep = ~held
        if not keep.any():
            raise ValidationError("split removed every edge; graph too sparse")
        train = _rebuild_bipartite(g, keep)
        return train, test

    raise ValidationError(f"unknown split strategy {strategy!r}")


def _rebuild_homogeneous(g: Graph, keep) -> Graph:
    rows = [(int(i), int(j), float(w))
            for (i, j), w in zip(g.edges[keep], g.weights[keep])]
    out = graphmod.from_edges(rows, num_nodes=g.num_nodes)
    if g.node_labels is not None:
        out = Graph(num_nodes=out.num_nodes, edges=out.edges, weights=out.weights,
                    adj=out.adj, node_labels=list(g.node_labels))
    return out


def _rebuild_bipartite(g: BipartiteGraph, keep) -> BipartiteGraph:
    rows = [(int(a), int(b), float(w))
            for (a, b), w in zip(g.edges[keep], g.weights[keep])]
    ts = g.timestamps[keep] if g.timestamps is not None else None
    out = graphmod.from_edges(rows, kind="bipartite", num_a=g.num_a,
                              num_b=g.num_b, timestamps=ts)
    if g.a_labels is not None or g.b_labels is not None:
        out = BipartiteGraph(num_a=out.num_a, num_b=out.num_b, edges=out.edges,
                             weights=out.weights, timestamps=out.timestamps,
                             adj=out.adj, adj_t=out.adj_t,
                             a_labels=list(g.a_labels) if g.a_labels else None,
                             b_labels=list(g.b_labels) if g.b_labels else None)
    return out


def hit_ratio(ranked, truth: int, ks) -> dict[int, float]:
    """HR@k for one query: 1.0 iff the true endpoint ranks in the top k."""
    try:
        position = list(ranked).index(truth)
    except ValueError:
        raise ProtocolError(f"true endpoint {truth} missing from candidates") from None
    return {int(k): (1.0 if position < k else 0.0) for k in ks}


def auc(pos_scores, neg_scores) -> float:
    """Probability that a random positive outscores a random negative,
    ties counted half; exact, via midranks."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise ValidationError("AUC needs nonempty score lists")
    ranks = rankdata(np.concatenate([pos, neg]))
    pos_rank_sum = ranks[:len(pos)].sum()
    n_pos, n_neg = len(pos), len(neg)
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def candidate_protocol(test_edge, g, num_negatives: int = 200,
                       seed: int = 0) -> list[int]:
    """Candidate set for one test edge: true endpoint plus uniform
    non-neighbor negatives of the query node (sampled from the training
    graph, so no training neighbor ever appears)."""
    if num_negatives < 1:
        raise ValidationError("num_negatives must be positive")
    query, truth = test_edge
    rng = np.random.default_rng(seed)
    if isinstance(g, BipartiteGraph):
        taken = {j for j, _ in graphmod.neighbors(g, query, side="a")}
        pool_size = g.num_b
    else:
        taken = {j for j, _ in graphmod.neighbors(g, query)}
        taken.add(query)
        pool_size = g.num_nodes
    taken.add(truth)
    pool = np.array([c for c in range(pool_size) if c not in taken], dtype=np.int64)
    if len(pool) < num_negatives:
        warnings.warn(f"only {len(pool)} non-neighbors available "
                      f"({num_negatives} requested)", stacklevel=2)
        chosen = pool
    else:
        chosen = rng.choice(pool, size=num_negatives, replace=False)
    return [int(truth)] + [int(c) for c in chosen]


def link_prediction_report(train_graph, test_edges, tables: EmbeddingTables,
                           prior: FacetPrior, mode: str,
                           num_negatives: int = 200,
                           ks=(10, 50, 100, 200), seed: int = 0) -> EvalReport:
    """Rank candidates for every test edge and aggregate HR@k and AUC."""
    if not test_edges:
        raise ValidationError("no test edges")
    hr_sums = {int(k): 0.0 for k in ks}
    pos_scores, neg_scores = [], []
    cand_rng = np.random.SeedSequence(seed)
    for child, edge in zip(cand_rng.spawn(len(test_edges)), test_edges):
        child_seed = int(child.generate_state(1)[0])
        candidates = candidate_protocol(edge, train_graph, num_negatives,
                                        seed=child_seed)
        ranked = inference.rank_candidates(edge[0], candidates, tables, prior, mode)
        for k, hit in hit_ratio(ranked, edge[1], ks).items():
            hr_sums[k] += hit
        scores = inference.score_candidates(edge[0], candidates, tables, prior, mode)
        pos_scores.append(float(scores[0]))
        neg_scores.extend(float(s) for s in scores[1:])
    n = len(test_edges)
    report = EvalReport(
        hr_at_k={k: v / n for k, v in hr_sums.items()},
        auc=auc(pos_scores, neg_scores),
        metadata={"num_queries": n, "num_negatives": num_negatives,
                  "seed": seed, "mode": mode},
    )
    return report


def load_labels(path, num_nodes: int):
    """Label file: lines `node_id label`; repeated node ids make a
    multi-label node. Returns (binary matrix (N, C), class names)."""
    pairs = []
    with open(Path(path), "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) != 2:
                raise ValidationError(f"{path} line {line_no}: expected 'node label'")
            pairs.append((int(fields[0]), fields[1]))
    classes = sorted({lab for _, lab in pairs})
    index = {lab: c for c, lab in enumerate(classes)}
    y = np.zeros((num_nodes, len(classes)), dtype=np.float64)
    for node, lab in pairs:
        if not 0 <= node < num_nodes:
            raise ValidationError(f"label for unknown node {node}")
        y[node, index[lab]] = 1.0
    return y, classes


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30, 30)))


def classify(features: np.ndarray, labels: np.ndarray,
             train_fraction: float = 0.8, seed: int = 0,
             epochs: int = 200, l2: float = 1e-4, lr: float = 0.5,
             shuffle: bool = False):
    """One-vs-rest logistic regression on joint embeddings.

    labels is a binary (N, C) indicator matrix. The split is positional
    (first `train_fraction` of the rows train) unless shuffle=True, which
    applies one seeded permutation first. Multi-label nodes are scored
    with the usual top-l protocol: predict as many labels as the node
    truly has. Returns (micro_f1, macro_f1).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise ValidationError("features and labels disagree on sample count")
    if y.shape[1] < 2 or (y.sum(axis=0) > 0).sum() < 2:
        raise ValidationError("need at least two represented classes")
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train_fraction must be in (0, 1)")
    n = x.shape[0]
    order = np.arange(n)
    if shuffle:
        order = np.random.default_rng(seed).permutation(n)
    cut = int(np.floor(train_fraction * n))
    if cut < 1 or cut >= n:
        raise ValidationError("split leaves an empty train or test side")
    train_idx, test_idx = order[:cut], order[cut:]

    mu = x[train_idx].mean(axis=0)
    sd = x[train_idx].std(axis=0)
    sd[sd == 0] = 1.0
    xs = (x - mu) / sd
    xs = np.hstack([xs, np.ones((n, 1))])  # bias column

    xt, yt = xs[train_idx], y[train_idx]
    w = np.zeros((xs.shape[1], y.shape[1]))
    m = len(train_idx)
    for _ in range(epochs):
        p = _sigmoid(xt @ w)
        grad = xt.T @ (p - yt) / m + l2 * w
        w -= lr * grad

    scores = xs[test_idx] @ w
    y_test = y[test_idx]
    y_pred = np.zeros_like(y_test)
    for r in range(len(test_idx)):
        n_true = int(y_test[r].sum())
        if n_true == 0:
            continue
        top = np.argsort(-scores[r], kind="stable")[:n_true]
        y_pred[r, top] = 1.0

    tp = (y_pred * y_test).sum()
    fp = (y_pred * (1 - y_test)).sum()
    fn = ((1 - y_pred) * y_test).sum()
    micro = 2 * tp / max(2 * tp + fp + fn, 1e-300)

    per_class = []
    for c in range(y.shape[1]):
        tp_c = (y_pred[:, c] * y_test[:, c]).sum()
        fp_c = (y_pred[:, c] * (1 - y_test[:, c])).sum()
        fn_c = ((1 - y_pred[:, c]) * y_test[:, c]).sum()
        denom = 2 * tp_c + fp_c + fn_c
        per_class.append(2 * tp_c / denom if denom > 0 else 0.0)
    macro = float(np.mean(per_class))
    return float(micro), macro
