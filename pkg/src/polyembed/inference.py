"""Combine per-facet embeddings for downstream tasks.

Classification consumes one joint vector per node: the facet blocks
concatenated, optionally scaled by the node's facet probabilities first
(the default). Link prediction scores a pair by summing inner products
over all facet pairs, weighted by both nodes' facet probabilities; that
double sum factorizes into a single inner product of prior-weighted
sums, which is the path used here.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .facets import FacetPrior
from .tables import EmbeddingTables


def concat(tables: EmbeddingTables, prior: FacetPrior,
           weighted: bool = True) -> np.ndarray:
    """Per-node joint vectors, shape (N, K*D): facet blocks of the target
    table concatenated in facet order, scaled by p(k|v) when weighted."""
    u = tables.u
    if prior.dist.shape[0] != u.shape[0]:
        raise ValidationError("prior and tables disagree on node count")
    if prior.k != tables.k:
        raise ValidationError("prior and tables disagree on facet count")
    if weighted:
        u = u * prior.dist[:, :, None]
    return u.reshape(u.shape[0], -1).copy()


def weighted_vectors(table: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Prior-weighted facet sums, shape (N, D): sum_k p(k|v) T[v, k]."""
    if table.shape[0] != dist.shape[0] or table.shape[1] != dist.shape[1]:
        raise ValidationError("table and distribution shapes disagree")
    return np.einsum("nk,nkd->nd", dist, table)


def similarity(i: int, j: int, tables: EmbeddingTables, prior: FacetPrior,
               mode: str = "homogeneous") -> float:
    """Facet-pair similarity of two nodes.

    Homogeneous mode compares target vectors of nodes i and j; cross mode
    compares the type-A target vector of i with the type-B context vector
    of j. Both run the full double sum over facet pairs (bilinear in the
    two facet distributions), evaluated in its factorized form.
    cross-diagonal keeps only matching facet pairs; it is the right
    combiner for encoders whose facets were trained independently, where
    cross-facet inner products carry no signal.
    """
    if mode == "homogeneous":
        d_i, d_j = prior.dist[i], prior.dist[j]
        t_i, t_j = tables.u[i], tables.u[j]
    elif mode in ("cross", "cross-diagonal"):
        if prior.dist_b is None:
            raise ValidationError("cross-type similarity needs a bipartite prior")
        if prior.dist_b.shape[0] != tables.num_context:
            raise ValidationError("context table does not match the type-B prior")
        d_i, d_j = prior.dist[i], prior.dist_b[j]
        t_i, t_j = tables.u[i], tables.h[j]
        if mode == "cross-diagonal":
            per_facet = (t_i * t_j).sum(axis=1)
            return float((d_i * d_j) @ per_facet)
    else:
        raise ValidationError(f"unknown similarity mode {mode!r}")
    return float((d_i @ t_i) @ (d_j @ t_j))


def score_candidates(query: int, candidates, tables: EmbeddingTables,
                     prior: FacetPrior, mode: str = "homogeneous") -> np.ndarray:
    """Similarity of one query against many candidates in a single pass."""
    cand = np.asarray(list(candidates), dtype=np.int64)
    if mode == "homogeneous":
        qvec = prior.dist[query] @ tables.u[query]
        cvecs = np.einsum("nk,nkd->nd", prior.dist[cand], tables.u[cand])
    elif mode == "cross":
        if prior.dist_b is None:
            raise ValidationError("cross-type similarity needs a bipartite prior")
        qvec = prior.dist[query] @ tables.u[query]
        cvecs = np.einsum("nk,nkd->nd", prior.dist_b[cand], tables.h[cand])
    elif mode == "cross-diagonal":
        if prior.dist_b is None:
            raise ValidationError("cross-type similarity needs a bipartite prior")
        qblocks = tables.u[query] * prior.dist[query][:, None]   # (K, D)
        per_facet = np.einsum("kd,ckd->ck", qblocks, tables.h[cand])
        return (per_facet * prior.dist_b[cand]).sum(axis=1)
    else:
        raise ValidationError(f"unknown similarity mode {mode!r}")
    return cvecs @ qvec


def rank_candidates(query: int, candidates, tables: EmbeddingTables,
                    prior: FacetPrior, mode: str = "homogeneous") -> list[int]:
    """Candidates sorted by descending similarity; ties break by
    ascending node id so rankings are reproducible."""
    cand = list(candidates)
    if not cand:
        raise ValidationError("empty candidate list")
    scores = score_candidates(query, cand, tables, prior, mode)
    order = sorted(range(len(cand)), key=lambda idx: (-scores[idx], cand[idx]))
    return [cand[idx] for idx in order]


def save_joint(path, joint: np.ndarray) -> None:
    """Joint-embedding export: header `N KD`, rows `node_id v_1 ... v_KD`."""
    joint = np.asarray(joint)
    if joint.ndim != 2:
        raise ValidationError("expected a 2-D joint embedding matrix")
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(f"{joint.shape[0]} {joint.shape[1]}\n")
        for i, row in enumerate(joint):
            fh.write(" ".join([str(i)] + [f"{v:.17g}" for v in row]) + "\n")


def load_joint(path) -> np.ndarray:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(f"{path}: bad header, expected 'N KD'")
        n, kd = int(header[0]), int(header[1])
        out = np.zeros((n, kd))
        seen = np.zeros(n, dtype=bool)
        for line_no, line in enumerate(fh, start=2):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != kd + 1:
                raise ParseError(f"{path} line {line_no}: expected {kd + 1} fields")
            idx = int(fields[0])
            if not 0 <= idx < n:
                raise ParseError(f"{path} line {line_no}: node id out of range")
            out[idx] = [float(v) for v in fields[1:]]
            seen[idx] = True
    if not seen.all():
        raise ParseError(f"{path}: missing rows")
    return out
