"""Per-facet graph-convolution embeddings for bipartite networks.

The adjacency is split into K facet matrices (an exact partition guided
by the NMF factors), and each facet gets its own pair of mean-aggregator
encoders, one per node type. Layer-0 inputs are free trainable vectors
(the datasets carry no node attributes). Each facet trains independently
on an edge-level negative-sampling loss over its own facet matrix, with
gradients propagated through the aggregation stack by hand-written
reverse accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericsError, ValidationError
from .tables import EmbeddingTables

_ADAM_B1, _ADAM_B2, _ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass(frozen=True)
class FacetAdjacency:
    """K nonnegative matrices that sum exactly to the adjacency."""

    mats: list[np.ndarray]

    @property
    def k(self) -> int:
        return len(self.mats)

    @property
    def shape(self):
        return self.mats[0].shape

    def total(self) -> np.ndarray:
        return np.sum(self.mats, axis=0)


def decompose_adjacency(a, p, q) -> FacetAdjacency:
    """Split A into per-facet matrices A^k with A^k(i,j) proportional to
    P(i,k) Q(j,k), normalized so that sum_k A^k == A exactly. Cells whose
    factor product vanishes for every facet split uniformly."""
    a = np.asarray(a, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape[0] != a.shape[0] or q.shape[0] != a.shape[1]:
        raise ValidationError("factor shapes do not match the adjacency")
    if p.shape[1] != q.shape[1]:
        raise ValidationError("P and Q disagree on facet count")
    if (p < 0).any() or (q < 0).any():
        raise ValidationError("factors must be nonnegative")
    k = p.shape[1]
    denom = p @ q.T
    safe = np.where(denom > 0, denom, 1.0)
    mats = []
    for c in range(k):
        share = np.where(denom > 0, np.outer(p[:, c], q[:, c]) / safe, 1.0 / k)
        mats.append(a * share)
    return FacetAdjacency(mats=mats)


def facet_neighborhood(v: int, k: int, facet_adj: FacetAdjacency,
                       threshold: float = 0.0, side: str = "a",
                       mode: str = "bipartite") -> list[int]:
    """Node ids forming v's neighborhood under facet k.

    bipartite mode: other-type nodes j with A^k(v, j) > threshold.
    co mode: same-type nodes sharing an above-threshold facet-k neighbor.
    """
    if threshold < 0:
        raise ValidationError("threshold must be nonnegative")
    mat = facet_adj.mats[k]
    if side == "b":
        mat = mat.T
    elif side != "a":
        raise ValidationError(f"unknown side {side!r}")
    if mode == "bipartite":
        return [int(j) for j in np.nonzero(mat[v] > threshold)[0]]
    if mode == "co":
        mask = mat > threshold
        shared = mask @ mask[v]
        shared[v] = 0
        return [int(j) for j in np.nonzero(shared)[0]]
    raise ValidationError(f"unknown neighborhood mode {mode!r}")


@dataclass(frozen=True)
class GcnConfig:
    dim: int = 16                 # output dimension per facet
    depth: int = 2
    activation: str = "leaky_relu"   # or "linear"
    leaky_slope: float = 0.2
    threshold: float = 0.0
    neighbor_mode: str = "bipartite"  # or "co"
    # one negative per edge per full-batch pass keeps positive and
    # negative pressure balanced; more negatives push the score
    # equilibrium below zero, which breaks prior-weighted scoring
    learning_rate: float = 0.01
    iterations: int = 400
    negatives: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.depth < 1:
            raise ValidationError("dim and depth must be positive")
        if self.activation not in ("leaky_relu", "linear"):
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.neighbor_mode not in ("bipartite", "co"):
            raise ValidationError(f"unknown neighbor_mode {self.neighbor_mode!r}")
        if self.threshold < 0:
            raise ValidationError("threshold must be nonnegative")
        if self.learning_rate <= 0 or self.iterations < 1 or self.negatives < 1:
            raise ValidationError("bad optimizer settings")


@dataclass
class FacetGcn:
    """Parameters of one facet: free layer-0 vectors and layer weights."""

    x_a: np.ndarray             # (num_a, D)
    x_b: np.ndarray             # (num_b, D)
    w_a: list[np.ndarray]       # depth matrices (D, D)
    w_b: list[np.ndarray]

    def params(self) -> dict[str, np.ndarray]:
        out = {"x_a": self.x_a, "x_b": self.x_b}
        for d, w in enumerate(self.w_a):
            out[f"w_a{d}"] = w
        for d, w in enumerate(self.w_b):
            out[f"w_b{d}"] = w
        return out


@dataclass
class GcnModel:
    facets: list[FacetGcn]
    config: GcnConfig
    ops: list[dict] = field(default_factory=list)  # per-facet aggregation masks


def _identity_weights(dim, depth):
    return [np.eye(dim) for _ in range(depth)]


def init_gcn_model(num_a: int, num_b: int, facet_adj: FacetAdjacency,
                   config: GcnConfig, seed=None) -> GcnModel:
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(config.seed if seed is None else seed)
    facet_models = []
    d = config.dim
    for ss in root.spawn(facet_adj.k):
        rng = np.random.default_rng(ss)
        bound = 1.0 / math.sqrt(d)
        x_a = rng.uniform(-bound, bound, (num_a, d))
        x_b = rng.uniform(-bound, bound, (num_b, d))
        w_a = [rng.uniform(-bound, bound, (d, d)) for _ in range(config.depth)]
        w_b = [rng.uniform(-bound, bound, (d, d)) for _ in range(config.depth)]
        facet_models.append(FacetGcn(x_a, x_b, w_a, w_b))
    model = GcnModel(facets=facet_models, config=config)
    model.ops = [_facet_ops(facet_adj.mats[k], config) for k in range(facet_adj.k)]
    return model


def _facet_ops(mat, config):
    mask_ab = (mat > config.threshold).astype(np.float64)
    if config.neighbor_mode == "bipartite":
        mask_ba = mask_ab.T
        inv_a = 1.0 / (1.0 + mask_ab.sum(axis=1))
        inv_b = 1.0 / (1.0 + mask_ba.sum(axis=1))
        return {"mask_a": mask_ab, "mask_b": mask_ba,
                "inv_a": inv_a, "inv_b": inv_b, "coupled": True}
    co_a = ((mask_ab @ mask_ab.T) > 0).astype(np.float64)
    np.fill_diagonal(co_a, 0.0)
    co_b = ((mask_ab.T @ mask_ab) > 0).astype(np.float64)
    np.fill_diagonal(co_b, 0.0)
    return {"mask_a": co_a, "mask_b": co_b,
            "inv_a": 1.0 / (1.0 + co_a.sum(axis=1)),
            "inv_b": 1.0 / (1.0 + co_b.sum(axis=1)), "coupled": False}


def _act(s, config):
    if config.activation == "linear":
        return s
    return np.where(s > 0, s, config.leaky_slope * s)


def _act_grad(s, config):
    if config.activation == "linear":
        return np.ones_like(s)
    return np.where(s > 0, 1.0, config.leaky_slope)


def forward_facet(facet: FacetGcn, ops, config, keep_cache: bool = False):
    """Run both towers of one facet; returns (U, H[, cache])."""
    z_a, z_b = facet.x_a, facet.x_b
    cache = {"agg": [], "pre": [], "inputs": []}
    for d in range(config.depth):
        cache["inputs"].append((z_a, z_b))
        other_a = z_b if ops["coupled"] else z_a
        other_b = z_a if ops["coupled"] else z_b
        m_a = (z_a + ops["mask_a"] @ other_a) * ops["inv_a"][:, None]
        m_b = (z_b + ops["mask_b"] @ other_b) * ops["inv_b"][:, None]
        s_a = m_a @ facet.w_a[d].T
        s_b = m_b @ facet.w_b[d].T
        cache["agg"].append((m_a, m_b))
        cache["pre"].append((s_a, s_b))
        z_a, z_b = _act(s_a, config), _act(s_b, config)
    if keep_cache:
        return z_a, z_b, cache
    return z_a, z_b


def backward_facet(facet: FacetGcn, ops, config, cache, d_u, d_h):
    """Reverse accumulation through the aggregation stack.

    d_u/d_h are the loss gradients at the final layer outputs. Returns a
    dict of gradients matching facet.params()."""
    grads = {f"w_a{d}": np.zeros_like(facet.w_a[d]) for d in range(config.depth)}
    grads.update({f"w_b{d}": np.zeros_like(facet.w_b[d]) for d in range(config.depth)})
    dz_a, dz_b = d_u, d_h
    for d in reversed(range(config.depth)):
        s_a, s_b = cache["pre"][d]
        m_a, m_b = cache["agg"][d]
        ds_a = dz_a * _act_grad(s_a, config)
        ds_b = dz_b * _act_grad(s_b, config)
        grads[f"w_a{d}"] += ds_a.T @ m_a
        grads[f"w_b{d}"] += ds_b.T @ m_b
        t_a = (ds_a @ facet.w_a[d]) * ops["inv_a"][:, None]
        t_b = (ds_b @ facet.w_b[d]) * ops["inv_b"][:, None]
        if ops["coupled"]:
            dz_a = t_a + ops["mask_b"].T @ t_b
            dz_b = t_b + ops["mask_a"].T @ t_a
        else:
            dz_a = t_a + ops["mask_a"].T @ t_a
            dz_b = t_b + ops["mask_b"].T @ t_b
    grads["x_a"] = dz_a
    grads["x_b"] = dz_b
    return grads


def gcn_forward(model: GcnModel, facet_adj: FacetAdjacency, k: int,
                node_type: str, batch) -> np.ndarray:
    """Final-layer embeddings of `batch` nodes for facet k."""
    if not model.ops:
        model.ops = [_facet_ops(m, model.config) for m in facet_adj.mats]
    u, h = forward_facet(model.facets[k], model.ops[k], model.config)
    rows = u if node_type == "a" else h
    return rows[np.asarray(list(batch), dtype=np.int64)]


def gcn_loss_and_grads(facet: FacetGcn, ops, config, edge_idx, edge_w,
                       neg_idx):
    """Edge-level loss for one facet and its parameter gradients.

    edge_idx: (E, 2) int array of (a, b) pairs with positive facet mass;
    edge_w: (E,) weights (the facet matrix entries); neg_idx: (E, R) of
    type-B negatives per edge. The loss is the weight-normalized sum of
    per-edge negative-sampling losses.
    """
    u, h, cache = forward_facet(facet, ops, config, keep_cache=True)
    ai, bi = edge_idx[:, 0], edge_idx[:, 1]
    total_w = edge_w.sum()
    if total_w <= 0:
        raise ValidationError("facet has no positive edges")
    wn = edge_w / total_w
    u_e = u[ai]                              # (E, D)
    s_pos = np.clip((u_e * h[bi]).sum(axis=1), -30, 30)
    h_neg = h[neg_idx]                       # (E, R, D)
    s_neg = np.clip(np.einsum("ed,erd->er", u_e, h_neg), -30, 30)
    e_neg = np.exp(s_neg)
    loss = float(wn @ (np.log1p(np.exp(-s_pos)) + np.log1p(e_neg).sum(axis=1)))

    p_pos = 1.0 / (1.0 + np.exp(-s_pos))
    p_neg = e_neg / (1.0 + e_neg)
    coef_pos = wn * (p_pos - 1.0)            # (E,)
    coef_neg = wn[:, None] * p_neg           # (E, R)

    d_u = np.zeros_like(u)
    d_h = np.zeros_like(h)
    np.add.at(d_u, ai, coef_pos[:, None] * h[bi]
              + np.einsum("er,erd->ed", coef_neg, h_neg))
    np.add.at(d_h, bi, coef_pos[:, None] * u_e)
    np.add.at(d_h, neg_idx.reshape(-1),
              (coef_neg[:, :, None] * u_e[:, None, :]).reshape(-1, u.shape[1]))

    grads = backward_facet(facet, ops, config, cache, d_u, d_h)
    return loss, grads


class GcnTrainResult(NamedTuple):
    tables: EmbeddingTables
    model: GcnModel
    loss_traces: list[list[float]]


def train_gcn(bipartite, facet_adj: FacetAdjacency,
              config: GcnConfig) -> GcnTrainResult:
    """Train every facet's encoder pair independently with Adam on the
    facet-restricted edge loss; facets with no edges stay at init."""
    num_a, num_b = bipartite.num_a, bipartite.num_b
    if facet_adj.shape != (num_a, num_b):
        raise ValidationError("facet adjacency does not match the graph")
    root = np.random.SeedSequence(config.seed)
    init_ss, *facet_ss = root.spawn(1 + facet_adj.k)
    model = init_gcn_model(num_a, num_b, facet_adj, config, seed=init_ss)

    deg_b = bipartite.degrees_b().astype(np.float64)
    neg_weights = deg_b ** 0.75
    if neg_weights.sum() <= 0:
        raise ValidationError("graph has no type-B edges")
    neg_cdf = np.cumsum(neg_weights)

    traces: list[list[float]] = []
    u_out = np.zeros((num_a, facet_adj.k, config.dim))
    h_out = np.zeros((num_b, facet_adj.k, config.dim))
    for k in range(facet_adj.k):
        facet = model.facets[k]
        ops = model.ops[k]
        mat = facet_adj.mats[k]
        rows, cols = np.nonzero(mat > config.threshold)
        trace: list[float] = []
        if len(rows) == 0:
            traces.append(trace)
            u, h = forward_facet(facet, ops, config)
            u_out[:, k], h_out[:, k] = u, h
            continue
        edge_idx = np.stack([rows, cols], axis=1)
        edge_w = mat[rows, cols]
        rng = np.random.default_rng(facet_ss[k])
        params = facet.params()
        m_state = {n: np.zeros_like(p) for n, p in params.items()}
        v_state = {n: np.zeros_like(p) for n, p in params.items()}
        for it in range(1, config.iterations + 1):
            draws = rng.random((len(rows), config.negatives)) * neg_cdf[-1]
            neg_idx = np.minimum(np.searchsorted(neg_cdf, draws, side="right"),
                                 num_b - 1)
            loss, grads = gcn_loss_and_grads(facet, ops, config,
                                             edge_idx, edge_w, neg_idx)
            if not math.isfinite(loss):
                raise NumericsError(f"facet {k} diverged at iteration {it}")
            trace.append(loss)
            for name, p in params.items():
                g = grads[name]
                m_state[name] = _ADAM_B1 * m_state[name] + (1 - _ADAM_B1) * g
                v_state[name] = _ADAM_B2 * v_state[name] + (1 - _ADAM_B2) * g * g
                m_hat = m_state[name] / (1 - _ADAM_B1 ** it)
                v_hat = v_state[name] / (1 - _ADAM_B2 ** it)
                p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
        traces.append(trace)
        u, h = forward_facet(facet, ops, config)
        u_out[:, k], h_out[:, k] = u, h

    tables = EmbeddingTables(u=u_out, h=h_out)
    tables.check_finite("after GCN training")
    return GcnTrainResult(tables=tables, model=model, loss_traces=traces)


def save_facet_adjacency(path, facet_adj: FacetAdjacency) -> None:
    """Sparse triple export: lines `k i j value` for every positive cell."""
    with open(path, "w", encoding="utf-8") as fh:
        for k, mat in enumerate(facet_adj.mats):
            for i, j in zip(*np.nonzero(mat)):
                fh.write(f"{k} {i} {j} {mat[i, j]:.17g}\n")
