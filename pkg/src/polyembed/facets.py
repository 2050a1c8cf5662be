"""Node-facet priors estimated by NMF, plus facet-distribution arithmetic.

The global association between nodes and facets is obtained by factorizing
the adjacency matrix: symmetrically (A ~ P P^T) for homogeneous networks,
asymmetrically (A ~ P Q^T) for bipartite ones. Row-normalizing the factors
gives each node a probability distribution over facets; everything the
trainers need (observation distributions, conditional distributions,
facet sampling) is derived from those rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ParseError, ValidationError
from .walks import Observation

_EPS = 1e-12


@dataclass(frozen=True)
class FacetPrior:
    """Nonnegative factor matrices and the per-node facet distributions.

    `p`/`dist` cover the homogeneous node set, or the type-A side of a
    bipartite network; `q`/`dist_b` hold the type-B side when present.
    """

    p: np.ndarray                 # (N, K) nonnegative factor
    dist: np.ndarray              # (N, K) row-stochastic
    alpha: float = 0.05
    q: np.ndarray | None = None   # (M, K)
    dist_b: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.p.shape[1]

    @property
    def num_nodes(self) -> int:
        return self.p.shape[0]

    @property
    def bipartite(self) -> bool:
        return self.q is not None

    @classmethod
    def from_factor(cls, p, alpha=0.05):
        p = np.asarray(p, dtype=np.float64)
        return cls(p=p, dist=normalize_prior(p), alpha=alpha)

    @classmethod
    def from_factors(cls, p, q, alpha=0.05):
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if p.shape[1] != q.shape[1]:
            raise ValidationError("P and Q must share the facet dimension")
        return cls(p=p, dist=normalize_prior(p), alpha=alpha,
                   q=q, dist_b=normalize_prior(q))

    @classmethod
    def uniform(cls, num_nodes, k=1, num_b=None, alpha=0.05):
        """Maximum-uncertainty prior; the K=1 case is the single-facet model."""
        p = np.ones((num_nodes, k))
        q = np.ones((num_b, k)) if num_b is not None else None
        if q is None:
            return cls.from_factor(p, alpha=alpha)
        return cls.from_factors(p, q, alpha=alpha)


class NmfResult(NamedTuple):
    factors: tuple[np.ndarray, ...]   # (P,) or (P, Q)
    objective: float
    iterations: int
    trace: np.ndarray                 # objective value per iteration, trace[0] at init


def _validate_nonnegative(a, name):
    if not np.isfinite(a).all():
        raise ValidationError(f"{name} contains non-finite entries")
    if (a < 0).any():
        raise ValidationError(f"{name} contains negative entries")


def _init_factor(rng, shape, mean, k):
    # zero init is a fixed point of multiplicative updates; draw from (0, 1]
    scale = np.sqrt(mean / k)
    return (1.0 - rng.random(shape)) * scale


def symmetric_nmf(a, k, alpha=0.05, max_iters=500, tol=1e-5, seed=0) -> NmfResult:
    """Factorize a symmetric nonnegative matrix as A ~ P P^T.

    Minimizes ||A - P P^T||_F^2 + alpha ||P||_F^2 with a damped
    multiplicative update (damping 0.5); the objective never increases.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("A must be square")
    _validate_nonnegative(a, "A")
    asym = np.abs(a - a.T).max() if a.size else 0.0
    if asym > 1e-9:
        raise ValidationError(f"A is not symmetric (max asymmetry {asym:g})")
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= K <= {n}, got {k}")
    if alpha < 0:
        raise ValidationError("alpha must be nonnegative")

    mean = a.mean() if a.size else 0.0
    if mean == 0.0:
        p = np.zeros((n, k))
        return NmfResult((p,), 0.0, 0, np.zeros(1))

    rng = np.random.default_rng(seed)
    p = _init_factor(rng, (n, k), mean, k)

    def objective(p):
        r = a - p @ p.T
        return float((r * r).sum() + alpha * (p * p).sum())

    trace = [objective(p)]
    beta = 0.5
    iterations = 0
    for iterations in range(1, max_iters + 1):
        ap = a @ p
        denom = p @ (p.T @ p) + 0.5 * alpha * p + _EPS
        p = p * (1.0 - beta + beta * ap / denom)
        obj = objective(p)
        trace.append(obj)
        prev = trace[-2]
        if prev - obj < tol * max(prev, _EPS):
            break
    return NmfResult((p,), trace[-1], iterations, np.array(trace))


def asymmetric_nmf(a, k, alpha=0.05, max_iters=500, tol=1e-5, seed=0) -> NmfResult:
    """Factorize a nonnegative matrix as A ~ P Q^T (Lee-Seung updates
    with a Tikhonov term); the objective never increases."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError("A must be a matrix")
    _validate_nonnegative(a, "A")
    n, m = a.shape
    if not 1 <= k <= min(n, m):
        raise ValidationError(f"need 1 <= K <= {min(n, m)}, got {k}")
    if alpha < 0:
        raise ValidationError("alpha must be nonnegative")

    mean = a.mean() if a.size else 0.0
    if mean == 0.0:
        return NmfResult((np.zeros((n, k)), np.zeros((m, k))), 0.0, 0, np.zeros(1))

    rng = np.random.default_rng(seed)
    p = _init_factor(rng, (n, k), mean, k)
    q = _init_factor(rng, (m, k), mean, k)

    def objective(p, q):
        r = a - p @ q.T
        return float((r * r).sum() + alpha * ((p * p).sum() + (q * q).sum()))

    trace = [objective(p, q)]
    iterations = 0
    for iterations in range(1, max_iters + 1):
        p = p * (a @ q) / (p @ (q.T @ q) + alpha * p + _EPS)
        q = q * (a.T @ p) / (q @ (p.T @ p) + alpha * q + _EPS)
        obj = objective(p, q)
        trace.append(obj)
        prev = trace[-2]
        if prev - obj < tol * max(prev, _EPS):
            break
    return NmfResult((p, q), trace[-1], iterations, np.array(trace))


def normalize_prior(p) -> np.ndarray:
    """Row-normalize a nonnegative matrix; all-zero rows become uniform."""
    p = np.asarray(p, dtype=np.float64)
    _validate_nonnegative(p, "prior matrix")
    sums = p.sum(axis=1, keepdims=True)
    k = p.shape[1]
    out = np.where(sums > 0, p / np.where(sums > 0, sums, 1.0), 1.0 / k)
    return out


def observation_distribution(obs: Observation, prior: FacetPrior) -> np.ndarray:
    """Facet distribution of a walk-window observation: the average of the
    center's and all context nodes' distributions."""
    if len(obs.context) == 0:
        raise ValidationError("observation has an empty context")
    rows = prior.dist[list(obs.context)]
    return (prior.dist[obs.center] + rows.sum(axis=0)) / (len(obs.context) + 1)


def edge_observation_distribution(prior: FacetPrior, a: int, b: int) -> np.ndarray:
    """Facet distribution of an edge observation: average of both endpoints."""
    if prior.dist_b is None:
        raise ValidationError("edge observations need a bipartite prior")
    return 0.5 * (prior.dist[a] + prior.dist_b[b])


def conditional_distribution(p_v, p_o, mode: str = "min") -> np.ndarray:
    """Distribution a node's facet is sampled from within one observation.

    mode "min" keeps only facets plausible for both the node and the
    observation (elementwise min, renormalized); an all-zero min falls
    back to the node's own prior. mode "observation" returns p_o itself.
    """
    p_v = np.asarray(p_v, dtype=np.float64)
    p_o = np.asarray(p_o, dtype=np.float64)
    if p_v.shape != p_o.shape:
        raise ValidationError("facet distributions differ in length")
    if mode == "observation":
        return p_o.copy()
    if mode != "min":
        raise ValidationError(f"unknown conditional mode {mode!r}")
    m = np.minimum(p_v, p_o)
    s = m.sum()
    if s <= 0.0:
        return p_v.copy()
    return m / s


def sample_facet(dist, rng) -> int:
    """Draw a facet index by inverse-CDF sampling.

    A length-1 distribution returns 0 without consuming randomness, so a
    single-facet model uses exactly the same random stream as a model
    with no facet machinery at all.
    """
    if len(dist) == 1:
        return 0
    cdf = np.cumsum(dist)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, len(dist) - 1)


def entropy(dist) -> float:
    """Shannon entropy in nats; zero entries contribute nothing."""
    d = np.asarray(dist, dtype=np.float64)
    nz = d[d > 0]
    return float(-(nz * np.log(nz)).sum())


def save_prior_file(path, dist) -> None:
    """Write one facet distribution matrix: header `N K`, rows
    `node_id p_1 ... p_K`."""
    dist = np.asarray(dist, dtype=np.float64)
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{dist.shape[0]} {dist.shape[1]}\n")
        for i, row in enumerate(dist):
            fh.write(" ".join([str(i)] + [f"{v:.17g}" for v in row]) + "\n")


def load_prior_file(path) -> np.ndarray:
    """Read a facet distribution matrix written by save_prior_file;
    rows are renormalized on load."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(f"{path}: bad header, expected 'N K'")
        n, k = int(header[0]), int(header[1])
        out = np.zeros((n, k))
        seen = np.zeros(n, dtype=bool)
        for line_no, line in enumerate(fh, start=2):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != k + 1:
                raise ParseError(f"{path} line {line_no}: expected {k + 1} fields")
            idx = int(fields[0])
            if not 0 <= idx < n:
                raise ParseError(f"{path} line {line_no}: node id {idx} out of range")
            out[idx] = [float(v) for v in fields[1:]]
            seen[idx] = True
    if not seen.all():
        raise ParseError(f"{path}: missing rows for {int((~seen).sum())} node(s)")
    return normalize_prior(out)


def load_prior(path, path_b=None, alpha=0.05) -> FacetPrior:
    """Assemble a FacetPrior from one (homogeneous) or two (bipartite)
    prior files."""
    p = load_prior_file(path)
    if path_b is None:
        return FacetPrior.from_factor(p, alpha=alpha)
    q = load_prior_file(path_b)
    return FacetPrior.from_factors(p, q, alpha=alpha)
