import numpy as np
import pytest
from conftest import finite_difference, make_planted_bipartite, rel_error

from polyembed import evaluation, facets, graph, polygcn
from polyembed.errors import ValidationError
from polyembed.polygcn import (FacetAdjacency, GcnConfig, decompose_adjacency,
                               facet_neighborhood, forward_facet,
                               gcn_loss_and_grads, init_gcn_model, train_gcn)


def random_instance(seed, num_a=5, num_b=4, k=3):
    rng = np.random.default_rng(seed)
    a = rng.random((num_a, num_b)) * (rng.random((num_a, num_b)) < 0.7)
    if a.max() == 0:
        a[0, 0] = 1.0
    p = rng.random((num_a, k)) + 0.05
    q = rng.random((num_b, k)) + 0.05
    return a, p, q


# ------------------------------------------------------------ decomposition

def test_decompose_k1_returns_adjacency():
    a, _, _ = random_instance(0)
    fa = decompose_adjacency(a, np.ones((5, 1)), np.ones((4, 1)))
    assert np.allclose(fa.mats[0], a)


def test_decompose_one_hot_routes_whole_edge():
    a = np.array([[2.0]])
    p = np.array([[1.0, 0.0]])
    q = np.array([[1.0, 0.0]])
    fa = decompose_adjacency(a, p, q)
    assert fa.mats[0][0, 0] == 2.0
    assert fa.mats[1][0, 0] == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_decompose_partition_of_unity(seed):
    a, p, q = random_instance(seed)
    fa = decompose_adjacency(a, p, q)
    assert np.abs(fa.total() - a).max() < 1e-12
    for mat in fa.mats:
        assert (mat[a == 0] == 0).all()
        assert (mat >= 0).all()


def test_decompose_zero_denominator_splits_uniformly():
    a = np.array([[3.0]])
    p = np.array([[0.0, 0.0]])
    q = np.array([[1.0, 1.0]])
    fa = decompose_adjacency(a, p, q)
    assert fa.mats[0][0, 0] == pytest.approx(1.5)
    assert fa.mats[1][0, 0] == pytest.approx(1.5)


def test_decompose_shape_mismatch():
    a, p, q = random_instance(1)
    with pytest.raises(ValidationError):
        decompose_adjacency(a, p[:3], q)


# ------------------------------------------------------------ neighborhoods

def test_facet_neighborhood_empty():
    fa = FacetAdjacency(mats=[np.zeros((3, 3))])
    assert facet_neighborhood(0, 0, fa) == []


def test_facet_neighborhood_k1_equals_graph_neighborhood():
    a, _, _ = random_instance(2)
    fa = decompose_adjacency(a, np.ones((5, 1)), np.ones((4, 1)))
    for v in range(5):
        assert facet_neighborhood(v, 0, fa) == list(np.nonzero(a[v] > 0)[0])


def test_co_neighborhood_via_shared_item():
    a = np.zeros((3, 2))
    a[0, 0] = a[1, 0] = 1.0   # users 0 and 1 both link to item 0
    fa = FacetAdjacency(mats=[a])
    assert facet_neighborhood(0, 0, fa, mode="co") == [1]
    assert facet_neighborhood(1, 0, fa, mode="co") == [0]
    assert facet_neighborhood(2, 0, fa, mode="co") == []


def test_facet_neighborhood_b_side():
    a = np.zeros((3, 2))
    a[0, 1] = 1.0
    fa = FacetAdjacency(mats=[a])
    assert facet_neighborhood(1, 0, fa, side="b") == [0]


# ---------------------------------------------------------------- forward

def identity_model(num_a, num_b, fa, dim, depth=1):
    config = GcnConfig(dim=dim, depth=depth, activation="linear", seed=0)
    model = init_gcn_model(num_a, num_b, fa, config)
    for facet in model.facets:
        for d in range(depth):
            facet.w_a[d] = np.eye(dim)
            facet.w_b[d] = np.eye(dim)
    return model, config


def test_forward_isolated_node_keeps_layer0_vector():
    a = np.zeros((2, 2))
    a[1, 1] = 1.0   # node 0 isolated under this facet
    fa = FacetAdjacency(mats=[a])
    model, config = identity_model(2, 2, fa, dim=3, depth=1)
    u, _ = forward_facet(model.facets[0], model.ops[0], config)
    assert np.allclose(u[0], model.facets[0].x_a[0])


def test_forward_mean_of_identical_vectors():
    a = np.ones((1, 2))   # one user linked to two items
    fa = FacetAdjacency(mats=[a])
    model, config = identity_model(1, 2, fa, dim=3, depth=1)
    x = np.array([0.3, -0.2, 0.5])
    model.facets[0].x_a[0] = x
    model.facets[0].x_b[0] = x
    model.facets[0].x_b[1] = x
    u, _ = forward_facet(model.facets[0], model.ops[0], config)
    assert np.allclose(u[0], x)


def dense_reference_forward(facet, mask_ab, config):
    """Independent dense implementation of the two-tower forward pass."""
    mask_ba = mask_ab.T
    za, zb = facet.x_a.copy(), facet.x_b.copy()
    for d in range(config.depth):
        na, nb = za.shape[0], zb.shape[0]
        ma = np.zeros_like(za)
        for i in range(na):
            stack = [za[i]] + [zb[j] for j in range(nb) if mask_ab[i, j] > 0]
            ma[i] = np.mean(stack, axis=0)
        mb = np.zeros_like(zb)
        for j in range(nb):
            stack = [zb[j]] + [za[i] for i in range(na) if mask_ba[j, i] > 0]
            mb[j] = np.mean(stack, axis=0)
        sa, sb = ma @ facet.w_a[d].T, mb @ facet.w_b[d].T
        if config.activation == "leaky_relu":
            za = np.where(sa > 0, sa, config.leaky_slope * sa)
            zb = np.where(sb > 0, sb, config.leaky_slope * sb)
        else:
            za, zb = sa, sb
    return za, zb


@pytest.mark.parametrize("seed", range(8))
def test_forward_matches_dense_reference(seed):
    a, p, q = random_instance(seed, num_a=4, num_b=4, k=2)
    fa = decompose_adjacency(a, p, q)
    config = GcnConfig(dim=3, depth=2, seed=seed)
    model = init_gcn_model(4, 4, fa, config)
    for k in range(2):
        u, h = forward_facet(model.facets[k], model.ops[k], config)
        ru, rh = dense_reference_forward(model.facets[k],
                                         (fa.mats[k] > 0).astype(float), config)
        assert np.abs(u - ru).max() < 1e-10
        assert np.abs(h - rh).max() < 1e-10


def test_gcn_forward_batch_lookup():
    a, p, q = random_instance(3, num_a=4, num_b=4, k=2)
    fa = decompose_adjacency(a, p, q)
    config = GcnConfig(dim=3, seed=0)
    model = init_gcn_model(4, 4, fa, config)
    rows = polygcn.gcn_forward(model, fa, 1, "a", [2, 0])
    u, _ = forward_facet(model.facets[1], model.ops[1], config)
    assert np.allclose(rows, u[[2, 0]])


# ---------------------------------------------------------------- gradients

@pytest.mark.parametrize("seed", range(8))
def test_gcn_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    a, p, q = random_instance(seed, num_a=3, num_b=3, k=2)
    fa = decompose_adjacency(a, p, q)
    config = GcnConfig(dim=2, depth=2, seed=seed, negatives=2)
    model = init_gcn_model(3, 3, fa, config)
    facet, ops = model.facets[0], model.ops[0]
    mat = fa.mats[0]
    rows, cols = np.nonzero(mat > 0)
    edge_idx = np.stack([rows, cols], axis=1)
    edge_w = mat[rows, cols]
    neg_idx = rng.integers(0, 3, (len(rows), 2))
    _, grads = gcn_loss_and_grads(facet, ops, config, edge_idx, edge_w, neg_idx)
    analytic_all, numeric_all = [], []
    for name, p_arr in facet.params().items():
        numeric = finite_difference(
            lambda: gcn_loss_and_grads(facet, ops, config, edge_idx,
                                       edge_w, neg_idx)[0], p_arr)
        analytic_all.append(grads[name].ravel())
        numeric_all.append(numeric.ravel())
    # per-instance relative error over the full concatenated gradient;
    # per-block ratios are meaningless for blocks with near-zero gradient
    assert rel_error(np.concatenate(analytic_all),
                     np.concatenate(numeric_all)) < 1e-4


# ------------------------------------------------------------------- train

def test_empty_facet_stays_at_initialization():
    a = np.zeros((3, 3))
    a[0, 0] = a[1, 1] = 1.0
    fa = FacetAdjacency(mats=[a, np.zeros((3, 3))])
    g = graph.from_edges([(0, 0), (1, 1)], kind="bipartite", num_a=3, num_b=3)
    config = GcnConfig(dim=4, iterations=30, seed=5)
    result = train_gcn(g, fa, config)
    fresh = init_gcn_model(3, 3, fa, config,
                           seed=np.random.SeedSequence(5).spawn(3)[0])
    trained = result.model.facets[1].params()
    for name, p_arr in fresh.facets[1].params().items():
        assert np.array_equal(trained[name], p_arr), name
    assert result.loss_traces[1] == []


def test_facet_independence_checksums():
    a, p, q = random_instance(4, num_a=4, num_b=4, k=2)
    fa = decompose_adjacency(a, p, q)
    g = graph.from_edges([(int(i), int(j), float(a[i, j]))
                          for i, j in zip(*np.nonzero(a))],
                         kind="bipartite", num_a=4, num_b=4)
    config = GcnConfig(dim=3, iterations=10, seed=6)
    model = init_gcn_model(4, 4, fa, config,
                           seed=np.random.SeedSequence(6).spawn(3)[0])
    before = {k: {n: p_arr.copy() for n, p_arr in f.params().items()}
              for k, f in enumerate(model.facets)}
    result = train_gcn(g, fa, config)
    # facet 0 trained: must differ from init; at no point did it touch facet 1's init
    changed = any(not np.array_equal(result.model.facets[0].params()[n],
                                     before[0][n]) for n in before[0])
    assert changed


def test_training_loss_decreases_and_output_finite():
    g = make_planted_bipartite(1, n_side=20, p_in=0.5, p_out=0.05)
    a = graph.adjacency_dense(g)
    nmf = facets.asymmetric_nmf(a, 2, alpha=0.05, seed=1)
    fa = decompose_adjacency(a, *nmf.factors)
    config = GcnConfig(dim=8, iterations=80, seed=1)
    result = train_gcn(g, fa, config)
    assert result.loss_traces[0][-1] < result.loss_traces[0][0]
    assert np.isfinite(result.tables.u).all()


def test_planted_fixture_auc():
    g = make_planted_bipartite(0)
    train_g, test_edges = evaluation.split_links(g, "latest-per-user", seed=0)
    a = graph.adjacency_dense(train_g)
    nmf = facets.asymmetric_nmf(a, 2, alpha=0.05, seed=0)
    prior = facets.FacetPrior.from_factors(*nmf.factors)
    fa = decompose_adjacency(a, prior.p, prior.q)
    result = train_gcn(train_g, fa, GcnConfig(dim=16, seed=0))
    report = evaluation.link_prediction_report(
        train_g, test_edges, result.tables, prior, "cross-diagonal",
        num_negatives=35, ks=(10,), seed=0)
    assert report.auc >= 0.75


def test_train_deterministic():
    g = make_planted_bipartite(2, n_side=16, p_in=0.5, p_out=0.05)
    a = graph.adjacency_dense(g)
    nmf = facets.asymmetric_nmf(a, 2, seed=2)
    fa = decompose_adjacency(a, *nmf.factors)
    config = GcnConfig(dim=4, iterations=40, seed=3)
    r1 = train_gcn(g, fa, config)
    r2 = train_gcn(g, fa, config)
    assert np.array_equal(r1.tables.u, r2.tables.u)
    assert np.array_equal(r1.tables.h, r2.tables.h)


def test_co_neighborhood_mode_trains():
    g = make_planted_bipartite(3, n_side=12, p_in=0.5, p_out=0.05)
    a = graph.adjacency_dense(g)
    nmf = facets.asymmetric_nmf(a, 2, seed=3)
    fa = decompose_adjacency(a, *nmf.factors)
    config = GcnConfig(dim=4, iterations=20, neighbor_mode="co", seed=0)
    result = train_gcn(g, fa, config)
    assert np.isfinite(result.tables.u).all()


def test_facet_adjacency_export(tmp_path):
    a = np.array([[1.5, 0.0], [0.0, 2.5]])
    fa = FacetAdjacency(mats=[a])
    out = tmp_path / "fadj.txt"
    polygcn.save_facet_adjacency(out, fa)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("0 0 0 1.5")
    assert len(lines) == 2
