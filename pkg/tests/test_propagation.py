import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from dynhomophily.graph import GraphError, build_snapshot
from dynhomophily.propagation import Representations, dump_rows, gcn_forward, gcn_layer, iter_layers, mean_aggregator

from conftest import temporal_graphs

TRI = [("a", "b"), ("b", "c"), ("a", "c")]


def test_path_example(path_ab):
    out = gcn_forward(path_ab, 1)
    assert out["a"][0] == 0.5 and out["b"][0] == 0.5


def test_layer_zero_is_identity(path_ab):
    assert np.array_equal(gcn_forward(path_ab, 0).values, path_ab.features)


def test_triangle_two_layers():
    s = build_snapshot(TRI, dict.fromkeys("abc", 0))
    reps = list(iter_layers(s, 2, np.array([0.0, 0.0, 3.0])))
    assert np.allclose(reps[1].values, 1.0) and np.allclose(reps[2].values, 1.0)


def test_isolated_node_unchanged():
    s = build_snapshot([("a", "b")], {"a": 0, "b": 0, "z": 0})
    out = gcn_forward(s, 3, np.array([1.0, 2.0, 7.0]))
    assert out["z"][0] == 7.0


def test_gcn_layer_reorders_input(path_ab):
    r = Representations.from_mapping(path_ab, {"b": 1.0, "a": 0.0})
    shuffled = Representations(0, ("b", "a"), np.array([[1.0], [0.0]]))
    assert np.array_equal(gcn_layer(path_ab, r).values, gcn_layer(path_ab, shuffled).values)
    with pytest.raises(GraphError):
        gcn_layer(path_ab, Representations(0, ("a",), np.array([[0.0]])))


def test_errors():
    s = build_snapshot([], {"a": 0})
    with pytest.raises(GraphError):
        gcn_forward(s, 1)
    with pytest.raises(ValueError):
        gcn_forward(s, -1, np.zeros(1))


def test_aggregator_row_stochastic():
    s = build_snapshot([(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], dict.fromkeys(range(5), 0))
    assert np.allclose(np.asarray(mean_aggregator(s).sum(axis=1)).ravel(), 1.0)


def test_dump_rows(path_ab):
    rows = list(dump_rows(list(iter_layers(path_ab, 1))))
    assert rows == [("a", 0, 0, 0.0), ("b", 0, 0, 1.0), ("a", 1, 0, 0.5), ("b", 1, 0, 0.5)]


@settings(max_examples=60, deadline=None)
@given(temporal_graphs(horizon=1), st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_properties(g, seed, dim):
    s = g[0]
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, s.num_nodes, dim))
    a, b = rng.normal(size=2)
    lin = gcn_forward(s, 2, a * x + b * y).values
    assert np.allclose(lin, a * gcn_forward(s, 2, x).values + b * gcn_forward(s, 2, y).values, atol=1e-10)

    prev = None
    for rep in iter_layers(s, 4, x):
        if prev is not None:
            assert np.all(rep.values.min(axis=0) >= prev.min(axis=0) - 1e-12)
            assert np.all(rep.values.max(axis=0) <= prev.max(axis=0) + 1e-12)
        prev = rep.values

    const = np.full((s.num_nodes, dim), 3.25)
    assert np.allclose(gcn_forward(s, 3, const).values, 3.25)
    assert np.allclose(gcn_forward(s, 1, x).values, oracles.mean_aggregate(s, x.tolist()), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    n = 8
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3]
    x = {v: rng.normal() for v in range(n)}
    perm = rng.permutation(n)
    s1 = build_snapshot(edges, dict.fromkeys(range(n), 0), features={v: [x[v]] for v in range(n)})
    s2 = build_snapshot(edges, {int(v): 0 for v in perm}, features={int(v): [x[v]] for v in perm}, nodes=perm.tolist())
    a, b = gcn_forward(s1, 2).as_dict(), gcn_forward(s2, 2).as_dict()
    for v in range(n):
        assert a[v][0] == pytest.approx(b[v][0], abs=1e-12)


def test_spread_shrinks_on_connected_graph():
    rng = np.random.default_rng(3)
    s = build_snapshot([(i, i + 1) for i in range(9)] + [(0, 5)], dict.fromkeys(range(10), 0))
    spreads = [np.ptp(r.values) for r in iter_layers(s, 10, rng.normal(size=10))]
    assert all(b <= a + 1e-12 for a, b in zip(spreads, spreads[1:]))
