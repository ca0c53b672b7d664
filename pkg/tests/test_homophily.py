import math

import numpy as np
import pytest
from hypothesis import given, settings

import oracles
from dynhomophily.graph import EventStream, GraphError, TemporalGraph, build_snapshot, sort_classes
from dynhomophily.homophily import (
    class_dynamic_homophily,
    compatibility_matrix,
    dynamic_homophily,
    eligible_nodes,
    homophily_series,
    local_static_homophily,
    static_homophily,
    windowed_dynamic_homophily,
)

from conftest import temporal_graphs

TRI = [("a", "b"), ("b", "c"), ("a", "c")]


def pair(edges0, lab0, lab1, edges1=None):
    s0 = build_snapshot(edges0, lab0)
    s1 = build_snapshot(edges0 if edges1 is None else edges1, lab1)
    return TemporalGraph((s0, s1))


def test_local_static_examples():
    assert local_static_homophily(build_snapshot([], {"i": 1}), "i") == 1.0
    s = build_snapshot([("i", "x"), ("i", "y")], {"i": 1, "x": -1, "y": -1})
    assert local_static_homophily(s, "i") == pytest.approx(1 / 3)
    assert local_static_homophily(build_snapshot(TRI, dict.fromkeys("abc", 0)), "a") == 1.0


def test_static_examples():
    assert static_homophily(build_snapshot([], {"a": 1, "b": -1, "c": 1})) == 1.0
    assert static_homophily(build_snapshot([("a", "b")], {"a": 1, "b": -1})) == 0.5
    assert static_homophily(build_snapshot(TRI, dict.fromkeys("abc", 2))) == 1.0


def test_static_open_neighborhoods():
    s = build_snapshot([("a", "b"), ("b", "c")], {"a": 1, "b": 1, "c": -1})
    # a: 1/1, b: 1/2, c: 0/1
    assert static_homophily(s, self_loops=False) == pytest.approx(0.5)


def test_unlabeled_neighbor_raises():
    s = build_snapshot([("a", "b")], {"a": 1}, nodes=["a", "b"])
    with pytest.raises(GraphError):
        static_homophily(s)


def test_empty_snapshot_raises():
    with pytest.raises(GraphError):
        static_homophily(build_snapshot([], {}))


def test_constant_intra_class():
    lab = {"a": 0, "b": 0, "c": 1, "d": 1}
    g = pair([("a", "b"), ("c", "d")], lab, lab)
    assert class_dynamic_homophily(g, 0, 0) == 1.0
    assert class_dynamic_homophily(g, 0, 1) == 1.0
    assert dynamic_homophily(g, 0).h_dynamic == 1.0
    assert np.array_equal(compatibility_matrix(g, 0).entries, np.eye(2))


def test_all_future_labels_disagree():
    g = pair([("a", "b")], {"a": 0, "b": 0}, {"a": 1, "b": 1})
    assert class_dynamic_homophily(g, 0, 1) == 0.0


def test_binary_average_of_levels():
    # future +1 nodes see only +1 now, future -1 nodes see only +1 now
    g = pair([("a", "b")], {"a": 1, "b": 1}, {"a": 1, "b": -1})
    lv = dynamic_homophily(g, 0)
    assert (lv.h_plus, lv.h_minus) == (1.0, 0.0)
    assert lv.h_dynamic == 0.5


def test_dynamic_high_while_static_low():
    # the mixed pair e-f drags static homophily down but leaves before t+1
    lab_now = {"a": 1, "b": 1, "c": -1, "d": -1, "e": 1, "f": -1}
    s0 = build_snapshot([("a", "b"), ("c", "d"), ("e", "f")], lab_now)
    # e and f leave, every remaining node matches its neighborhood
    g = TemporalGraph((s0, build_snapshot([], {"a": 1, "b": 1, "c": -1, "d": -1})))
    lv = dynamic_homophily(g, 0)
    assert lv.h_dynamic == 1.0
    assert lv.h_static < 1.0


def test_undefined_class_marker_and_modes():
    g = pair([("a", "b")], {"a": 0, "b": 1}, {"a": 0, "b": 0})
    assert class_dynamic_homophily(g, 0, 1) is None
    assert class_dynamic_homophily(g, 0, 7) is None
    assert dynamic_homophily(g, 0).h_dynamic == pytest.approx(0.5)
    assert dynamic_homophily(g, 0, empty_classes="divide").h_dynamic == pytest.approx(0.25)
    cm = compatibility_matrix(g, 0)
    assert not cm.defined(1)
    with pytest.raises(GraphError):
        cm.row(1)
    assert cm.to_dict()["entries"][1] is None


def test_no_eligible_nodes():
    g = TemporalGraph((build_snapshot([], {"a": 0}), build_snapshot([], {"b": 0})))
    assert eligible_nodes(g, 0) == []
    lv = dynamic_homophily(g, 0)
    assert lv.h_dynamic is None and lv.per_class == {0: None}


def test_timestep_bounds():
    g = pair([], {"a": 0}, {"a": 0})
    with pytest.raises(GraphError):
        dynamic_homophily(g, 1)


def test_nodes_restriction():
    g = pair([("a", "b")], {"a": 0, "b": 1}, {"a": 0, "b": 1})
    assert class_dynamic_homophily(g, 0, 0, nodes={"b"}) is None
    assert dynamic_homophily(g, 0, nodes={"a"}).per_class == {0: 0.5, 1: None}


def test_series_and_windowed():
    assert homophily_series(TemporalGraph((build_snapshot([], {"a": 0}),))) == []
    ev = EventStream((("a", "b", 0.0), ("b", "c", 1.5)))
    labels = [("a", 0.2, 0), ("b", 0.1, 1), ("c", 0.0, 1), ("a", 1.1, 1), ("b", 1.2, 1), ("c", 1.9, 0)]
    got = windowed_dynamic_homophily(ev, labels, 1.0)
    s0 = build_snapshot([("a", "b")], {"a": 0, "b": 1, "c": 1}, nodes=["a", "b", "c"])
    s1 = build_snapshot([("b", "c")], {"a": 1, "b": 1, "c": 0})
    want = dynamic_homophily(TemporalGraph((s0, s1)), 0)
    assert len(got) == 1
    assert got[0] == want
    one = windowed_dynamic_homophily(ev, {0: {"a": 0, "b": 0, "c": 0}}, 10.0)
    assert one == []


def _classes(g, t):
    return sort_classes({*g[t].labels.values(), *g[t + 1].labels.values()})


@settings(max_examples=200, deadline=None)
@given(temporal_graphs(max_nodes=15))
def test_matches_oracles(g):
    s = g[0]
    assert static_homophily(s) == pytest.approx(oracles.static_homophily(s), abs=1e-12)
    classes = _classes(g, 0)
    for c in classes:
        want = oracles.class_dynamic(g, 0, c)
        got = class_dynamic_homophily(g, 0, c)
        assert (got is None) == (want is None)
        if want is not None:
            assert got == pytest.approx(want, abs=1e-12)
    for mode in ("exclude", "divide"):
        want = oracles.dynamic(g, 0, classes, mode)
        got = dynamic_homophily(g, 0, empty_classes=mode).h_dynamic
        assert (got is None) == (want is None)
        if want is not None:
            assert got == pytest.approx(want, abs=1e-12)
    cm = compatibility_matrix(g, 0)
    for k, (c, row) in enumerate(oracles.compatibility(g, 0, classes).items()):
        if row is None:
            assert cm.support[k] == 0
        else:
            assert np.allclose(cm.entries[k], row, atol=1e-12, rtol=0)
            assert abs(cm.entries[k].sum() - 1.0) < 1e-9


@settings(max_examples=100, deadline=None)
@given(temporal_graphs())
def test_ranges_and_consistency(g):
    lv = dynamic_homophily(g, 0)
    assert 0.0 <= lv.h_static <= 1.0
    cm = compatibility_matrix(g, 0)
    for c, h in lv.per_class.items():
        if h is not None:
            assert 0.0 <= h <= 1.0
            assert cm[c, c] == h
    if len(lv.per_class) == 2 and None not in lv.per_class.values():
        assert lv.h_dynamic == pytest.approx(sum(lv.per_class.values()) / 2, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(temporal_graphs(max_classes=3))
def test_class_relabeling(g):
    perm = {0: "z", 1: "x", 2: "y"}

    def relabel(s):
        return s.with_labels({v: perm[c] for v, c in s.labels.items()})

    h = TemporalGraph(tuple(relabel(s) for s in g.snapshots))
    a, b = dynamic_homophily(g, 0), dynamic_homophily(h, 0)
    assert a.h_static == pytest.approx(b.h_static, abs=1e-12)
    if a.h_dynamic is None:
        assert b.h_dynamic is None
    else:
        assert a.h_dynamic == pytest.approx(b.h_dynamic, abs=1e-12)
    ca, cb = compatibility_matrix(g, 0), compatibility_matrix(h, 0)
    for m in ca.classes:
        for n in ca.classes:
            x, y = ca[m, n], cb[perm[m], perm[n]]
            assert (math.isnan(x) and math.isnan(y)) or x == pytest.approx(y, abs=1e-12)
