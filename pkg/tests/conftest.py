import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import assume, strategies as st

from dynhomophily.graph import TemporalGraph, build_snapshot

sys.path.insert(0, str(Path(__file__).parent))


def random_temporal(rng, n, k, horizon=2, p=0.2, drop=0.0):
    """Random graph with ``k`` classes; each step keeps edges/labels with some churn."""
    snaps = []
    labels = rng.integers(0, k, size=n)
    for _ in range(horizon):
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < p
        edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        present = [v for v in range(n) if rng.random() >= drop]
        lab = {v: int(labels[v]) for v in present}
        edges = [(u, v) for u, v in edges if u in lab and v in lab]
        snaps.append(build_snapshot(edges, lab, nodes=range(n) if drop == 0 else None))
        flip = rng.random(n) < 0.3
        labels = np.where(flip, rng.integers(0, k, size=n), labels)
    return TemporalGraph(tuple(snaps))


@st.composite
def temporal_graphs(draw, max_nodes=12, max_classes=4, horizon=2):
    n = draw(st.integers(1, max_nodes))
    k = draw(st.integers(2, max_classes))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.sampled_from([0.0, 0.2, 0.5, 1.0]))
    drop = draw(st.sampled_from([0.0, 0.2]))
    g = random_temporal(np.random.default_rng(seed), n, k, horizon, p, drop)
    assume(all(s.num_nodes for s in g.snapshots))
    return g


@pytest.fixture
def path_ab():
    return build_snapshot([("a", "b")], {"a": 1, "b": -1}, features={"a": [0.0], "b": [1.0]})
