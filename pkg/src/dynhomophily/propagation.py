"""Weight-free linear GCN: mean aggregation over closed neighborhoods."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import GraphError, Node, Snapshot


@dataclass(frozen=True, eq=False)
class Representations:
    """Per-node vectors after ``layer`` rounds of propagation.

    ``values[k]`` belongs to ``nodes[k]``.
    """

    layer: int
    nodes: tuple
    values: np.ndarray

    def __getitem__(self, i: Node) -> np.ndarray:
        return self.values[self.nodes.index(i)]

    def as_dict(self) -> dict:
        return {v: self.values[k] for k, v in enumerate(self.nodes)}

    def scores(self) -> np.ndarray:
        """First coordinate of every representation, the default readout."""
        return self.values[:, 0]

    @classmethod
    def from_mapping(cls, s: Snapshot, values: Mapping[Node, object], layer: int = 0):
        missing = [v for v in s.nodes if v not in values]
        if missing:
            raise GraphError(f"missing representation for {missing[:3]!r}")
        arr = np.vstack([np.atleast_1d(np.asarray(values[v], dtype=float)) for v in s.nodes])
        return cls(layer, s.nodes, arr)


def mean_aggregator(s: Snapshot) -> sp.csr_matrix:
    """Row-stochastic (A + I) / (d + 1)."""
    a = s.closed_adjacency
    inv = 1.0 / (s.degrees + 1.0)
    return (sp.diags(inv) @ a).tocsr()


def _aligned(s: Snapshot, r: Representations) -> np.ndarray:
    if r.nodes == s.nodes:
        return r.values
    pos = {v: k for k, v in enumerate(r.nodes)}
    missing = [v for v in s.nodes if v not in pos]
    if missing:
        raise GraphError(f"missing representation for {missing[:3]!r}")
    return r.values[[pos[v] for v in s.nodes]]


def gcn_layer(s: Snapshot, r: Representations) -> Representations:
    x = _aligned(s, r)
    return Representations(r.layer + 1, s.nodes, mean_aggregator(s) @ x)


def iter_layers(s: Snapshot, layers: int, x: np.ndarray | None = None) -> Iterator[Representations]:
    """Yield representations for layers ``0..layers`` (inclusive)."""
    if layers < 0:
        raise ValueError("layer count must be nonnegative")
    if x is None:
        if s.features is None:
            raise GraphError("snapshot carries no features")
        x = s.features
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    agg = mean_aggregator(s)
    rep = Representations(0, s.nodes, x)
    yield rep
    for _ in range(layers):
        rep = Representations(rep.layer + 1, s.nodes, agg @ rep.values)
        yield rep


def gcn_forward(s: Snapshot, l: int, x: np.ndarray | None = None) -> Representations:
    """Apply ``l`` mean-aggregation layers to the snapshot features (or ``x``)."""
    *_, last = iter_layers(s, l, x)
    return last


def dump_rows(reps: list[Representations]) -> Iterator[tuple]:
    """Rows ``(node, layer, dim, value)`` for CSV export."""
    for rep in reps:
        for k, v in enumerate(rep.nodes):
            for d, val in enumerate(rep.values[k]):
                yield v, rep.layer, d, float(val)
