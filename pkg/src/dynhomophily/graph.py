"""Immutable temporal-graph data model.

A :class:`Snapshot` is one undirected simple graph with (possibly partial)
labels and optional node features; a :class:`TemporalGraph` is an ordered
sequence of snapshots. Continuous event streams are cut into snapshots by
:func:`window_discretize`.
"""

from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import numpy as np
import scipy.sparse as sp

Node = Hashable
Label = Hashable


class GraphError(ValueError):
    """Raised when graph inputs violate the data-model invariants."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One static graph at a single timestep.

    Use :func:`build_snapshot` rather than the constructor; it validates and
    canonicalizes the inputs.

    Attributes
    ----------
    nodes : tuple
        Node identifiers in a fixed order; positions are the dense indices.
    edges : ndarray of shape (m, 2)
        Undirected edges as index pairs with ``u < v``, sorted, no duplicates.
    labels : Mapping
        Node id to class id. Nodes may be unlabeled.
    features : ndarray of shape (n, d) or None
        Row ``k`` holds the feature vector of ``nodes[k]``.
    """

    nodes: tuple
    edges: np.ndarray
    labels: Mapping
    features: np.ndarray | None = None

    @cached_property
    def index(self) -> dict:
        return {v: k for k, v in enumerate(self.nodes)}

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency without self-loops."""
        n = self.num_nodes
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(u))
        a = sp.csr_matrix(
            (data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n)
        )
        a.sum_duplicates()
        return a

    @cached_property
    def closed_adjacency(self) -> sp.csr_matrix:
        """Adjacency with a self-loop added at every node (the matrix of N̂)."""
        return (self.adjacency + sp.identity(self.num_nodes, format="csr")).tocsr()

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.diff(self.adjacency.indptr).astype(np.int64)
        return _frozen(deg)

    def neighbors(self, i: Node) -> set:
        k = self._position(i)
        a = self.adjacency
        return {self.nodes[j] for j in a.indices[a.indptr[k] : a.indptr[k + 1]]}

    def edge_list(self) -> list[tuple]:
        return [(self.nodes[u], self.nodes[v]) for u, v in self.edges]

    def feature_of(self, i: Node) -> np.ndarray:
        if self.features is None:
            raise GraphError("snapshot carries no features")
        return self.features[self._position(i)]

    def label_array(self, classes: Sequence) -> np.ndarray:
        """Class positions in ``classes`` per node; -1 marks unlabeled nodes."""
        code = {c: k for k, c in enumerate(classes)}
        out = np.full(self.num_nodes, -1, dtype=np.int64)
        for k, v in enumerate(self.nodes):
            if v in self.labels:
                out[k] = code[self.labels[v]]
        return out

    def with_features(self, features: Mapping | np.ndarray | None) -> Snapshot:
        return build_snapshot(self.edge_list(), self.labels, features, nodes=self.nodes)

    def with_labels(self, labels: Mapping) -> Snapshot:
        feats = None if self.features is None else self.features
        return build_snapshot(self.edge_list(), labels, feats, nodes=self.nodes)

    def _position(self, i: Node) -> int:
        try:
            return self.index[i]
        except KeyError:
            raise GraphError(f"unknown node {i!r}") from None

    def __contains__(self, i: object) -> bool:
        return i in self.index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        if set(self.nodes) != set(other.nodes) or dict(self.labels) != dict(other.labels):
            return False
        if {frozenset(e) for e in self.edge_list()} != {frozenset(e) for e in other.edge_list()}:
            return False
        if (self.features is None) != (other.features is None):
            return False
        if self.features is not None:
            order = [other.index[v] for v in self.nodes]
            return bool(np.array_equal(self.features, other.features[order]))
        return True

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        dim = None if self.features is None else self.features.shape[1]
        return f"Snapshot(nodes={self.num_nodes}, edges={self.num_edges}, feature_dim={dim})"


def build_snapshot(
    edges: Iterable[tuple[Node, Node]],
    labels: Mapping[Node, Label],
    features: Mapping[Node, Sequence[float]] | np.ndarray | None = None,
    *,
    nodes: Iterable[Node] | None = None,
) -> Snapshot:
    """Validate inputs and return a :class:`Snapshot`.

    Node order is ``nodes`` when given (which may declare unlabeled isolated
    nodes), then any labeled node not yet listed. Every edge endpoint must be
    either labeled or declared. Edges are symmetrized and deduplicated;
    self-edges are dropped because the self-loop is implicit everywhere.
    ``features`` may be a mapping or an array aligned with the node order.
    """
    order: list = []
    seen: set = set()
    for v in nodes if nodes is not None else ():
        if v not in seen:
            seen.add(v)
            order.append(v)
    for v in labels:
        if v not in seen:
            seen.add(v)
            order.append(v)
    index = {v: k for k, v in enumerate(order)}

    pairs = []
    for u, v in edges:
        for w in (u, v):
            if w not in index:
                raise GraphError(f"dangling endpoint {w!r}: not labeled or declared")
        a, b = index[u], index[v]
        if a != b:
            pairs.append((a, b) if a < b else (b, a))
    arr = np.array(sorted(set(pairs)), dtype=np.int64).reshape(-1, 2)

    feat = None
    if features is not None:
        if isinstance(features, np.ndarray):
            feat = np.array(features, dtype=float)
            if feat.ndim == 1:
                feat = feat[:, None]
            if feat.shape[0] != len(order):
                raise GraphError("feature array does not match node count")
        else:
            missing = [v for v in order if v not in features]
            if missing:
                raise GraphError(f"missing features for {missing[:3]!r}")
            extra = [v for v in features if v not in index]
            if extra:
                raise GraphError(f"features for unknown nodes {extra[:3]!r}")
            rows = [np.atleast_1d(np.asarray(features[v], dtype=float)) for v in order]
            dims = {r.shape for r in rows}
            if len(dims) > 1:
                raise GraphError(f"inconsistent feature dimensions {sorted(dims)}")
            feat = np.vstack(rows) if rows else np.zeros((0, 1))
        feat = _frozen(feat)

    return Snapshot(
        nodes=tuple(order),
        edges=_frozen(arr),
        labels=MappingProxyType(dict(labels)),
        features=feat,
    )


def closed_neighborhood(s: Snapshot, i: Node) -> set:
    """N̂(i): neighbors of ``i`` plus ``i`` itself."""
    return s.neighbors(i) | {i}


def degree(s: Snapshot, i: Node) -> int:
    """Number of neighbors of ``i``, self-loop excluded."""
    return int(s.degrees[s._position(i)])


@dataclass(frozen=True)
class TemporalGraph:
    snapshots: tuple[Snapshot, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "snapshots", tuple(self.snapshots))

    @property
    def horizon(self) -> int:
        return len(self.snapshots)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, t: int) -> Snapshot:
        return self.snapshots[t]

    def __iter__(self):
        return iter(self.snapshots)

    def node_universe(self) -> list:
        """Union of snapshot node sets, in order of first appearance."""
        seen: dict = {}
        for s in self.snapshots:
            for v in s.nodes:
                seen.setdefault(v, None)
        return list(seen)

    def classes(self) -> list:
        return sort_classes({c for s in self.snapshots for c in s.labels.values()})


def sort_classes(classes: Iterable[Label]) -> list:
    items = set(classes)
    try:
        return sorted(items)
    except TypeError:
        return sorted(items, key=repr)


@dataclass(frozen=True)
class EventStream:
    """Timestamped undirected interaction events ``(src, dst, time)``."""

    events: tuple[tuple[Node, Node, float], ...] = ()

    def __post_init__(self) -> None:
        evs = tuple((u, v, t) for u, v, t in self.events)
        for u, v, t in evs:
            if not math.isfinite(t) or t < 0:
                raise GraphError(f"invalid timestamp {t!r} on event ({u!r}, {v!r})")
        object.__setattr__(self, "events", evs)

    def __len__(self) -> int:
        return len(self.events)


def window_discretize(
    stream: EventStream,
    w: float,
    labels_per_window: Mapping[int, Mapping[Node, Label]] | None = None,
) -> TemporalGraph:
    """Cut an event stream into snapshots over half-open windows ``[t*w, (t+1)*w)``.

    Snapshot ``t`` holds the endpoints of its events plus any nodes labeled in
    ``labels_per_window[t]``. Windows past both the last event and the last
    labeled window are not emitted.
    """
    if not w > 0:
        raise GraphError("window size must be positive")
    labels_per_window = labels_per_window or {}
    buckets: dict[int, list] = {}
    for u, v, time in stream.events:
        buckets.setdefault(int(math.floor(time / w)), []).append((u, v))
    last = max([*buckets, *(k for k, m in labels_per_window.items() if m)], default=-1)

    snaps = []
    for t in range(last + 1):
        evs = buckets.get(t, [])
        declared: dict = {}
        for u, v in evs:
            declared.setdefault(u, None)
            declared.setdefault(v, None)
        snaps.append(build_snapshot(evs, labels_per_window.get(t, {}), nodes=declared))
    return TemporalGraph(tuple(snaps))
