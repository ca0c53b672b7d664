"""Static and dynamic homophily measures.

Every measure is a mean of per-node fractions over closed neighborhoods
(each node weighted equally), evaluated with sparse neighbor-class counts.
Undefined quantities are returned as ``None``.
"""

from __future__ import annotations

from collections.abc import Collection, Mapping
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import (
    EventStream,
    GraphError,
    Label,
    Node,
    Snapshot,
    TemporalGraph,
    sort_classes,
    window_discretize,
)

POSITIVE = 1
NEGATIVE = -1


@dataclass(frozen=True)
class HomophilyLevels:
    t: int
    h_static: float
    per_class: dict = field(default_factory=dict)
    h_dynamic: float | None = None

    @property
    def h_plus(self) -> float | None:
        return self.per_class.get(POSITIVE)

    @property
    def h_minus(self) -> float | None:
        return self.per_class.get(NEGATIVE)


@dataclass(frozen=True)
class CompatibilityMatrix:
    """Row ``m``, column ``n``: mean fraction of a future-``c_m`` node's closed
    neighborhood currently labeled ``c_n``. Rows with zero support are NaN."""

    classes: tuple
    entries: np.ndarray
    support: np.ndarray

    def defined(self, c: Label) -> bool:
        return bool(self.support[self.classes.index(c)] > 0)

    def row(self, c: Label) -> np.ndarray:
        k = self.classes.index(c)
        if self.support[k] == 0:
            raise GraphError(f"compatibility row for class {c!r} is undefined")
        return self.entries[k]

    def __getitem__(self, key: tuple[Label, Label]) -> float:
        cm, cn = key
        return float(self.entries[self.classes.index(cm), self.classes.index(cn)])

    def to_dict(self) -> dict:
        return {
            "classes": [_jsonable(c) for c in self.classes],
            "entries": [
                None if s == 0 else [float(x) for x in row]
                for row, s in zip(self.entries, self.support)
            ],
            "support": [int(s) for s in self.support],
        }


def _jsonable(c):
    return c.item() if isinstance(c, np.generic) else c


def _neighbor_fractions(
    s: Snapshot, codes: np.ndarray, k: int, self_loops: bool = True
) -> np.ndarray:
    """(n, k) matrix: fraction of each node's neighborhood in each class."""
    if np.any(codes < 0):
        missing = [s.nodes[i] for i in np.flatnonzero(codes < 0)[:3]]
        raise GraphError(f"unlabeled nodes in snapshot: {missing!r}")
    n = s.num_nodes
    onehot = sp.csr_matrix((np.ones(n), (np.arange(n), codes)), shape=(n, k))
    a = s.closed_adjacency if self_loops else s.adjacency
    counts = np.asarray((a @ onehot).todense(), dtype=float)
    size = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return counts / size


def local_static_homophily(s: Snapshot, i: Node, *, self_loops: bool = True) -> float:
    """Fraction of N̂(i) (or N(i) when ``self_loops=False``) sharing ``i``'s label."""
    if i not in s:
        raise GraphError(f"unknown node {i!r}")
    if i not in s.labels:
        raise GraphError(f"node {i!r} is unlabeled")
    nbrs = s.neighbors(i) | ({i} if self_loops else set())
    unlabeled = [j for j in nbrs if j not in s.labels]
    if unlabeled:
        raise GraphError(f"unlabeled neighbors {unlabeled[:3]!r}")
    if not nbrs:
        raise GraphError(f"node {i!r} has no neighbors and self-loops are disabled")
    y = s.labels[i]
    return sum(s.labels[j] == y for j in nbrs) / len(nbrs)


def static_homophily(s: Snapshot, *, self_loops: bool = True) -> float:
    """Unweighted node-mean of local static homophily.

    With ``self_loops=False`` isolated nodes have no neighbors and are skipped.
    """
    if s.num_nodes == 0:
        raise GraphError("static homophily of an empty snapshot")
    classes = sort_classes(s.labels.values())
    codes = s.label_array(classes)
    frac = _neighbor_fractions(s, codes, len(classes), self_loops)
    own = frac[np.arange(s.num_nodes), codes]
    own = own[~np.isnan(own)]
    if own.size == 0:
        raise GraphError("no node has a neighbor")
    return float(own.mean())


def _check_t(g: TemporalGraph, t: int) -> None:
    if not 0 <= t < g.horizon - 1:
        raise GraphError(f"timestep {t} out of range for horizon {g.horizon}")


def eligible_nodes(g: TemporalGraph, t: int, within: Collection | None = None) -> list:
    """Nodes present and labeled at both ``t`` and ``t+1`` (and in ``within``
    when given), in snapshot-``t`` order."""
    _check_t(g, t)
    cur, nxt = g[t], g[t + 1]
    return [
        v
        for v in cur.nodes
        if v in cur.labels and v in nxt.labels and (within is None or v in within)
    ]


def _transition_table(
    g: TemporalGraph, t: int, classes: list | None = None, nodes: Collection | None = None
):
    """Neighbor-class fractions at ``t`` and future class codes of eligible nodes."""
    _check_t(g, t)
    cur, nxt = g[t], g[t + 1]
    if classes is None:
        classes = sort_classes({*cur.labels.values(), *nxt.labels.values()})
    code = {c: k for k, c in enumerate(classes)}
    frac = _neighbor_fractions(cur, cur.label_array(classes), len(classes))
    rows = [cur.index[v] for v in eligible_nodes(g, t, nodes)]
    future = np.array([code[nxt.labels[cur.nodes[r]]] for r in rows], dtype=np.int64)
    return classes, frac[rows], future


def compatibility_matrix(
    g: TemporalGraph, t: int, classes: list | None = None, *, nodes: Collection | None = None
) -> CompatibilityMatrix:
    """Dynamic compatibility matrix at ``t``.

    ``nodes`` restricts the averaged (future-labeled) nodes; neighborhoods are
    always taken in the full snapshot.
    """
    classes, frac, future = _transition_table(g, t, classes, nodes)
    k = len(classes)
    entries = np.full((k, k), np.nan)
    support = np.bincount(future, minlength=k)
    for m in range(k):
        if support[m]:
            entries[m] = frac[future == m].mean(axis=0)
    entries.setflags(write=False)
    return CompatibilityMatrix(tuple(classes), entries, support)


def class_dynamic_homophily(
    g: TemporalGraph, t: int, c: Label, *, nodes: Collection | None = None
) -> float | None:
    """Mean over eligible nodes with future label ``c`` of the fraction of
    N̂_t(i) whose current label equals ``c``; ``None`` if no such node."""
    classes, frac, future = _transition_table(g, t, None, nodes)
    if c not in classes:
        return None
    k = classes.index(c)
    sel = future == k
    if not sel.any():
        return None
    return float(frac[sel, k].mean())


def dynamic_homophily(
    g: TemporalGraph,
    t: int,
    *,
    empty_classes: str = "exclude",
    self_loops: bool = True,
    nodes: Collection | None = None,
) -> HomophilyLevels:
    """Per-class and class-averaged dynamic homophily at ``t``.

    ``empty_classes="exclude"`` averages only defined classes; ``"divide"``
    sums the defined levels and divides by the number of classes observed at
    ``t`` or ``t+1``. ``self_loops`` applies to the static level only, and
    ``nodes`` (restricting whose future labels are scored) to the dynamic
    levels only.
    """
    if empty_classes not in ("exclude", "divide"):
        raise ValueError(f"unknown empty_classes mode {empty_classes!r}")
    compat = compatibility_matrix(g, t, nodes=nodes)
    future_classes = set(g[t + 1].labels.values())
    per_class = {}
    for k, c in enumerate(compat.classes):
        if c in future_classes:
            per_class[c] = float(compat.entries[k, k]) if compat.support[k] else None
    defined = [v for v in per_class.values() if v is not None]
    if not defined:
        h_dyn = None
    elif empty_classes == "exclude":
        h_dyn = sum(defined) / len(defined)
    else:
        h_dyn = sum(defined) / len(compat.classes)
    return HomophilyLevels(
        t=t,
        h_static=static_homophily(g[t], self_loops=self_loops),
        per_class=per_class,
        h_dynamic=h_dyn,
    )


def homophily_series(g: TemporalGraph, **kwargs) -> list[HomophilyLevels]:
    return [dynamic_homophily(g, t, **kwargs) for t in range(g.horizon - 1)]


def windowed_dynamic_homophily(
    stream: EventStream,
    labels: list[tuple[Node, float, Label]] | Mapping[int, Mapping[Node, Label]],
    k: float,
    **kwargs,
) -> list[HomophilyLevels]:
    """Dynamic homophily along consecutive windows ``[t*k, (t+1)*k)``.

    ``labels`` is either timestamped ``(node, time, class)`` events, binned
    into windows with later events overriding earlier ones in the same
    window, or an already-binned ``{window: {node: class}}`` mapping.
    """
    if not k > 0:
        raise GraphError("window size must be positive")
    if isinstance(labels, Mapping):
        per_window = labels
    else:
        per_window: dict[int, dict] = {}
        for node, time, c in sorted(labels, key=lambda e: e[1]):
            per_window.setdefault(int(np.floor(time / k)), {})[node] = c
    return homophily_series(window_discretize(stream, k, per_window), **kwargs)
