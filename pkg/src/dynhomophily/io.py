"""Text formats for temporal graphs.

Edge list: one event ``src dst time`` per line (comma or whitespace
separated, ``#`` comments). Labels: ``node timestep class``. Features: CSV
with header ``node,t,x0,x1,...``. A serialized :class:`TemporalGraph` is a
directory holding ``edges.txt``, ``labels.txt``, ``nodes.csv`` (dense index
mapping) and, when present, ``features.csv``; event times are snapshot
indices, so reloading uses window size 1.
"""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile
from collections.abc import Callable, Iterator
from pathlib import Path

from .graph import EventStream, TemporalGraph, window_discretize

_SPLIT = re.compile(r"[,\s]+")


class FormatError(ValueError):
    pass


def _fields(path: Path) -> Iterator[tuple[int, list[str]]]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, _SPLIT.split(line)


def parse_class(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def parse_node_auto(token: str):
    """Integer node id when the token is a canonical integer, else the string."""
    try:
        value = int(token)
    except ValueError:
        return token
    return value if str(value) == token else token


def _number(token: str) -> float:
    value = float(token)
    return int(value) if value.is_integer() and "." not in token and "e" not in token.lower() else value


def read_events(path: str | Path, parse_node: Callable = str) -> EventStream:
    path = Path(path)
    events = []
    for lineno, parts in _fields(path):
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'src dst time', got {len(parts)} fields")
        try:
            time = _number(parts[2])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad timestamp {parts[2]!r}") from None
        events.append((parse_node(parts[0]), parse_node(parts[1]), time))
    try:
        return EventStream(tuple(events))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def read_labels(path: str | Path, parse_node: Callable = str) -> dict[int, dict]:
    """``{timestep: {node: class}}``; conflicting repeats are an error."""
    path = Path(path)
    out: dict[int, dict] = {}
    for lineno, parts in _fields(path):
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'node timestep class'")
        try:
            t = int(parts[1])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad timestep {parts[1]!r}") from None
        node, c = parse_node(parts[0]), parse_class(parts[2])
        window = out.setdefault(t, {})
        if node in window and window[node] != c:
            raise FormatError(f"{path}:{lineno}: conflicting labels for {parts[0]!r} at t={t}")
        window[node] = c
    return out


def read_features(path: str | Path, parse_node: Callable = str) -> dict[int, dict]:
    """``{timestep: {node: vector}}`` from a ``node,t,x0,...`` CSV."""
    path = Path(path)
    out: dict[int, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["node", "t"]:
            raise FormatError(f"{path}:1: expected header 'node,t,x0,...'")
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                vec = [float(v) for v in row[2:]]
                t = int(row[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric field") from None
            out.setdefault(t, {})[parse_node(row[0])] = vec
    return out


def load_temporal_graph(
    edges: str | Path,
    labels: str | Path | None = None,
    window: float = 1.0,
    features: str | Path | None = None,
    parse_node: Callable = str,
) -> TemporalGraph:
    """Read an edge list (plus label and feature files) and discretize it."""
    stream = read_events(edges, parse_node)
    per_window = read_labels(labels, parse_node) if labels else {}
    g = window_discretize(stream, window, per_window)
    if features:
        feats = read_features(features, parse_node)
        g = TemporalGraph(
            tuple(s.with_features(feats.get(t, {})) for t, s in enumerate(g.snapshots))
        )
    return g


def load_graph_dir(path: str | Path, parse_node: Callable = parse_node_auto) -> TemporalGraph:
    path = Path(path)
    if not (path / "edges.txt").exists():
        raise FormatError(f"{path}: not a serialized temporal graph (edges.txt missing)")
    feats = path / "features.csv"
    return load_temporal_graph(
        path / "edges.txt",
        path / "labels.txt",
        1,
        feats if feats.exists() else None,
        parse_node,
    )


def node_index(g: TemporalGraph) -> list[tuple[int, object]]:
    return list(enumerate(g.node_universe()))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_graph_dir(g: TemporalGraph, path: str | Path) -> None:
    """Serialize ``g`` so that :func:`load_graph_dir` reproduces it."""
    path = Path(path)
    edges, labels, feats = [], [], []
    dim = None
    for t, s in enumerate(g.snapshots):
        edges.extend(f"{u} {v} {t}\n" for u, v in s.edge_list())
        labels.extend(f"{v} {t} {c}\n" for v, c in s.labels.items())
        if s.features is not None:
            dim = s.features.shape[1]
            feats.extend(
                [str(v), str(t), *(repr(float(x)) for x in row)]
                for v, row in zip(s.nodes, s.features)
            )
    _atomic_write(path / "edges.txt", "".join(edges))
    _atomic_write(path / "labels.txt", "".join(labels))
    _atomic_write(path / "nodes.csv", to_csv(["index", "node"], node_index(g)))
    if dim is not None:
        _atomic_write(path / "features.csv", to_csv(["node", "t", *(f"x{k}" for k in range(dim))], feats))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_escape(_cell(v)) for v in row))
    return "\n".join(lines) + "\n"


def _csv_escape(s: str) -> str:
    if any(ch in s for ch in ',"\n\r'):
        return '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path: str | Path, header: list[str], rows) -> None:
    _atomic_write(Path(path), to_csv(header, rows))


def write_json(path: str | Path, doc: dict) -> None:
    _atomic_write(Path(path), json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
