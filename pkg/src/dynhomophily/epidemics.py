"""Synthetic dynamic graphs: structure generators, SI label dynamics and a
planted-homophily sampler for checking the closed-form theory."""

from __future__ import annotations

from collections.abc import Hashable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from types import MappingProxyType

import networkx as nx
import numpy as np

from .graph import Snapshot, TemporalGraph, build_snapshot
from .homophily import NEGATIVE, POSITIVE, class_dynamic_homophily, dynamic_homophily
from .rng import child_seed, stream

INFECTED = POSITIVE
SUSCEPTIBLE = NEGATIVE


# structure generators -------------------------------------------------------


def _structure(g: nx.Graph, n: int) -> Snapshot:
    return build_snapshot(g.edges(), {}, nodes=range(n))


def gen_regular(n: int, k: int, seed: int) -> Snapshot:
    """Random simple ``k``-regular graph on nodes ``0..n-1``."""
    if k < 0 or k >= n or (n * k) % 2:
        raise ValueError(f"no simple {k}-regular graph on {n} nodes")
    return _structure(nx.random_regular_graph(k, n, seed=seed), n)


def gen_preferential(n: int, m: int, seed: int) -> Snapshot:
    """Preferential-attachment growth from an ``(m+1)``-clique, ``m`` edges per new node."""
    if m < 1 or n <= m:
        raise ValueError("need m >= 1 and n > m")
    g = nx.barabasi_albert_graph(n, m, seed=seed, initial_graph=nx.complete_graph(m + 1))
    return _structure(g, n)


def gen_sbm(
    n: int, c: int, p_in: float, p_out: float, seed: int
) -> tuple[Snapshot, dict[int, int]]:
    """Stochastic block model with ``c`` equal communities; returns the community map too."""
    if c < 1 or n % c:
        raise ValueError("community count must divide n")
    for p in (p_in, p_out):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p!r} outside [0, 1]")
    size = n // c
    probs = [[p_in if a == b else p_out for b in range(c)] for a in range(c)]
    g = nx.stochastic_block_model([size] * c, probs, seed=seed)
    return _structure(g, n), {v: v // size for v in range(n)}


GENERATORS = {
    "regular": {"n": 1000, "k": 3},
    "powerlaw": {"n": 1000, "m": 3},
    "block": {"n": 1000, "c": 20, "p_in": 0.10, "p_out": 0.001},
}


def generate_structure(kind: str, seed: int, **params) -> Snapshot:
    """Build one of the named synthetic structures; unspecified params use the presets."""
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}")
    p = {**GENERATORS[kind], **params}
    if kind == "regular":
        return gen_regular(p["n"], p["k"], seed)
    if kind == "powerlaw":
        return gen_preferential(p["n"], p["m"], seed)
    return gen_sbm(p["n"], p["c"], p["p_in"], p["p_out"], seed)[0]


# SI dynamics ---------------------------------------------------------------


@dataclass(frozen=True)
class SIConfig:
    # calibrate_si on the Regular preset (T=30) selects Beta mean 0.85
    theta_inf: tuple[float, float] = (3.4, 0.6)
    theta_sus: tuple[float, float] = (3.4, 0.6)
    p_init: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_inf", tuple(float(v) for v in self.theta_inf))
        object.__setattr__(self, "theta_sus", tuple(float(v) for v in self.theta_sus))
        if min(self.theta_inf + self.theta_sus) <= 0:
            raise ValueError("Beta parameters must be positive")
        if not 0.0 <= self.p_init <= 1.0:
            raise ValueError("p_init must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass(frozen=True)
class NodeEpiParams:
    alpha: float
    beta: float


def sample_epi_params(
    nodes: Sequence[Hashable], cfg: SIConfig, rng: np.random.Generator
) -> dict[Hashable, NodeEpiParams]:
    """Per-node infectivity and susceptibility, drawn once from the configured Betas."""
    alpha = rng.beta(*cfg.theta_inf, size=len(nodes))
    beta = rng.beta(*cfg.theta_sus, size=len(nodes))
    return {v: NodeEpiParams(float(a), float(b)) for v, a, b in zip(nodes, alpha, beta)}


def _infection_prob(s: Snapshot, y: np.ndarray, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """1 - prod over infected neighbors j of (1 - alpha_j * beta_i), per node i.

    Arrays are aligned with ``s.nodes``. The node itself is not a source.
    """
    if s.num_edges == 0:
        return np.zeros(s.num_nodes)
    u, v = s.edges[:, 0], s.edges[:, 1]
    dst = np.concatenate([u, v])
    src = np.concatenate([v, u])
    live = y[src] == INFECTED
    with np.errstate(divide="ignore"):
        logs = np.log1p(-alpha[src[live]] * beta[dst[live]])
    total = np.bincount(dst[live], weights=logs, minlength=s.num_nodes)
    return -np.expm1(total)


def si_step(
    s: Snapshot,
    labels: Mapping[Hashable, int],
    params: Mapping[Hashable, NodeEpiParams],
    rng: np.random.Generator,
) -> dict[Hashable, int]:
    """Labels at ``t+1`` for the nodes of ``s`` given labels at ``t``."""
    missing = [v for v in s.nodes if v not in params]
    if missing:
        raise ValueError(f"missing epidemic parameters for {missing[:3]!r}")
    y = np.array([labels[v] for v in s.nodes])
    alpha = np.array([params[v].alpha for v in s.nodes])
    beta = np.array([params[v].beta for v in s.nodes])
    nxt = _advance(s, y, alpha, beta, rng)
    return {v: int(c) for v, c in zip(s.nodes, nxt)}


def _advance(s, y, alpha, beta, rng) -> np.ndarray:
    p = _infection_prob(s, y, alpha, beta)
    draws = rng.random(s.num_nodes)
    return np.where((y == INFECTED) | (draws < p), INFECTED, SUSCEPTIBLE)


def _run(structures: Sequence[Snapshot], cfg: SIConfig):
    """Core SI loop over the node universe; yields ``(t, idx, y_t)`` per structure."""
    universe = list(dict.fromkeys(v for s in structures for v in s.nodes))
    pos = {v: k for k, v in enumerate(universe)}
    params = stream(cfg.seed, "si-params")
    alpha = params.beta(*cfg.theta_inf, size=len(universe))
    beta = params.beta(*cfg.theta_sus, size=len(universe))

    status = np.full(len(universe), SUSCEPTIBLE)
    first = np.array([pos[v] for v in structures[0].nodes], dtype=np.int64)
    init = stream(cfg.seed, "si-init").random(len(first)) < cfg.p_init
    status[first[init]] = INFECTED

    spread = stream(cfg.seed, "si-spread")
    for t, s in enumerate(structures):
        idx = np.array([pos[v] for v in s.nodes], dtype=np.int64)
        y = status[idx]
        yield t, idx, y, alpha, beta
        if t + 1 < len(structures):
            status[idx] = _advance(s, y, alpha[idx], beta[idx], spread)


def simulate_si(structures: Sequence[Snapshot], cfg: SIConfig) -> TemporalGraph:
    """Run the SI process over a sequence of structures.

    Snapshot ``t`` of the result has the nodes and edges of ``structures[t]``,
    labels ``y_t`` (+1 infected, -1 susceptible) and features
    ``[y_t(i), alpha_i, beta_i]``. Nodes of the first structure are seeded
    infected with probability ``p_init``; nodes that first appear later start
    susceptible and keep their status while absent. The per-node parameters
    are drawn in the same way as :func:`sample_epi_params`.
    """
    if not structures:
        raise ValueError("need at least one structure")
    snaps = []
    for t, idx, y, alpha, beta in _run(structures, cfg):
        s = structures[t]
        feats = np.column_stack([y.astype(float), alpha[idx], beta[idx]])
        feats.setflags(write=False)
        labels = MappingProxyType({v: int(c) for v, c in zip(s.nodes, y)})
        # structures are already validated; reuse their node order and edges
        snaps.append(Snapshot(s.nodes, s.edges, labels, feats))
    return TemporalGraph(tuple(snaps))


def fully_infected(g: TemporalGraph) -> bool:
    last = g[g.horizon - 1]
    return all(c == INFECTED for c in last.labels.values())


def calibrate_si(
    structures: Sequence[Snapshot],
    *,
    concentration: float = 4.0,
    p_init: float = 0.01,
    runs: int = 100,
    target: float = 0.99,
    seed: int = 0,
    means: Sequence[float] = tuple(np.round(np.arange(0.1, 0.96, 0.05), 2)),
) -> tuple[SIConfig, float]:
    """Smallest Beta mean (shared by infectivity and susceptibility) for which
    at least ``target`` of ``runs`` simulations end fully infected.

    Returns the chosen config (seeded with ``seed``) and its success rate.
    Raises ``RuntimeError`` if no mean on the grid reaches the target.
    """
    for m in means:
        theta = (round(concentration * m, 10), round(concentration * (1.0 - m), 10))
        ok = 0
        for r in range(runs):
            trial = SIConfig(theta, theta, p_init, child_seed(stream(seed, "calibrate", r)))
            *_, (_, _, y, _, _) = _run(structures, trial)
            ok += bool(np.all(y == INFECTED))
        rate = ok / runs
        if rate >= target:
            return SIConfig(theta, theta, p_init, seed), rate
    raise RuntimeError("no Beta mean on the grid infects the whole graph often enough")


# planted sampler -----------------------------------------------------------


@dataclass(frozen=True)
class PlantedConfig:
    n_per_class: int = 2500
    neighbor_count: int = 20
    h_plus: float = 0.5
    h_minus: float = 0.5
    mu: float = 1.0
    sigma2: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_per_class < 1 or self.neighbor_count < 1:
            raise ValueError("counts must be at least 1")
        for h in (self.h_plus, self.h_minus):
            if not 0.0 <= h <= 1.0:
                raise ValueError("homophily levels must lie in [0, 1]")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")


@dataclass(frozen=True)
class PlantedGraph:
    """A snapshot at ``t`` (current labels, features) with the labels at ``t+1``."""

    snapshot: Snapshot
    future_labels: dict
    config: PlantedConfig
    measured: dict = field(default_factory=dict)
    discarded_stubs: int = 0

    def as_temporal(self) -> TemporalGraph:
        future = build_snapshot(
            self.snapshot.edge_list(), self.future_labels, nodes=self.snapshot.nodes
        )
        return TemporalGraph((self.snapshot, future))


def gen_planted(cfg: PlantedConfig) -> PlantedGraph:
    """Sample a graph whose future-class neighbor composition is planted.

    Future labels are split evenly. Each node draws ``neighbor_count`` stubs
    asking for a neighbor whose current label matches its future label with
    probability ``h_plus``/``h_minus``. A stub (own current label a, wants b)
    is matched uniformly at random with a stub (b, a). A node's own current
    label equals its future label with the same probability, so the self-loop
    behaves like one more neighbor draw and the two cross-label stub pools
    balance in expectation. Unmatched stubs, self-pairs and
    duplicate pairs are discarded and counted. Features are
    ``N(current label * mu, sigma2)``.
    """
    rng = stream(cfg.seed, "planted")
    n, d = 2 * cfg.n_per_class, cfg.neighbor_count
    future = np.where(np.arange(n) < cfg.n_per_class, POSITIVE, NEGATIVE)
    keep = np.where(future == POSITIVE, cfg.h_plus, cfg.h_minus)
    current = np.where(rng.random(n) < keep, future, -future)
    same = rng.random((n, d)) < keep[:, None]
    wanted = np.where(same, future[:, None], -future[:, None])
    owner = np.repeat(np.arange(n), d)
    want = wanted.ravel()
    have = current[owner]

    discarded = 0
    pairs = []

    def pool(a, b):
        sel = owner[(have == a) & (want == b)]
        return sel[rng.permutation(len(sel))]

    for a in (POSITIVE, NEGATIVE):
        stubs = pool(a, a)
        if len(stubs) % 2:
            stubs, discarded = stubs[:-1], discarded + 1
        pairs.append(stubs.reshape(-1, 2))
    left, right = pool(POSITIVE, NEGATIVE), pool(NEGATIVE, POSITIVE)
    k = min(len(left), len(right))
    discarded += len(left) + len(right) - 2 * k
    pairs.append(np.column_stack([left[:k], right[:k]]))

    e = np.vstack(pairs)
    loops = e[:, 0] == e[:, 1]
    e = np.sort(e[~loops], axis=1)
    uniq = np.unique(e, axis=0)
    discarded += 2 * (int(loops.sum()) + len(e) - len(uniq))

    x = current * cfg.mu + np.sqrt(cfg.sigma2) * rng.standard_normal(n)
    labels = {v: int(c) for v, c in enumerate(current)}
    snap = build_snapshot(map(tuple, uniq.tolist()), labels, x[:, None], nodes=range(n))
    fut = {v: int(c) for v, c in enumerate(future)}
    planted = PlantedGraph(snap, fut, cfg, discarded_stubs=discarded)
    g = planted.as_temporal()
    lv = dynamic_homophily(g, 0)
    measured = {
        "h_plus": class_dynamic_homophily(g, 0, POSITIVE),
        "h_minus": class_dynamic_homophily(g, 0, NEGATIVE),
        "h_dynamic": lv.h_dynamic,
        "h_static": lv.h_static,
    }
    return PlantedGraph(snap, fut, cfg, measured, discarded)
