"""Evaluation pipeline: ranking statistics, per-timestep records, and the
Monte Carlo harness that checks the closed-form theory on planted graphs."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from .epidemics import SUSCEPTIBLE, PlantedConfig, gen_planted
from .graph import TemporalGraph
from .homophily import NEGATIVE, POSITIVE, dynamic_homophily, eligible_nodes
from .propagation import iter_layers
from .rng import child_seed, stream
from .theory import (
    TheoryParams,
    auroc_deviation_bound,
    auroc_upper_bound,
    distance_concentration,
    expected_distance,
    variance_bounds,
)


def _binary(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(scores, Mapping):
        keys = list(scores)
        s = np.array([scores[k] for k in keys], dtype=float)
        y = np.array([labels[k] for k in keys])
    else:
        s = np.asarray(scores, dtype=float)
        y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    return s, y > 0


def auroc(scores, labels) -> float | None:
    """Mann-Whitney AUROC with ties counted one half.

    ``scores`` and ``labels`` are aligned sequences or mappings keyed by node;
    positive means label > 0. Returns ``None`` unless both classes occur.
    """
    s, pos = _binary(scores, labels)
    n_pos = int(pos.sum())
    n_neg = len(s) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation of average-rank vectors; ``None`` for a constant series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be one-dimensional and of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    rx = rankdata(x) - (len(x) + 1) / 2.0
    ry = rankdata(y) - (len(y) + 1) / 2.0
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0.0 or syy == 0.0:
        return None
    return float(np.clip((rx @ ry) / math.sqrt(sxx * syy), -1.0, 1.0))


MASK_MODES = ("all", "unreached")


def eligibility_mask(g: TemporalGraph, t: int, mode: str = "all") -> set:
    """Nodes scored at ``t``: present and labeled at ``t`` and ``t+1``; with
    ``mode="unreached"`` also still susceptible at ``t``."""
    if mode not in MASK_MODES:
        raise ValueError(f"mask mode must be one of {MASK_MODES}")
    nodes = eligible_nodes(g, t)
    if mode == "unreached":
        cur = g[t].labels
        nodes = [v for v in nodes if cur[v] == SUSCEPTIBLE]
    return set(nodes)


@dataclass
class TimestepRecord:
    t: int
    h_static: float
    h_dynamic: float | None
    h_plus: float | None
    h_minus: float | None
    auroc_per_layer: dict = field(default_factory=dict)
    bound_per_layer: dict = field(default_factory=dict)
    n_plus: int = 0
    n_minus: int = 0
    mu: float | None = None
    sigma2: float | None = None


def estimate_gaussian(g: TemporalGraph, t: int) -> tuple[float | None, float | None]:
    """Class-mean half-gap and pooled within-class variance of feature 0 at ``t``.

    Either value is ``None`` when it cannot serve as a theory parameter
    (missing class, nonpositive gap or variance).
    """
    s = g[t]
    if s.features is None:
        return None, None
    y = np.array([s.labels.get(v) for v in s.nodes], dtype=object)
    x = s.features[:, 0]
    pos, neg = x[y == POSITIVE], x[y == NEGATIVE]
    if len(pos) == 0 or len(neg) == 0:
        return None, None
    mu = (pos.mean() - neg.mean()) / 2.0
    resid = np.concatenate([pos - pos.mean(), neg - neg.mean()])
    var = float(resid @ resid / len(resid))
    return (float(mu) if mu > 0 else None), (var if var > 0 else None)


def _pick_sign(scores, labels, rng) -> tuple[int, np.ndarray]:
    """Choose a readout sign on a random half; return it and the held-out mask."""
    n = len(scores)
    calib = np.zeros(n, dtype=bool)
    calib[rng.permutation(n)[: n // 2]] = True
    a = auroc(scores[calib], labels[calib])
    return (-1 if a is not None and a < 0.5 else 1), ~calib


def evaluate_timesteps(
    g: TemporalGraph,
    layers: Sequence[int] = (1,),
    mode: str = "all",
    *,
    mu: float | None = None,
    sigma2: float | None = None,
    sign: int | None = 1,
    seed: int = 0,
    denominator: str = "variance",
) -> list[TimestepRecord]:
    """One record per ``t < horizon - 1``.

    Scores are the first coordinate of the ``l``-layer representation, times
    ``sign``. With ``sign=None`` the sign is picked on a seeded random half
    of the masked nodes and AUROC is reported on the other half. ``mu`` and
    ``sigma2`` default to per-timestep estimates from feature 0.

    Dynamic homophily is measured over the same masked nodes that are scored;
    static homophily always covers the whole snapshot.
    """
    layers = sorted(set(int(l) for l in layers))
    records = []
    for t in range(g.horizon - 1):
        mask = eligibility_mask(g, t, mode)
        lv = dynamic_homophily(g, t, nodes=mask)
        s, nxt = g[t], g[t + 1]
        rows = np.array([k for k, v in enumerate(s.nodes) if v in mask], dtype=np.int64)
        y = np.array([nxt.labels[s.nodes[k]] for k in rows])
        n_plus = int((y == POSITIVE).sum())
        rec = TimestepRecord(
            t=t,
            h_static=lv.h_static,
            h_dynamic=lv.h_dynamic,
            h_plus=lv.h_plus,
            h_minus=lv.h_minus,
            n_plus=n_plus,
            n_minus=len(y) - n_plus,
        )
        est_mu, est_s2 = estimate_gaussian(g, t)
        rec.mu = mu if mu is not None else est_mu
        rec.sigma2 = sigma2 if sigma2 is not None else est_s2

        for rep in iter_layers(s, max(layers)):
            if rep.layer not in layers:
                continue
            scores = rep.scores()[rows]
            if sign is None and len(rows) >= 2:
                sgn, held = _pick_sign(scores, y, stream(seed, "readout", t, rep.layer))
                rec.auroc_per_layer[rep.layer] = auroc(sgn * scores[held], y[held])
            else:
                rec.auroc_per_layer[rep.layer] = auroc((sign or 1) * scores, y)
            rec.bound_per_layer[rep.layer] = _bound(rec, rep.layer, denominator)
        records.append(rec)
    return records


def _bound(rec: TimestepRecord, layer: int, denominator: str) -> float | None:
    if None in (rec.mu, rec.sigma2, rec.h_plus, rec.h_minus):
        return None
    p = TheoryParams(rec.mu, rec.sigma2, layer)
    return auroc_upper_bound(p, rec.h_plus, rec.h_minus, denominator=denominator)


def correlate_series(
    records: Sequence[TimestepRecord], measure: str = "h_dynamic", layer: int = 1
) -> float | None:
    """Spearman correlation between a homophily series and the layer-``layer``
    AUROC series, over timesteps where both are defined."""
    if measure not in ("h_static", "h_dynamic"):
        raise ValueError("measure must be h_static or h_dynamic")
    pairs = [
        (getattr(r, measure), r.auroc_per_layer.get(layer))
        for r in records
    ]
    pairs = [(h, a) for h, a in pairs if h is not None and a is not None]
    if len(pairs) < 3:
        return None
    h, a = zip(*pairs)
    return spearman(h, a)


# theory validation ----------------------------------------------------------


@dataclass
class LayerCheck:
    layer: int
    n_plus: int
    n_minus: int
    empirical_gap: float
    expected_gap: float
    empirical_var_plus: float
    empirical_var_minus: float
    bound_var_plus: float | None
    bound_var_minus: float | None
    empirical_auroc: float | None
    auroc_bound: float | None
    L_plus: float | None
    L_minus: float | None
    gap_deviation_95: float | None
    auroc_tail_at_0_05: float

    @property
    def gap_error(self) -> float:
        return abs(self.empirical_gap - self.expected_gap)

    @property
    def variance_ok(self) -> bool | None:
        """Empirical class variances at least 0.9 of the recursion values."""
        if self.bound_var_plus is None or self.bound_var_minus is None:
            return None
        return (
            self.empirical_var_plus >= 0.9 * self.bound_var_plus
            and self.empirical_var_minus >= 0.9 * self.bound_var_minus
        )


@dataclass
class ReplicateResult:
    seed: int
    measured: dict
    discarded_stubs: int
    layers: list[LayerCheck]


@dataclass
class ValidationReport:
    config: PlantedConfig
    denominator: str
    replicates: list[ReplicateResult]

    def to_dict(self) -> dict:
        out = asdict(self)
        for rep, raw in zip(self.replicates, out["replicates"]):
            for chk, row in zip(rep.layers, raw["layers"]):
                row["gap_error"] = chk.gap_error
                row["variance_ok"] = chk.variance_ok
        return out


def validate_planted(planted, layers: Sequence[int], denominator: str = "variance") -> list[LayerCheck]:
    """Compare empirical statistics of ``planted`` against the theory, per layer."""
    cfg = planted.config
    s = planted.snapshot
    fut = np.array([planted.future_labels[v] for v in s.nodes])
    pos, neg = fut == POSITIVE, fut == NEGATIVE
    if not pos.any() or not neg.any():
        raise ValueError("planted graph has an empty class")
    hp, hm = planted.measured["h_plus"], planted.measured["h_minus"]
    wanted = set(int(l) for l in layers)
    checks = []
    for rep in iter_layers(s, max(wanted)):
        if rep.layer not in wanted:
            continue
        l = rep.layer
        h = rep.scores()
        # the gap does not depend on sigma2, so a placeholder keeps sigma2 = 0 usable
        gap_params = TheoryParams(cfg.mu, cfg.sigma2 or 1.0, l)
        theory = TheoryParams(cfg.mu, cfg.sigma2, l) if cfg.sigma2 > 0 else None
        vb = variance_bounds(theory, hp, hm) if theory else None
        conc = distance_concentration(s, planted.future_labels, theory) if theory and l >= 1 else None
        checks.append(
            LayerCheck(
                layer=l,
                n_plus=int(pos.sum()),
                n_minus=int(neg.sum()),
                empirical_gap=float(h[pos].mean() - h[neg].mean()),
                expected_gap=expected_distance(gap_params, hp, hm),
                empirical_var_plus=float(h[pos].var(ddof=1)) if pos.sum() > 1 else 0.0,
                empirical_var_minus=float(h[neg].var(ddof=1)) if neg.sum() > 1 else 0.0,
                bound_var_plus=vb.v_plus if vb else None,
                bound_var_minus=vb.v_minus if vb else None,
                empirical_auroc=auroc(h, fut),
                auroc_bound=auroc_upper_bound(theory, hp, hm, denominator=denominator) if theory else None,
                L_plus=conc.L_plus if conc else None,
                L_minus=conc.L_minus if conc else None,
                gap_deviation_95=conc.deviation(0.05) if conc else None,
                auroc_tail_at_0_05=auroc_deviation_bound(int(pos.sum()), int(neg.sum()), 0.05),
            )
        )
    return checks


def validate_theory(
    cfg: PlantedConfig,
    layers: Sequence[int] = (1,),
    replicates: int = 1,
    *,
    denominator: str = "variance",
) -> ValidationReport:
    """Run ``replicates`` planted graphs (seeds derived from ``cfg.seed``) and
    check gap, variance and AUROC against the closed forms."""
    results = []
    for r in range(replicates):
        seed = cfg.seed if replicates == 1 else child_seed(stream(cfg.seed, "validate", r))
        planted = gen_planted(replace(cfg, seed=seed))
        results.append(
            ReplicateResult(
                seed=seed,
                measured=dict(planted.measured),
                discarded_stubs=planted.discarded_stubs,
                layers=validate_planted(planted, layers, denominator),
            )
        )
    return ValidationReport(cfg, denominator, results)
