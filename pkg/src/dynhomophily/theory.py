"""Closed-form separability theory for linear GCNs on dynamic graphs.

All formulas assume scalar features ``x_t(i) ~ N(y_t(i) * mu, sigma2)`` with
binary labels in {-1, +1}, except the multiclass helpers, which assume
one-hot class means scaled by ``mu``. Big-O constants in the concentration
tails are taken as 1, so the tails are only meaningful up to constants.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .graph import Label, Node, Snapshot
from .homophily import NEGATIVE, POSITIVE, CompatibilityMatrix

DENOMINATORS = ("variance", "stddev")


@dataclass(frozen=True)
class TheoryParams:
    mu: float
    sigma2: float
    layers: int = 1

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.layers < 0:
            raise ValueError("layers must be nonnegative")


@dataclass(frozen=True)
class VariancePair:
    v_plus: float
    v_minus: float
    layers: int

    @property
    def total(self) -> float:
        return self.v_plus + self.v_minus


@dataclass(frozen=True)
class ConcentrationConstants:
    """Exponents of the two-sided concentration tail for the class-mean gap.

    An empty class has no empirical mean; its constant and every tail that
    involves it are ``None``.
    """

    L_plus: float | None
    L_minus: float | None
    n_plus: int
    n_minus: int

    def tail(self, epsilon: float) -> float | None:
        if self.L_plus is None or self.L_minus is None:
            return None
        return _exp_tail(epsilon, self.L_plus) + _exp_tail(epsilon, self.L_minus)

    def deviation(self, delta: float = 0.05) -> float | None:
        """Smallest epsilon with ``tail(epsilon) <= delta``."""
        if self.L_plus is None or self.L_minus is None:
            return None
        if not 0 < delta < 2:
            raise ValueError("delta must lie in (0, 2)")
        lo, hi = 0.0, 1.0
        while self.tail(hi) > delta:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.tail(mid) > delta:
                lo = mid
            else:
                hi = mid
        return hi


def _exp_tail(epsilon: float, L: float) -> float:
    if epsilon == 0:
        return 1.0
    return math.exp(-epsilon * epsilon * L)


def gaussian_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def expected_distance(p: TheoryParams, h_plus: float, h_minus: float) -> float:
    """Gap between the expected future-positive and future-negative representations."""
    _check_levels(h_plus, h_minus)
    return 2.0 * p.mu * (h_plus + h_minus - 1.0) ** p.layers


def variance_bounds(p: TheoryParams, h_plus: float, h_minus: float) -> VariancePair:
    _check_levels(h_plus, h_minus)
    vp = vm = p.sigma2
    a, b = h_plus * h_plus, (1.0 - h_plus) ** 2
    c, d = h_minus * h_minus, (1.0 - h_minus) ** 2
    for _ in range(p.layers):
        vp, vm = a * vp + b * vm, c * vm + d * vp
    return VariancePair(vp, vm, p.layers)


def auroc_upper_bound(
    p: TheoryParams, h_plus: float, h_minus: float, *, denominator: str = "variance"
) -> float:
    """``1 - Phi(-gap / (v+ + v-))``.

    ``denominator="stddev"`` divides by ``sqrt(v+ + v-)`` instead, which is
    the standard Gaussian-AUROC form; the default keeps the variance.
    """
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}")
    dist = expected_distance(p, h_plus, h_minus)
    total = variance_bounds(p, h_plus, h_minus).total
    if total == 0.0:
        # only reachable with sigma2 underflow; the sign of the gap decides
        return 0.5 if dist == 0 else float(dist > 0)
    scale = total if denominator == "variance" else math.sqrt(total)
    return 1.0 - gaussian_cdf(-dist / scale)


def _inner_weights(s: Snapshot, layers: int) -> np.ndarray:
    """Per node i: sum over j in N̂(i) of l / (d(j)+1)^l."""
    w = layers / (s.degrees + 1.0) ** layers
    return np.asarray(s.closed_adjacency @ w)


def _class_constant(
    inner: np.ndarray, members: np.ndarray, sigma2: float, scale: float = 1.0
) -> float | None:
    n = int(members.sum())
    if n == 0:
        return None
    denom = sigma2 * sigma2 * float(np.sum(inner[members] ** 2))
    if denom == 0.0:
        return math.inf
    return scale * n * n / denom


def _membership(s: Snapshot, future_labels: Mapping[Node, Label], c: Label) -> np.ndarray:
    return np.array([v in future_labels and future_labels[v] == c for v in s.nodes], dtype=bool)


def distance_concentration(
    s: Snapshot, future_labels: Mapping[Node, Label], p: TheoryParams
) -> ConcentrationConstants:
    """Concentration constants for the empirical class-mean gap after ``p.layers`` layers.

    Degrees enter as closed degrees ``d(j) + 1``. Nodes of ``s`` without a
    future label are ignored.
    """
    if p.layers < 1:
        raise ValueError("concentration constants need at least one layer")
    inner = _inner_weights(s, p.layers)
    pos = _membership(s, future_labels, POSITIVE)
    neg = _membership(s, future_labels, NEGATIVE)
    return ConcentrationConstants(
        L_plus=_class_constant(inner, pos, p.sigma2),
        L_minus=_class_constant(inner, neg, p.sigma2),
        n_plus=int(pos.sum()),
        n_minus=int(neg.sum()),
    )


def auroc_deviation_bound(n_plus: int, n_minus: int, epsilon: float) -> float:
    """Hoeffding-style tail for the empirical AUROC around its expectation."""
    if n_plus < 1 or n_minus < 1:
        raise ValueError("both classes need at least one node")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return math.exp(-2.0 * n_plus * n_minus * epsilon**2 / (n_plus + n_minus))


@dataclass(frozen=True)
class MulticlassTheoryParams:
    mu: float
    classes: tuple
    compat: CompatibilityMatrix

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        entries = self.compat.entries
        for k, s in enumerate(self.compat.support):
            if s and (abs(entries[k].sum() - 1.0) > 1e-9 or np.any(entries[k] < 0)):
                raise ValueError(f"compatibility row {k} is not a distribution")


def multiclass_expected_distance(p: MulticlassTheoryParams, c_m: Label, c_n: Label) -> float:
    """Euclidean distance between expected 1-layer representations of two future classes."""
    diff = p.compat.row(c_m) - p.compat.row(c_n)
    return p.mu * math.sqrt(float(np.dot(diff, diff)))


def multiclass_concentration(
    s: Snapshot,
    future_labels: Mapping[Node, Label],
    c_m: Label,
    c_n: Label,
    sigma2: float,
    num_classes: int,
    epsilon: float,
) -> float | None:
    """Tail for the 1-layer empirical gap between classes ``c_m`` and ``c_n``.

    Each exponent is ``eps^2 * n_c^2 * |C| / (sigma^4 * sum_i (sum_j 1/(d(j)+1))^2)``.
    ``None`` when either class is empty.
    """
    if num_classes < 1:
        raise ValueError("num_classes must be positive")
    inner = _inner_weights(s, 1)
    tail = 0.0
    for c in (c_m, c_n):
        L = _class_constant(inner, _membership(s, future_labels, c), sigma2, num_classes)
        if L is None:
            return None
        tail += _exp_tail(epsilon, L)
    return tail


def bound_grid(
    p: TheoryParams, resolution: int, *, denominator: str = "variance"
) -> list[tuple[float, float, float]]:
    """``auroc_upper_bound`` on a uniform ``resolution x resolution`` grid over [0, 1]^2."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axis = [float(v) for v in np.linspace(0.0, 1.0, resolution)]
    return [
        (hp, hm, auroc_upper_bound(p, hp, hm, denominator=denominator))
        for hp in axis
        for hm in axis
    ]


def _check_levels(*levels: float) -> None:
    for h in levels:
        if not 0.0 <= h <= 1.0:
            raise ValueError(f"homophily level {h!r} outside [0, 1]")


def levels_from(per_class: Mapping[Label, float | None]) -> tuple[float, float] | None:
    """``(h+, h-)`` from a per-class mapping, or ``None`` if either is undefined."""
    hp, hm = per_class.get(POSITIVE), per_class.get(NEGATIVE)
    if hp is None or hm is None:
        return None
    return hp, hm

