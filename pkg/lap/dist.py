"""
Discrete value distributions, revenue curves and ironing.

All quantities are exact finite sums over the support. Survival is closed:
``quantile(d, p) = Pr[v >= p]``, so a posted price ``p`` sells with exactly
that probability.
"""
import bisect
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull

from lap.config import MASS_TOL
from lap.errors import InvalidDistribution, ZeroProbabilityCondition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscreteDistribution:
    """
    Finite distribution over ascending value points

    Parameters:
        support (tuple): strictly increasing non-negative values
        mass (tuple): matching strictly positive probabilities summing to 1
    """
    support: tuple
    mass: tuple

    def __post_init__(self):
        support = tuple(float(v) for v in self.support)
        mass = tuple(float(m) for m in self.mass)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)

        if not support:
            raise InvalidDistribution("distribution needs at least one support point")
        if len(support) != len(mass):
            raise InvalidDistribution("support and mass must have equal length")
        if any(not math.isfinite(v) or v < 0 for v in support):
            raise InvalidDistribution("support values must be finite and non-negative")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise InvalidDistribution("support must be strictly increasing")
        if any(m <= 0 for m in mass):
            raise InvalidDistribution("masses must be strictly positive")
        if abs(math.fsum(mass) - 1.0) > MASS_TOL:
            raise InvalidDistribution(f"masses sum to {math.fsum(mass)!r}, not 1")

    @property
    def values(self):
        return np.asarray(self.support)

    @property
    def probabilities(self):
        return np.asarray(self.mass)

    @cached_property
    def tail(self):
        """Pr[v >= support[k]] for every k; the first entry is exactly 1."""
        tail = np.cumsum(np.asarray(self.mass)[::-1])[::-1]
        tail[0] = 1.0
        return tuple(float(s) for s in tail)

    def survival(self, p):
        """Pr[v >= p] with the closed convention."""
        k = bisect.bisect_left(self.support, p)
        return self.tail[k] if k < len(self.support) else 0.0

    def mean(self):
        return float(np.dot(self.values, self.probabilities))

    def __len__(self):
        return len(self.support)


@dataclass(frozen=True)
class RevenueCurve:
    """
    Revenue curve in quantile space together with its concave envelope

    ``points`` are (q, R(q)) pairs with q strictly increasing from 0 to 1;
    ``prices[k]`` is the posted price realising ``points[k]`` (inf at q = 0).
    ``envelope`` lists the vertices of the upper concave hull, and
    ``ironed_intervals`` the quantile intervals where the hull lies strictly
    above some curve point.
    """
    points: tuple
    prices: tuple
    envelope: tuple
    ironed_intervals: tuple

    @property
    def quantiles(self):
        return np.array([q for q, _ in self.points])

    @property
    def revenues(self):
        return np.array([r for _, r in self.points])

    @property
    def segments(self):
        return tuple(zip(self.envelope, self.envelope[1:]))

    @property
    def slopes(self):
        return tuple((r1 - r0) / (q1 - q0) for (q0, r0), (q1, r1) in self.segments)

    def is_ironed(self):
        return bool(self.ironed_intervals)


@dataclass(frozen=True)
class VirtualValueTable:
    """Virtual and ironed virtual value for every support value."""
    values: tuple
    phi: tuple
    phi_bar: tuple
    regular: bool

    def index(self, v):
        k = bisect.bisect_left(self.values, v)
        if k == len(self.values) or self.values[k] != v:
            raise KeyError(v)
        return k

    def virtual(self, v):
        return self.phi[self.index(v)]

    def ironed(self, v):
        return self.phi_bar[self.index(v)]

    def ironed_for_bid(self, bid):
        """
        Ironed virtual value used for an arbitrary bid

        A bid between support points is treated as the largest support value
        not above it; a bid below the support gets -inf (never allocated).
        """
        k = bisect.bisect_right(self.values, bid) - 1
        if k < 0:
            return -math.inf
        return self.phi_bar[k]


def from_pairs(pairs):
    """
    Build a distribution from (value, mass) pairs in any order

    Parameters:
        pairs (iterable): (value, mass) tuples

    Returns:
        DiscreteDistribution: the validated distribution
    """
    try:
        ordered = sorted((float(v), float(m)) for v, m in pairs)
    except (TypeError, ValueError) as exc:
        raise InvalidDistribution(f"distribution must be a list of [value, mass] number pairs: {exc}") from exc
    return DiscreteDistribution(tuple(v for v, _ in ordered), tuple(m for _, m in ordered))


def to_pairs(d):
    return [[v, m] for v, m in zip(d.support, d.mass)]


def point_mass(v):
    return DiscreteDistribution((v,), (1.0,))


def quantile(d: DiscreteDistribution, p):
    """
    Probability that a posted price p sells

    Parameters:
        d (DiscreteDistribution): value distribution
        p (float): non-negative price

    Returns:
        float: Pr[v >= p]
    """
    return d.survival(p)


def conditional_at_least(d: DiscreteDistribution, c):
    """
    Restrict d to values >= c and renormalise

    Raises:
        ZeroProbabilityCondition: when no support value is >= c
    """
    k = bisect.bisect_left(d.support, c)
    if k == len(d.support):
        raise ZeroProbabilityCondition()
    mass = np.asarray(d.mass[k:])
    return DiscreteDistribution(d.support[k:], tuple(mass / mass.sum()))


def revenue_curve(d: DiscreteDistribution):
    """
    Revenue curve R(q) = p * Pr[v >= p] with its concave envelope

    One point per support value plus (0, 0). The envelope is the upper hull
    of those points, computed with Qhull after anchoring two corners below
    the curve so that only the upper chain carries original vertices.

    Parameters:
        d (DiscreteDistribution): value distribution

    Returns:
        RevenueCurve: points, envelope vertices and ironed intervals
    """
    # highest value first so quantiles ascend
    qs = [0.0] + list(d.tail[::-1])
    prices = [math.inf] + list(d.support[::-1])
    revenues = [0.0] + [p * q for p, q in zip(prices[1:], qs[1:])]
    points = tuple(zip(qs, revenues))

    envelope = _upper_hull(points)
    ironed = _ironed_intervals(points, envelope)
    return RevenueCurve(points, tuple(prices), envelope, ironed)


def _upper_hull(points):
    graph = np.asarray(points, dtype=float)
    low = graph[:, 1].min() - 1.0
    corners = np.array([[0.0, low], [1.0, low]])
    hull = ConvexHull(np.vstack((graph, corners)))
    keep = {int(i) for i in hull.vertices if i < len(graph)}
    keep.update((0, len(graph) - 1))
    return tuple(points[i] for i in sorted(keep))


def _ironed_intervals(points, envelope):
    scale = max(1.0, max(r for _, r in points))
    intervals = []
    for (a, ra), (b, rb) in zip(envelope, envelope[1:]):
        slope = (rb - ra) / (b - a)
        below = [
            r < ra + slope * (q - a) - MASS_TOL * scale
            for q, r in points if a < q < b
        ]
        if any(below):
            intervals.append((a, b))
    return tuple(intervals)


def envelope_value(c: RevenueCurve, q):
    """R-bar(q): the concave envelope evaluated at quantile q."""
    qs = [p[0] for p in c.envelope]
    rs = [p[1] for p in c.envelope]
    return float(np.interp(q, qs, rs))


def iron_lottery(c: RevenueCurve, q):
    """
    Two-price randomisation achieving the envelope at quantile q

    Parameters:
        c (RevenueCurve): revenue curve
        q (float): target ex-ante sale probability in [0, 1]

    Returns:
        tuple: (alpha, q1, q2) with alpha*q1 + (1-alpha)*q2 = q and
        alpha*R(q1) + (1-alpha)*R(q2) = R-bar(q); (1, q, q) when q is a curve
        point that the envelope touches
    """
    q = min(max(float(q), 0.0), 1.0)
    scale = max(1.0, max(r for _, r in c.points))
    for qk, rk in c.points:
        if abs(qk - q) <= MASS_TOL and abs(envelope_value(c, qk) - rk) <= MASS_TOL * scale:
            return 1.0, qk, qk

    qs = [p[0] for p in c.envelope]
    j = bisect.bisect_right(qs, q)
    j = min(max(j, 1), len(qs) - 1)
    a, b = qs[j - 1], qs[j]
    alpha = (b - q) / (b - a)
    return alpha, a, b


def price_at_quantile(c: RevenueCurve, q) -> Optional[float]:
    """Posted price realising curve point q, or None for q = 0."""
    for (qk, _), price in zip(c.points, c.prices):
        if abs(qk - q) <= MASS_TOL:
            return None if math.isinf(price) else price
    raise KeyError(q)


def virtual_values(d: DiscreteDistribution):
    """
    Discrete virtual values from revenue-curve slopes

    phi(v) is the slope of the raw curve between the quantile of v and the
    next-lower curve quantile; phi_bar(v) is the envelope slope over the same
    quantile span, constant across an ironed interval.

    Parameters:
        d (DiscreteDistribution): value distribution

    Returns:
        VirtualValueTable: per-value phi and phi_bar plus the regular flag
    """
    c = revenue_curve(d)
    qs = [q for q, _ in c.points]
    rs = [r for _, r in c.points]
    env = [envelope_value(c, q) for q in qs]

    phi, phi_bar = [], []
    # curve point k+1 (quantile order) belongs to support value len-1-k
    for k in range(len(qs) - 1, 0, -1):
        dq = qs[k] - qs[k - 1]
        phi.append((rs[k] - rs[k - 1]) / dq)
        phi_bar.append((env[k] - env[k - 1]) / dq)

    regular = all(b >= a - 1e-12 for a, b in zip(phi, phi[1:]))
    # envelope slopes are non-increasing in q, hence non-decreasing in v
    phi_bar = list(np.maximum.accumulate(phi_bar))
    return VirtualValueTable(d.support, tuple(phi), tuple(float(x) for x in phi_bar), regular)


def equal_revenue(low, high, ratio, grid=None, top_atom=True):
    """
    Discrete equal-revenue distribution on [low, high]

    Support points are geometric with ratio at most ``ratio`` (snapped to
    multiples of ``grid`` when given). With ``top_atom`` the survival is
    exactly low/x at every support point, the top point carrying low/high.
    Without it the top point is dropped and the rest renormalised, which is
    the equal-revenue law conditioned on v < high.

    Parameters:
        low (float): smallest value, > 0
        high (float): largest value, > low
        ratio (float): target ratio between neighbouring points, > 1
        grid (float, optional): spacing the values are snapped to
        top_atom (bool): keep the residual atom at ``high``

    Returns:
        DiscreteDistribution: the distribution
    """
    if not 0 < low < high or ratio <= 1:
        raise InvalidDistribution("equal_revenue needs 0 < low < high and ratio > 1")
    steps = max(1, math.ceil(math.log(high / low) / math.log(ratio) - 1e-9))
    points = low * (high / low) ** (np.arange(steps + 1) / steps)
    points[0], points[-1] = low, high
    if grid:
        points = np.round(points / grid) * grid
        points[0], points[-1] = low, high
        points = np.unique(points)
    survival = low / points
    mass = np.append(survival[:-1] - survival[1:], survival[-1])
    if not top_atom:
        points, mass = points[:-1], mass[:-1]
    mass = mass / mass.sum()
    return DiscreteDistribution(tuple(points), tuple(mass))


def mixture_revenue(c: RevenueCurve, alpha, q1, q2):
    """Revenue of the randomised pricing (alpha at q1, rest at q2)."""
    lookup = dict(c.points)
    return alpha * lookup[q1] + (1 - alpha) * lookup[q2]
