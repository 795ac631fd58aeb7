"""
Built-in instances: the two-bidder pooling example, the correlated
lower-bound construction, the pooled equal-revenue interval and random
corpora.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd

from lap.config import (
    CORRELATED_MAX_JUMPS,
    DEFAULT_VALUE_RANGE,
    EQUAL_REVENUE_RATIO,
)
from lap.dist import DiscreteDistribution, from_pairs, point_mass
from lap.errors import ConstraintViolation, InfeasibleGrid, InvalidInstance
from lap.mech import (
    AuctionInstance,
    Mechanism,
    Outcome,
    PoolSchedule,
    expected_revenue,
    la_mechanism,
    lap_mechanism,
)
from lap.verify import search_lap

logger = logging.getLogger(__name__)


def build_example1(eps):
    """
    Bidder 1 always values the item at 1; bidder 2 values it at 1 + eps with
    probability 1 - eps and at 1/eps otherwise.
    """
    if not 0 < eps < 1:
        raise InvalidInstance("eps must lie in (0, 1)")
    bidder2 = from_pairs([(1 + eps, 1 - eps), (1 / eps, eps)])
    return AuctionInstance.independent([point_mass(1.0), bidder2])


def build_two_point_iid(n=2):
    d = DiscreteDistribution((1.0, 2.0), (0.5, 0.5))
    return AuctionInstance.independent([d] * n)


def _exact(x):
    return x if isinstance(x, Fraction) else Fraction(repr(float(x)))


def equal_revenue_grid(high, step, ratio=EQUAL_REVENUE_RATIO):
    """
    Exact equal-revenue support on [1, high] snapped to multiples of step

    Returns:
        tuple: (points, masses) as Fractions with Pr[v >= x_k] = 1/x_k

    Raises:
        InfeasibleGrid: when high is not a multiple of step or snapping
            merges two points
    """
    high, step = _exact(high), _exact(step)
    if (high / step).denominator != 1 or (1 / step).denominator != 1:
        raise InfeasibleGrid(f"{high} and 1 must be multiples of the grid step {step}")
    steps = max(1, math.ceil(math.log(high) / math.log(ratio) - 1e-9))
    points = []
    for k in range(steps + 1):
        raw = float(high) ** (k / steps)
        points.append(Fraction(round(raw / float(step))) * step)
    points[0], points[-1] = Fraction(1), high
    if any(b <= a for a, b in zip(points, points[1:])):
        raise InfeasibleGrid("grid step too coarse: equal-revenue points collide")
    masses = [1 / a - 1 / b for a, b in zip(points, points[1:])] + [1 / high]
    return points, masses


@dataclass(frozen=True, eq=False)
class CorrelatedConstruction:
    """
    Two bidders whose second value encodes the first

    v1 is equal-revenue on [1, 1/eps1], xi2 equal-revenue on [1, 1/eps2],
    and v2 = v1 * (xi2 + eps^3) with every value on the eps grid, so the
    fractional part of v2 / eps^2 is v1 * eps.
    """
    eps1: float
    eps2: float
    eps: float
    instance: AuctionInstance
    v1_points: tuple
    xi_points: tuple
    _decoder: dict = field(default_factory=dict, repr=False)

    @property
    def v1_support(self):
        return tuple(float(v) for v in self.v1_points)

    def decode_exact(self, v2):
        """v1 recovered from the fractional part of v2 / eps^2."""
        eps = _exact(self.eps)
        scaled = Fraction(v2) / eps ** 2
        return (scaled - math.floor(scaled)) / eps

    def decode(self, v2):
        """v1 as a float for a stored v2 value, or None when v2 is not one."""
        return self._decoder.get(float(v2))


def build_correlated(eps1, eps2, eps=None, ratio=EQUAL_REVENUE_RATIO):
    """
    The correlated instance on which pooling loses half the optimal revenue

    Parameters:
        eps1 (float): v1 ranges over [1, 1/eps1]
        eps2 (float): xi2 ranges over [1, 1/eps2]; eps1 < eps2 < 1
        eps (float, optional): grid step, < eps1; defaults to eps1 / 10
        ratio (float): largest ratio between neighbouring support points

    Returns:
        CorrelatedConstruction: the joint instance and its decoder

    Raises:
        InfeasibleGrid: when the parameters cannot be placed on the grid
    """
    if eps is None:
        eps = eps1 / 10
    if not 0 < eps < eps1 < eps2 < 1:
        raise InfeasibleGrid("need 0 < eps < eps1 < eps2 < 1")
    step = _exact(eps)
    v1_points, v1_mass = equal_revenue_grid(1 / _exact(eps1), step, ratio)
    xi_points, xi_mass = equal_revenue_grid(1 / _exact(eps2), step, ratio)
    bump = step ** 3

    table = {}
    decoder = {}
    for v1, m1 in zip(v1_points, v1_mass):
        for xi, m2 in zip(xi_points, xi_mass):
            v2 = v1 * (xi + bump)
            profile = (float(v1), float(v2))
            if profile in table or decoder.get(profile[1], float(v1)) != float(v1):
                raise InfeasibleGrid("two profiles share a stored value")
            table[profile] = float(m1 * m2)
            decoder[profile[1]] = float(v1)

    total = math.fsum(table.values())
    table = {p: m / total for p, m in table.items()}
    construction = CorrelatedConstruction(
        eps1=float(eps1),
        eps2=float(eps2),
        eps=float(eps),
        instance=AuctionInstance.from_joint(table),
        v1_points=tuple(v1_points),
        xi_points=tuple(xi_points),
        _decoder=decoder,
    )
    logger.debug(
        "correlated construction eps1=%g eps2=%g: %d x %d profiles",
        eps1, eps2, len(v1_points), len(xi_points),
    )
    return construction


def decoder_exact(c: CorrelatedConstruction):
    """True when every stored profile decodes to its own v1, exactly and as float."""
    by_float = {float(v): v for v in c.v1_points}
    bump = _exact(c.eps) ** 3
    for v1 in c.v1_points:
        for xi in c.xi_points:
            if c.decode_exact(v1 * (xi + bump)) != v1:
                return False
    return all(c.decode(v2) == v1 and v1 in by_float for (v1, v2), _ in c.instance.profiles())


def correlated_opt_mechanism(c: CorrelatedConstruction):
    """
    Offer bidder 2 the price b1 / eps2; if refused, offer bidder 1 the value
    decoded from b2. Each price depends only on the other bidder's bid.
    """
    def rule(inst, profile):
        b1, b2 = profile
        top = b1 / c.eps2
        if b2 >= top:
            return Outcome.single(2, 1, 1.0, top)
        price = c.decode(b2)
        if price is not None and b1 >= price:
            return Outcome.single(2, 0, 1.0, price)
        return Outcome.empty(2)

    return Mechanism("correlated-opt", rule)


def correlated_opt_benchmark(c: CorrelatedConstruction):
    """Exact revenue of correlated_opt_mechanism, close to (2 - eps2) ln(1/eps1)."""
    return expected_revenue(c.instance, correlated_opt_mechanism(c))


def slice_revenue(c: CorrelatedConstruction, w):
    """Revenue of correlated_opt_mechanism conditional on v1 = w."""
    mech = correlated_opt_mechanism(c)
    rows = [(p, m) for p, m in c.instance.profiles() if p[0] == w]
    if not rows:
        raise InvalidInstance(f"{w} is not a v1 support value")
    masses = np.array([m for _, m in rows])
    revenues = np.array([mech(c.instance, p).revenue for p, _ in rows])
    return float(np.sum(masses * revenues) / np.sum(masses))


def continuum_benchmark(eps1, eps2):
    return (2 - eps2) * math.log(1 / eps1)


def correlated_ladder(eps1_values, eps2, ratio=EQUAL_REVENUE_RATIO, max_jumps=CORRELATED_MAX_JUMPS):
    """
    Best searched pooling revenue against the benchmark for shrinking eps1

    The search covers schedules with at most ``max_jumps`` jumps whose
    endpoints are v1 support values.

    Returns:
        DataFrame: eps1, opt, best_lap, la, ratio, la_ratio, continuum,
        schedule
    """
    records = []
    for eps1 in eps1_values:
        c = build_correlated(eps1, eps2, ratio=ratio)
        opt = correlated_opt_benchmark(c)
        schedule, best = search_lap(c.instance, max_jumps=max_jumps, endpoints=c.v1_support)
        la = expected_revenue(c.instance, la_mechanism())
        records.append({
            "eps1": eps1,
            "opt": opt,
            "best_lap": best,
            "la": la,
            "ratio": best / opt,
            "la_ratio": la / opt,
            "continuum": continuum_benchmark(eps1, eps2),
            "schedule": str(schedule),
        })
        logger.debug("ladder eps1=%g: ratio %.6f", eps1, best / opt)
    return pd.DataFrame.from_records(records)


def lap_interval_revenue_closed_form(s, t):
    """
    Continuum revenue of pooling [s, t] for an equal-revenue first bidder,
    per unit of its mass on [s, t): 1 - s/t + (t - s) / (2t) * ln(t / s)
    """
    if not 0 < s < t:
        raise ConstraintViolation("need 0 < s < t")
    return 1 - s / t + (t - s) / (2 * t) * math.log(t / s)


def closed_form_bound_holds(s, t):
    """1 - x - (1 - x)/2 * ln x <= -ln x for x = s / t."""
    x = s / t
    return lap_interval_revenue_closed_form(s, t) <= -math.log(x) + 1e-12


def pooled_interval_instance(s, t, grid_points):
    """
    Discrete two-bidder instance for pooling a single interval [s, t]

    Bidder 1 is equal-revenue on a geometric grid over [s, t). Bidder 2 is
    only resolved as far as the pooled auction can tell: equal to v1 with
    probability 1 - v1/t, equal to t otherwise.
    """
    if not 0 < s < t:
        raise ConstraintViolation("need 0 < s < t")
    grid = s * (t / s) ** (np.arange(grid_points + 1) / grid_points)
    grid[0], grid[-1] = s, t
    mass = (1 / grid[:-1] - 1 / grid[1:]) / (1 / s - 1 / t)
    table = {}
    for v1, m in zip(grid[:-1], mass):
        up = v1 / t
        table[(float(v1), float(v1))] = m * (1 - up)
        table[(float(v1), float(t))] = m * up
    total = math.fsum(table.values())
    return AuctionInstance.from_joint({p: m / total for p, m in table.items()})


def simulate_pooled_interval(s, t, grid_points):
    """
    Exact discrete revenue of pooling [s, t] next to its continuum formula

    Returns:
        tuple: (discrete revenue, closed form), both per unit of equal-revenue
        mass on [s, t)
    """
    inst = pooled_interval_instance(s, t, grid_points)
    revenue = expected_revenue(inst, lap_mechanism(PoolSchedule(((s, t),))))
    return revenue * (1 / s - 1 / t), lap_interval_revenue_closed_form(s, t)


def _random_distribution(rng, size, value_range):
    lo, hi = value_range
    grid = np.arange(int(round(lo * 100)), int(round(hi * 100)) + 1) / 100
    if size > len(grid):
        raise InvalidInstance("value range too narrow for the requested support size")
    values = np.sort(rng.choice(grid, size=size, replace=False))
    mass = rng.dirichlet(np.ones(size))
    return DiscreteDistribution(tuple(values), tuple(mass / mass.sum()))


def gen_random_distribution(seed, size, value_range=DEFAULT_VALUE_RANGE):
    """Random distribution on a 0.01 value grid with Dirichlet masses."""
    return _random_distribution(np.random.default_rng(seed), size, value_range)


def gen_random_instance(seed, n, support_size, value_range=DEFAULT_VALUE_RANGE):
    """
    Reproducible independent instance

    Parameters:
        seed (int): generator seed
        n (int): bidders, at most 4
        support_size (int): support points per bidder, at most 8
        value_range (tuple): (low, high) value bounds

    Returns:
        AuctionInstance: independent prior
    """
    if not 1 <= n <= 4 or not 1 <= support_size <= 8:
        raise InvalidInstance("random instances need 1 <= n <= 4 and 1 <= support size <= 8")
    rng = np.random.default_rng(seed)
    return AuctionInstance.independent(
        [_random_distribution(rng, support_size, value_range) for _ in range(n)]
    )


def gen_corpus(seed, count, max_bidders=3, max_support=5, value_range=DEFAULT_VALUE_RANGE):
    """
    Seeded corpus of small independent instances

    Instance k uses seed ``seed + k``; its bidder count is drawn from
    [2, max_bidders] and each bidder's support size from [1, max_support].

    Returns:
        list: (seed, AuctionInstance) pairs
    """
    corpus = []
    for k in range(count):
        rng = np.random.default_rng(seed + k)
        n = int(rng.integers(2, max_bidders + 1))
        dists = [
            _random_distribution(rng, int(rng.integers(1, max_support + 1)), value_range)
            for _ in range(n)
        ]
        corpus.append((seed + k, AuctionInstance.independent(dists)))
    return corpus
