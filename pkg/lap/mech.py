"""
Executable auction mechanisms.

A mechanism maps (instance, bid profile) to an Outcome. Internal lotteries
are integrated out, so the Outcome carries allocation probabilities and
expected payments and ``expected_revenue`` is an exact finite sum.
"""
import bisect
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import pandas as pd

from lap.config import MASS_TOL, TIE_TOL
from lap.dist import DiscreteDistribution, conditional_at_least, virtual_values
from lap.errors import (
    InvalidInstance,
    NonMonotoneSchedule,
    RequiresIndependence,
    ZeroProbabilityCondition,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Outcome:
    """Per-bidder allocation probability and expected payment."""
    alloc: tuple
    pay: tuple

    @classmethod
    def empty(cls, n):
        return cls((0.0,) * n, (0.0,) * n)

    @classmethod
    def single(cls, n, i, alloc, pay):
        a = [0.0] * n
        p = [0.0] * n
        a[i], p[i] = alloc, pay
        return cls(tuple(a), tuple(p))

    @property
    def revenue(self):
        return math.fsum(self.pay)

    def utility(self, i, value):
        return self.alloc[i] * value - self.pay[i]


@dataclass(frozen=True)
class Knowledge:
    """
    What the seller learned about a bidder who has left the auction

    ``high is None`` means the exact value ``low`` was revealed by a drop in
    the continuous phase; otherwise the bidder was pooled at a jump and only
    ``low <= v < high`` is known.
    """
    low: float
    high: Optional[float] = None

    @classmethod
    def exact(cls, v):
        return cls(float(v))

    @classmethod
    def interval(cls, s, t):
        return cls(float(s), float(t))

    def admits(self, values):
        values = np.asarray(values)
        if self.high is None:
            return values == self.low
        return (values >= self.low) & (values < self.high)


@dataclass(frozen=True)
class PoolSchedule:
    """
    Ordered disjoint jump intervals (s_k, t_k) of a LAP

    The cutoff rises continuously between jumps and leaps from s_k to t_k.
    """
    jumps: tuple = ()

    def __post_init__(self):
        try:
            jumps = tuple((float(s), float(t)) for s, t in self.jumps)
        except (TypeError, ValueError) as exc:
            raise InvalidInstance(f"pool schedule must be a list of [s, t] number pairs: {exc}") from exc
        object.__setattr__(self, "jumps", jumps)
        previous = 0.0
        for s, t in jumps:
            if s < previous or not s < t:
                raise NonMonotoneSchedule(
                    f"non-monotone schedule: jump [{s:g}, {t:g}] after cutoff {previous:g}"
                )
            previous = t

    @property
    def endpoints(self):
        return sorted({x for jump in self.jumps for x in jump})

    def __len__(self):
        return len(self.jumps)

    def __iter__(self):
        return iter(self.jumps)

    def __str__(self):
        if not self.jumps:
            return "[]"
        return ";".join(f"[{s:g},{t:g}]" for s, t in self.jumps)


@dataclass(frozen=True)
class MenuChoice:
    """
    The two options offered to the lone survivor of a jump

    ``pool_size`` is |S(c°)|, ``cutoff`` is c° and ``price`` the posted
    price r computed at floor c⁺ on the survivor's posterior.
    """
    pool_size: int
    cutoff: float
    price: float

    @property
    def option_lottery(self):
        m = self.pool_size
        return 1.0 / m, self.cutoff / m

    @property
    def option_buy(self):
        m = self.pool_size
        return 1.0, self.cutoff / m + self.price * (m - 1) / m

    def choose(self, value):
        """
        Utility-maximising option, ties resolved toward buying

        u(buy) - u(lottery) = (m - 1) / m * (value - price), so the sign is
        decided by comparing the value with the price directly.
        """
        return self.option_buy if value >= self.price else self.option_lottery


@dataclass(frozen=True, eq=False)
class AuctionInstance:
    """
    n bidders with independent marginals or an explicit joint table

    Parameters:
        marginals (tuple, optional): one DiscreteDistribution per bidder
        joint (tuple, optional): ((profile, mass), ...) rows of a joint prior
    """
    marginals: Optional[tuple] = None
    joint: Optional[tuple] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if (self.marginals is None) == (self.joint is None):
            raise InvalidInstance("instance needs exactly one of independent marginals or a joint table")
        if self.marginals is not None:
            marginals = tuple(self.marginals)
            if not marginals:
                raise InvalidInstance("instance needs at least one bidder")
            if not all(isinstance(d, DiscreteDistribution) for d in marginals):
                raise InvalidInstance("independent prior must list DiscreteDistribution objects")
            object.__setattr__(self, "marginals", marginals)
            return

        merged = {}
        try:
            for profile, mass in self.joint:
                profile = tuple(float(v) for v in profile)
                merged[profile] = merged.get(profile, 0.0) + float(mass)
        except (TypeError, ValueError) as exc:
            raise InvalidInstance(f"joint rows must be [profile, mass] pairs of numbers: {exc}") from exc
        rows = tuple(sorted((p, m) for p, m in merged.items() if m > 0))
        if not rows:
            raise InvalidInstance("joint table is empty")
        n = len(rows[0][0])
        if n == 0 or any(len(p) != n for p, _ in rows):
            raise InvalidInstance("joint profiles must all have the same positive length")
        if any(not math.isfinite(v) or v < 0 for p, _ in rows for v in p):
            raise InvalidInstance("joint profile values must be finite and non-negative")
        total = math.fsum(m for _, m in rows)
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidInstance(f"joint masses sum to {total!r}, not 1")
        object.__setattr__(self, "joint", rows)

    @classmethod
    def independent(cls, dists):
        return cls(marginals=tuple(dists))

    @classmethod
    def from_joint(cls, table):
        """Build from a {profile: mass} mapping or an iterable of pairs."""
        items = table.items() if isinstance(table, dict) else table
        return cls(joint=tuple(items))

    @property
    def is_independent(self):
        return self.marginals is not None

    @property
    def bidders(self):
        if self.is_independent:
            return len(self.marginals)
        return len(self.joint[0][0])

    @cached_property
    def _rows(self):
        values = np.array([p for p, _ in self.joint])
        masses = np.array([m for _, m in self.joint])
        return values, masses

    def profiles(self):
        """All (profile, mass) pairs with positive mass, in lexicographic order."""
        return self._profiles

    @cached_property
    def _profiles(self):
        if not self.is_independent:
            return list(self.joint)
        rows = []
        for combo in itertools.product(*(zip(d.support, d.mass) for d in self.marginals)):
            rows.append((tuple(v for v, _ in combo), float(np.prod([m for _, m in combo]))))
        return rows

    def profile_count(self):
        if self.is_independent:
            return int(np.prod([len(d) for d in self.marginals]))
        return len(self.joint)

    def marginal(self, i):
        if self.is_independent:
            return self.marginals[i]
        values, masses = self._rows
        return _aggregate(values[:, i], masses)

    def supports(self):
        return [self.marginal(i).support for i in range(self.bidders)]

    def posterior(self, i, floor, knowledge=None):
        """
        Posterior of bidder i given v_i >= floor and what is known of others

        Parameters:
            i (int): bidder index
            floor (float): conditioning cutoff
            knowledge (dict, optional): bidder index -> Knowledge; ignored for
                independent priors

        Returns:
            DiscreteDistribution or None: None when the event has zero mass
        """
        if self.is_independent:
            try:
                return conditional_at_least(self.marginals[i], floor)
            except ZeroProbabilityCondition:
                return None

        values, masses = self._rows
        keep = values[:, i] >= floor
        for j, known in (knowledge or {}).items():
            keep &= known.admits(values[:, j])
        if not keep.any():
            return None
        return _aggregate(values[keep, i], masses[keep])

    def offer(self, i, floor, knowledge=None):
        """
        Revenue-optimal take-it-or-leave price for bidder i, cached

        Returns None when the conditioning event has zero mass.
        """
        known = () if self.is_independent else tuple(sorted((knowledge or {}).items(), key=lambda kv: kv[0]))
        key = ("offer", i, float(floor), known)
        if key not in self._cache:
            d = self.posterior(i, floor, knowledge)
            self._cache[key] = None if d is None else posted_price_revenue(d, floor)[0]
        return self._cache[key]

    def virtual_values(self, i):
        if not self.is_independent:
            raise RequiresIndependence()
        key = ("phi", i)
        if key not in self._cache:
            self._cache[key] = virtual_values(self.marginals[i])
        return self._cache[key]

    def restricted(self, floor):
        """Independent marginals each conditioned on v_i >= floor."""
        if not self.is_independent:
            raise RequiresIndependence()
        return AuctionInstance.independent(conditional_at_least(d, floor) for d in self.marginals)


def _aggregate(values, masses):
    support, inverse = np.unique(values, return_inverse=True)
    mass = np.bincount(inverse, weights=masses)
    return DiscreteDistribution(tuple(support), tuple(mass / mass.sum()))


def posted_price_revenue(d: DiscreteDistribution, floor=0.0):
    """
    Best posted price at or above ``floor`` against d conditioned on v >= floor

    Parameters:
        d (DiscreteDistribution): value distribution
        floor (float): lowest admissible price

    Returns:
        tuple: (price, expected revenue); ties go to the lowest price

    Raises:
        ZeroProbabilityCondition: when Pr[v >= floor] = 0
    """
    k0 = bisect.bisect_left(d.support, floor)
    if k0 == len(d.support):
        raise ZeroProbabilityCondition()
    prices = np.asarray(d.support[k0:])
    tail = np.asarray(d.tail[k0:])
    revenues = prices * tail / tail[0]
    best = revenues.max()
    k = int(np.argmax(revenues >= best - TIE_TOL * max(1.0, best)))
    return float(prices[k]), float(revenues[k])


def _coerce_schedule(sched):
    if sched is None:
        return PoolSchedule()
    if isinstance(sched, PoolSchedule):
        return sched
    return PoolSchedule(tuple(sched))


def _final_offer(inst, n, winner, floor, knowledge, bid):
    price = inst.offer(winner, floor, knowledge)
    if price is None:
        logger.debug("empty posterior for bidder %d at floor %g, posting the floor", winner, floor)
        price = floor
    if bid >= price:
        return Outcome.single(n, winner, 1.0, price)
    return Outcome.empty(n)


def run_la(inst: AuctionInstance, profile):
    """
    Lookahead auction

    The cutoff rises until one bidder remains; the highest bidder (lowest
    index on ties) then faces the optimal posted price of their posterior
    at the second-highest value.
    """
    return run_lap(inst, PoolSchedule(), profile)


def run_lap(inst: AuctionInstance, sched, profile):
    """
    Lookahead auction with pooling

    Parameters:
        inst (AuctionInstance): prior used for posteriors
        sched (PoolSchedule): jump intervals
        profile (tuple): one bid per bidder

    Returns:
        Outcome: allocation probabilities and expected payments
    """
    sched = _coerce_schedule(sched)
    bids = tuple(float(b) for b in profile)
    n = len(bids)
    if n != inst.bidders:
        raise InvalidInstance(f"profile has {n} bids for {inst.bidders} bidders")

    cutoff = 0.0
    active = list(range(n))
    knowledge = {}
    for s, t in sched:
        if s < cutoff:
            raise NonMonotoneSchedule()
        reach = [i for i in active if bids[i] >= s]
        if len(reach) < 2:
            break
        for i in active:
            if bids[i] < s:
                knowledge[i] = Knowledge.exact(bids[i])
        survivors = [i for i in reach if bids[i] >= t]
        for i in reach:
            if bids[i] < t:
                knowledge[i] = Knowledge.interval(s, t)
        m = len(reach)

        if len(survivors) >= 2:
            active, cutoff = survivors, t
            continue
        if not survivors:
            alloc = [0.0] * n
            pay = [0.0] * n
            for i in reach:
                alloc[i], pay[i] = 1.0 / m, s / m
            return Outcome(tuple(alloc), tuple(pay))

        (winner,) = survivors
        price = inst.offer(winner, t, knowledge)
        if price is None:
            logger.debug("empty posterior for survivor %d at %g, posting the jump top", winner, t)
            price = t
        alloc, pay = MenuChoice(m, s, price).choose(bids[winner])
        return Outcome.single(n, winner, alloc, pay)

    ranked = sorted(active, key=lambda i: (-bids[i], i))
    winner = ranked[0]
    floor = bids[ranked[1]] if len(ranked) > 1 else cutoff
    for i in ranked[1:]:
        knowledge[i] = Knowledge.exact(bids[i])
    return _final_offer(inst, n, winner, floor, knowledge, bids[winner])


def run_myerson(inst: AuctionInstance, profile):
    """
    Myerson's optimal auction on independent priors

    The bidder with the highest positive ironed virtual value wins (lowest
    index on ties) and pays the least support value at which they would
    still win.
    """
    if not inst.is_independent:
        raise RequiresIndependence()
    n = inst.bidders
    tables = [inst.virtual_values(i) for i in range(n)]
    scores = [tables[i].ironed_for_bid(b) for i, b in enumerate(profile)]
    best = max(scores)
    if best <= 0:
        return Outcome.empty(n)
    winner = scores.index(best)

    lower = max(scores[:winner], default=-math.inf)
    higher = max(scores[winner + 1:], default=-math.inf)
    table = tables[winner]
    for v, phi in zip(table.values, table.phi_bar):
        if phi > 0 and phi > lower and phi >= higher:
            return Outcome.single(n, winner, 1.0, v)
    raise AssertionError("winning bidder has no threshold value")


def run_posted_price(inst: AuctionInstance, price, profile):
    """Take-it-or-leave-it offer at ``price`` to bidder 0."""
    n = len(profile)
    if profile[0] >= price:
        return Outcome.single(n, 0, 1.0, float(price))
    return Outcome.empty(n)


def run_first_price(inst: AuctionInstance, profile):
    # not truthful: the winner pays their own bid
    n = len(profile)
    winner = max(range(n), key=lambda i: (profile[i], -i))
    return Outcome.single(n, winner, 1.0, float(profile[winner]))


@dataclass(frozen=True)
class Mechanism:
    """A named rule (instance, profile) -> Outcome."""
    name: str
    rule: Callable
    schedule: PoolSchedule = field(default_factory=PoolSchedule)

    def __call__(self, inst, profile):
        return self.rule(inst, profile)

    def __str__(self):
        return self.name if not self.schedule.jumps else f"{self.name} {self.schedule}"


def la_mechanism():
    return Mechanism("la", run_la)


def lap_mechanism(schedule):
    schedule = _coerce_schedule(schedule)
    return Mechanism("lap", lambda inst, profile: run_lap(inst, schedule, profile), schedule)


def myerson_mechanism():
    return Mechanism("myerson", run_myerson)


def posted_price_mechanism(price):
    return Mechanism(f"posted {price:g}", lambda inst, profile: run_posted_price(inst, price, profile))


def first_price_mechanism():
    return Mechanism("first-price", run_first_price)


def expected_revenue(inst: AuctionInstance, mech):
    """
    Exact expected revenue: sum over profiles of mass times total payment

    Parameters:
        inst (AuctionInstance): the prior
        mech (callable): mechanism (instance, profile) -> Outcome

    Returns:
        float: expected revenue
    """
    rows = inst.profiles()
    masses = np.array([m for _, m in rows])
    revenues = np.array([mech(inst, p).revenue for p, _ in rows])
    # np.sum reduces pairwise, so the result does not depend on evaluation order
    return float(np.sum(masses * revenues))


def outcome_table(inst: AuctionInstance, mech):
    """
    Profile-level outcomes as a DataFrame

    Columns: v1..vn, mass, alloc1..allocn, pay1..payn, revenue.
    """
    n = inst.bidders
    records = []
    for profile, mass in inst.profiles():
        out = mech(inst, profile)
        row = {f"v{i + 1}": v for i, v in enumerate(profile)}
        row["mass"] = mass
        row.update({f"alloc{i + 1}": a for i, a in enumerate(out.alloc)})
        row.update({f"pay{i + 1}": p for i, p in enumerate(out.pay)})
        row["revenue"] = out.revenue
        records.append(row)
    columns = (
        [f"v{i + 1}" for i in range(n)] + ["mass"]
        + [f"alloc{i + 1}" for i in range(n)] + [f"pay{i + 1}" for i in range(n)] + ["revenue"]
    )
    return pd.DataFrame.from_records(records, columns=columns)


def myerson_virtual_surplus(inst: AuctionInstance):
    """E[max_i phi_bar_i(v_i)^+], the optimal revenue on independent priors."""
    n = inst.bidders
    tables = [inst.virtual_values(i) for i in range(n)]
    rows = inst.profiles()
    masses = np.array([m for _, m in rows])
    best = np.array([max(0.0, *(tables[i].ironed(v) for i, v in enumerate(p))) for p, _ in rows])
    return float(np.sum(masses * best))
