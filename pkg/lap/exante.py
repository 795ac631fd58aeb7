"""
Ex-ante relaxation and the two-bidder pooling mechanism against a dummy bidder.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import pandas as pd

from lap.config import MASS_TOL, TOL
from lap.dist import envelope_value, iron_lottery, point_mass, price_at_quantile, revenue_curve
from lap.errors import ConstraintViolation
from lap.mech import AuctionInstance, PoolSchedule, expected_revenue, lap_mechanism

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BidderAllocation:
    """
    One bidder's share of an ex-ante solution

    ``alpha`` weighs quantile ``q1`` (price ``p1``) against ``q2`` (price
    ``p2``); a single price has alpha = 1 and q1 = q2. A zero quantile has
    an infinite price (never sell).
    """
    x: float
    revenue: float
    alpha: float
    q1: float
    q2: float
    p1: float
    p2: float

    @property
    def single(self):
        return self.alpha >= 1.0 or self.q1 == self.q2

    @property
    def price(self):
        return self.p1 if self.single else None

    def finite_prices(self):
        prices = [self.p1] if self.single else [self.p1, self.p2]
        return [p for p in prices if math.isfinite(p)]


@dataclass(frozen=True)
class ExAnteSolution:
    x: tuple
    value: float
    per_bidder: tuple
    budget: float = 1.0

    @property
    def total(self):
        return math.fsum(self.x)


@dataclass(frozen=True)
class LemmaOneReport:
    """
    Exact revenues of the three candidate pooling mechanisms

    Revenues, bounds and ``opt_exante`` are in instance units. ``point``
    holds the normalised ex-ante point (r1, r2, x1, x2) the bounds come from.
    """
    rev1: float
    rev2: float
    rev3: float
    chosen: int
    lower_bounds: tuple
    opt_exante: float
    ratio: float
    schedule: PoolSchedule
    point: tuple
    irregular: bool
    combination: float
    shifted: tuple
    candidates: tuple = field(default=(), repr=False)

    @property
    def revenues(self):
        return (self.rev1, self.rev2, self.rev3)

    @property
    def revenue(self):
        return self.revenues[self.chosen - 1]

    def candidate_table(self):
        return pd.DataFrame.from_records(
            list(self.candidates), columns=["family", "schedule", "revenue", "fallback"]
        )

    def summary(self):
        return {
            "opt_exante": self.opt_exante,
            "rev1": self.rev1,
            "rev2": self.rev2,
            "rev3": self.rev3,
            "chosen": self.chosen,
            "ratio": self.ratio,
            "schedule": str(self.schedule),
            "lower_bounds": list(self.lower_bounds),
            "point": list(self.point),
            "irregular": self.irregular,
            "combination": self.combination,
            "shifted_x": list(self.shifted),
        }


def decompose(curve, x):
    """Split ex-ante probability x into one price or a two-price lottery."""
    alpha, q1, q2 = iron_lottery(curve, x)
    p1 = price_at_quantile(curve, q1)
    p2 = price_at_quantile(curve, q2)
    return BidderAllocation(
        x=x,
        revenue=envelope_value(curve, x),
        alpha=alpha,
        q1=q1,
        q2=q2,
        p1=math.inf if p1 is None else p1,
        p2=math.inf if p2 is None else p2,
    )


def _snap(curve, x):
    for q, _ in curve.envelope:
        if abs(q - x) <= MASS_TOL:
            return q
    return x


def _build_solution(curves, x, budget):
    x = tuple(_snap(c, xi) for c, xi in zip(curves, x))
    per_bidder = tuple(decompose(c, xi) for c, xi in zip(curves, x))
    value = math.fsum(b.revenue for b in per_bidder)
    return ExAnteSolution(x, value, per_bidder, budget)


def solve_exante(curves, budget=1.0):
    """
    Maximise sum of envelope revenues subject to sum of x_i <= budget

    Envelopes are concave and piecewise linear, so filling segments in
    order of decreasing slope is exact. Equal slopes go to the lower bidder
    index first. Segments with slope zero are filled too, so a budget
    beyond the revenue-maximising quantile still buys sale probability.

    Parameters:
        curves (list): one RevenueCurve per bidder
        budget (float): total ex-ante sale probability

    Returns:
        ExAnteSolution: allocation, objective value and price decomposition
    """
    segments = []
    for i, c in enumerate(curves):
        for ((q0, _), (q1, _)), slope in zip(c.segments, c.slopes):
            segments.append((-slope, i, q0, q1))
    segments.sort()

    x = [0.0] * len(curves)
    remaining = float(budget)
    for neg_slope, i, q0, q1 in segments:
        if -neg_slope < 0 or remaining <= 0:
            break
        take = min(q1 - q0, remaining)
        x[i] = q1 if take == q1 - q0 else x[i] + take
        remaining -= take

    sol = _build_solution(curves, x, budget)
    logger.debug("ex-ante solution x=%s value=%.12g", sol.x, sol.value)
    return sol


def _ironed_segment(curve, x):
    """Envelope segment (a, b, slope) strictly containing x, if ironed."""
    for a, b in curve.ironed_intervals:
        if a + MASS_TOL < x < b - MASS_TOL:
            qs = [q for q, _ in curve.envelope]
            k = qs.index(a)
            (qa, ra), (qb, rb) = curve.envelope[k], curve.envelope[k + 1]
            return qa, qb, (rb - ra) / (qb - qa)
    return None


def shift_ironed(curves, solution, dummy=None):
    """
    Walk along equal-slope ironed segments without changing the objective

    While two real bidders sit strictly inside ironed segments of the same
    slope, mass moves from the later bidder to the earlier one until one of
    them reaches a breakpoint. A real bidder left inside an ironed segment
    whose slope equals the dummy's then absorbs dummy mass up to a
    breakpoint.

    Parameters:
        curves (list): revenue curves, as passed to solve_exante
        solution (ExAnteSolution): a feasible ex-ante point
        dummy (int, optional): index of the dummy bidder's curve

    Returns:
        ExAnteSolution: the shifted point
    """
    x = list(solution.x)
    real = [i for i in range(len(curves)) if i != dummy]

    while True:
        inside = [(i, _ironed_segment(curves[i], x[i])) for i in real]
        inside = [(i, seg) for i, seg in inside if seg is not None]
        pair = next(
            ((a, b) for a, b in itertools.combinations(inside, 2)
             if abs(a[1][2] - b[1][2]) <= TOL),
            None,
        )
        if pair is None:
            break
        (i, (_, bi, _)), (j, (aj, _, _)) = pair
        delta = min(bi - x[i], x[j] - aj)
        x[i] += delta
        x[j] -= delta
        x[i], x[j] = _snap(curves[i], x[i]), _snap(curves[j], x[j])

    if dummy is not None and x[dummy] > 0:
        dummy_slope = curves[dummy].slopes[0] if curves[dummy].slopes else 0.0
        for i in real:
            seg = _ironed_segment(curves[i], x[i])
            if seg is not None and abs(seg[2] - dummy_slope) <= TOL:
                delta = min(seg[1] - x[i], x[dummy])
                x[i] = _snap(curves[i], x[i] + delta)
                x[dummy] -= delta
                break

    shifted = _build_solution(curves, x, solution.budget)
    if abs(shifted.value - solution.value) > TOL * max(1.0, abs(solution.value)):
        logger.warning("ironed shift moved the objective from %.12g to %.12g", solution.value, shifted.value)
    return shifted


def claim1_bounds(r1, r2, x1, x2):
    """
    Lower bounds on the revenue of the three candidate mechanisms

    Inputs are normalised so the dummy value is 1.

    Returns:
        tuple: (b1, b2, b3)

    Raises:
        ConstraintViolation: when x1, x2 >= 0, x1 + x2 <= 1, r1 >= x1 and
            r2 >= x2 do not all hold
    """
    eps = 1e-12
    if x1 < -eps or x2 < -eps or x1 + x2 > 1 + eps or r1 < x1 - eps or r2 < x2 - eps:
        raise ConstraintViolation(f"infeasible ex-ante point r=({r1}, {r2}) x=({x1}, {x2})")
    b1 = r1 + r2 - (r2 * x1 + r1 * x2) / 2
    b2 = max(r1, r2)
    b3 = max(1 + (r1 - x1) / 2, 1 + (r2 - x2) / 2)
    return b1, b2, b3


def exante_benchmark(r1, r2, x1, x2):
    return r1 + r2 + 1 - x1 - x2


def lemma1_mechanism(dA, dB, v):
    """
    Best of three pooling mechanisms for two bidders with values >= v

    The benchmark is the ex-ante relaxation with a third, dummy bidder of
    deterministic value v. Candidate mechanisms run on the two real bidders:

      1. pool [min(pA, pB), max(pA, pB)] for ex-ante prices pA, pB
      2. no pooling (plain lookahead)
      3. pool [v, p] for an ex-ante price p of either bidder

    When an ex-ante probability is a two-price lottery, every finite price
    of the lottery is tried. An empty or unbounded pool falls back to (2).

    Parameters:
        dA (DiscreteDistribution): bidder A's values
        dB (DiscreteDistribution): bidder B's values
        v (float): dummy value, positive and at most every support value

    Returns:
        tuple: (Mechanism, LemmaOneReport)
    """
    if not v > 0:
        raise ConstraintViolation("dummy value v must be positive")
    if dA.support[0] < v or dB.support[0] < v:
        raise ConstraintViolation("values must be at least v")

    curves = [revenue_curve(dA), revenue_curve(dB), revenue_curve(point_mass(v))]
    raw = solve_exante(curves, 1.0)
    sol = shift_ironed(curves, raw, dummy=2)
    a, b = sol.per_bidder[0], sol.per_bidder[1]
    r1, r2, x1, x2 = a.revenue / v, b.revenue / v, a.x, b.x
    bounds = tuple(bound * v for bound in claim1_bounds(r1, r2, x1, x2))
    opt = sol.value

    inst = AuctionInstance.independent([dA, dB])
    cache = {}

    def evaluate(family, jump):
        fallback = jump is None
        schedule = PoolSchedule() if fallback else PoolSchedule((jump,))
        if schedule not in cache:
            cache[schedule] = expected_revenue(inst, lap_mechanism(schedule))
        rows.append({"family": family, "schedule": str(schedule),
                     "revenue": cache[schedule], "fallback": fallback})
        return cache[schedule], schedule

    def pool(lo, hi):
        if not (math.isfinite(hi) and lo < hi):
            return None
        return (lo, hi)

    rows = []
    first = [evaluate(1, pool(min(pa, pb), max(pa, pb)))
             for pa, pb in itertools.product(_price_options(a), _price_options(b))]
    second = [evaluate(2, None)]
    third = [evaluate(3, pool(v, p)) for p in (*_price_options(a), *_price_options(b))]

    best = [max(group, key=lambda item: item[0]) for group in (first, second, third)]
    revs = [rev for rev, _ in best]
    chosen = revs.index(max(revs)) + 1
    schedule = best[chosen - 1][1]
    if any(r.get("fallback") for r in rows):
        logger.debug("degenerate pooling candidates fell back to plain lookahead")

    irregular = not (a.single and b.single) or curves[0].is_ironed() or curves[1].is_ironed()
    report = LemmaOneReport(
        rev1=revs[0],
        rev2=revs[1],
        rev3=revs[2],
        chosen=chosen,
        lower_bounds=bounds,
        opt_exante=opt,
        ratio=revs[chosen - 1] / opt if opt > 0 else math.inf,
        schedule=schedule,
        point=(r1, r2, x1, x2),
        irregular=irregular,
        combination=2.0 / 3.0 * (revs[0] + revs[1] / 2),
        shifted=tuple(sol.x),
        candidates=tuple(rows),
    )
    for k, (rev, bound) in enumerate(zip(report.revenues, bounds), start=1):
        if rev < bound - TOL:
            logger.warning("candidate %d revenue %.12g below its bound %.12g", k, rev, bound)
    logger.debug("pooling candidates %s chosen %d ratio %.6f", report.revenues, chosen, report.ratio)
    return lap_mechanism(schedule), report


def _price_options(alloc):
    prices = alloc.finite_prices()
    return prices if prices else [math.inf]
