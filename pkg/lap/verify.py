"""
Verification: incentive checks, LP benchmark, ratio measurement, grid check
of the 4/7 inequality and exhaustive pooling-schedule search.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from lap.config import (
    FOUR_SEVENTHS,
    LP_MAX_PROFILES,
    LP_TOL,
    TOL,
    TWO_THIRDS,
)
from lap.errors import InstanceTooLarge, ZeroBenchmark
from lap.exante import claim1_bounds, exante_benchmark
from lap.mech import (
    PoolSchedule,
    expected_revenue,
    la_mechanism,
    lap_mechanism,
    myerson_mechanism,
    myerson_virtual_surplus,
    run_la,
    run_lap,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Witness:
    bidder: int
    profile: tuple
    bid: float
    truthful: float
    deviating: float


@dataclass(frozen=True)
class DeviationReport:
    passed: bool
    witness: Optional[Witness] = None

    def summary(self):
        out = {"passed": self.passed}
        if self.witness is not None:
            w = self.witness
            out["witness"] = {
                "bidder": w.bidder,
                "profile": list(w.profile),
                "bid": w.bid,
                "truthful_utility": w.truthful,
                "deviating_utility": w.deviating,
            }
        return out


@dataclass(frozen=True)
class GridCheckReport:
    """
    Minimum of max(candidate bounds) / ex-ante benchmark over a grid

    ``lemma2_min`` is the same minimum for max(b1, b2) restricted to points
    with min(r1, r2) >= 1, which must stay above 2/3.
    """
    grid_step: float
    rmax: float
    min_ratio: float
    argmin: tuple
    points: int
    lemma2_min: float
    lemma2_argmin: Optional[tuple]

    @property
    def margin(self):
        return self.min_ratio / FOUR_SEVENTHS

    @property
    def passed(self):
        return self.min_ratio >= FOUR_SEVENTHS - TOL and self.lemma2_min >= TWO_THIRDS - TOL

    def summary(self):
        return {
            "grid_step": self.grid_step,
            "rmax": self.rmax,
            "min_ratio": self.min_ratio,
            "argmin": list(self.argmin),
            "margin": self.margin,
            "points": self.points,
            "lemma2_min": self.lemma2_min,
            "lemma2_argmin": list(self.lemma2_argmin) if self.lemma2_argmin else None,
            "passed": self.passed,
        }


def _schedules_of(mech):
    schedule = getattr(mech, "schedule", None)
    return [schedule] if schedule is not None and len(schedule) else []


def deviation_bids(inst, schedules=(), delta=1e-6):
    """
    Finite set of bids on which any mechanism here changes behaviour

    Union of all supports, midpoints of neighbouring values, 0, every pool
    endpoint and each endpoint +/- delta, plus one bid above everything.

    Parameters:
        inst (AuctionInstance): instance whose supports seed the set
        schedules (iterable): PoolSchedules whose endpoints are added
        delta (float): offset around pool endpoints

    Returns:
        list: sorted distinct non-negative bids
    """
    values = sorted({v for support in inst.supports() for v in support})
    bids = set(values)
    bids.add(0.0)
    bids.update((a + b) / 2 for a, b in zip(values, values[1:]))
    for schedule in schedules:
        for x in schedule.endpoints:
            bids.update((x, x - delta, x + delta))
    bids.add(values[-1] + 1.0)
    return sorted(b for b in bids if b >= 0)


def check_dsic_ir(inst, mech, bids=None):
    """
    Exhaustive ex-post incentive and participation check

    Profiles, bidders and deviation bids are visited in sorted order, so
    the reported witness is the lexicographically smallest violation.

    Parameters:
        inst (AuctionInstance): the prior (its support is checked)
        mech (callable): mechanism (instance, profile) -> Outcome
        bids (list, optional): deviation bids; defaults to deviation_bids

    Returns:
        DeviationReport: passed flag and the first witness
    """
    if bids is None:
        bids = deviation_bids(inst, _schedules_of(mech))
    memo = {}

    def outcome(profile):
        if profile not in memo:
            memo[profile] = mech(inst, profile)
        return memo[profile]

    for profile in sorted(p for p, _ in inst.profiles()):
        truthful = outcome(profile)
        for i, value in enumerate(profile):
            honest = truthful.utility(i, value)
            if honest < -TOL:
                logger.debug("IR violated by bidder %d at %s", i, profile)
                return DeviationReport(False, Witness(i, profile, value, honest, honest))
            for bid in bids:
                if bid == value:
                    continue
                deviated = profile[:i] + (bid,) + profile[i + 1:]
                gain = outcome(deviated).utility(i, value)
                if gain > honest + TOL:
                    logger.debug("bidder %d gains %.6g by bidding %g at %s", i, gain - honest, bid, profile)
                    return DeviationReport(False, Witness(i, profile, bid, honest, gain))
    return DeviationReport(True)


def optimal_dsic_lp(inst):
    """
    Revenue of the optimal ex-post DSIC and IR mechanism, by linear program

    Variables are an allocation probability and a payment per bidder on
    every profile of the product of marginal supports (profiles outside
    the prior get zero weight but still carry incentive constraints).

    Parameters:
        inst (AuctionInstance): independent or joint prior

    Returns:
        float: optimal expected revenue

    Raises:
        InstanceTooLarge: when the profile grid exceeds LP_MAX_PROFILES
    """
    supports = inst.supports()
    n = len(supports)
    count = int(np.prod([len(s) for s in supports]))
    if count > LP_MAX_PROFILES:
        raise InstanceTooLarge(f"{count} profiles exceed the LP limit of {LP_MAX_PROFILES}")

    grid = list(itertools.product(*supports))
    index = {p: k for k, p in enumerate(grid)}
    mass = dict(inst.profiles())

    def x_var(k, i):
        return 2 * (k * n + i)

    def p_var(k, i):
        return 2 * (k * n + i) + 1

    size = 2 * n * count
    cost = np.zeros(size)
    for k, profile in enumerate(grid):
        for i in range(n):
            cost[p_var(k, i)] = -mass.get(profile, 0.0)

    rows, cols, vals, rhs = [], [], [], []
    row = 0

    def add(entries, bound):
        nonlocal row
        for col, val in entries:
            rows.append(row)
            cols.append(col)
            vals.append(val)
        rhs.append(bound)
        row += 1

    for k, profile in enumerate(grid):
        add([(x_var(k, i), 1.0) for i in range(n)], 1.0)
        for i, value in enumerate(profile):
            add([(p_var(k, i), 1.0), (x_var(k, i), -value)], 0.0)
            for other in supports[i]:
                if other == value:
                    continue
                j = index[profile[:i] + (other,) + profile[i + 1:]]
                add([(x_var(k, i), -value), (p_var(k, i), 1.0),
                     (x_var(j, i), value), (p_var(j, i), -1.0)], 0.0)

    a_ub = coo_matrix((vals, (rows, cols)), shape=(row, size)).tocsr()
    bounds = [(0.0, 1.0) if col % 2 == 0 else (None, None) for col in range(size)]
    result = linprog(
        c=cost,
        A_ub=a_ub,
        b_ub=np.asarray(rhs),
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": LP_TOL, "dual_feasibility_tolerance": LP_TOL},
    )
    if result.status != 0:
        logger.warning("LP benchmark finished with status %d: %s", result.status, result.message)
    logger.debug("LP benchmark over %d profiles: %.12g", count, -result.fun)
    return float(-result.fun)


def ratio_report(inst, mech, benchmark):
    """
    Expected revenue of mech divided by a benchmark revenue

    ``benchmark`` is either a number or a callable taking the instance.

    Raises:
        ZeroBenchmark: when the benchmark is not positive
    """
    bench = benchmark(inst) if callable(benchmark) else float(benchmark)
    if not bench > 0:
        raise ZeroBenchmark()
    return expected_revenue(inst, mech) / bench


def grid_point_ratio(r1, r2, x1, x2):
    """max of the three candidate bounds over the ex-ante benchmark"""
    return max(claim1_bounds(r1, r2, x1, x2)) / exante_benchmark(r1, r2, x1, x2)


def grid_check_47(step, rmax):
    """
    Check max(b1, b2, b3) >= 4/7 * (r1 + r2 + 1 - x1 - x2) on a grid

    The grid covers x1, x2 >= 0 with x1 + x2 <= 1 and x_i <= r_i <= rmax in
    multiples of ``step``. The bounds are symmetric under swapping bidders,
    so only x1 <= x2 is visited. Points with min(r1, r2) >= 1 are also
    checked against 2/3 using max(b1, b2) alone.

    Parameters:
        step (float): grid spacing in (0, 0.1]
        rmax (float): largest revenue coordinate, >= 2

    Returns:
        GridCheckReport: minimum ratio, where it occurs and the 2/3 check
    """
    levels = int(round(1.0 / step))
    r_grid = np.round(np.arange(int(round(rmax / step)) + 1) * step, 12)
    best = (math.inf, None)
    lemma2 = (math.inf, None)
    points = 0

    for k1 in range(levels + 1):
        for k2 in range(k1, levels + 1 - k1):
            x1, x2 = round(k1 * step, 12), round(k2 * step, 12)
            r1 = r_grid[k1:][:, None]
            r2 = r_grid[k2:][None, :]
            b1 = r1 + r2 - (r2 * x1 + r1 * x2) / 2
            b2 = np.maximum(r1, r2)
            b3 = np.maximum(1 + (r1 - x1) / 2, 1 + (r2 - x2) / 2)
            bench = r1 + r2 + 1 - x1 - x2
            ratio = np.maximum(np.maximum(b1, b2), b3) / bench
            points += ratio.size

            a, b = np.unravel_index(np.argmin(ratio), ratio.shape)
            if ratio[a, b] < best[0]:
                best = (float(ratio[a, b]), (float(r1[a, 0]), float(r2[0, b]), x1, x2))

            region = (r1 >= 1) & (r2 >= 1)
            if region.any():
                tight = np.where(region, np.maximum(b1, b2) / bench, np.inf)
                a, b = np.unravel_index(np.argmin(tight), tight.shape)
                if tight[a, b] < lemma2[0]:
                    lemma2 = (float(tight[a, b]), (float(r1[a, 0]), float(r2[0, b]), x1, x2))

    report = GridCheckReport(step, rmax, best[0], best[1], points, lemma2[0], lemma2[1])
    logger.debug("grid check: min ratio %.9f at %s over %d points", report.min_ratio, report.argmin, points)
    return report


def single_jump_family(endpoints):
    """The empty schedule followed by every single jump [s, t] with s < t."""
    yield PoolSchedule()
    for s, t in itertools.combinations(sorted(set(endpoints)), 2):
        yield PoolSchedule(((s, t),))


def multi_jump_family(endpoints, max_jumps):
    """Every schedule of at most ``max_jumps`` jumps between the endpoints."""
    points = sorted(set(endpoints))

    def extend(start, left):
        if left == 0:
            return
        for a in range(start, len(points)):
            for b in range(a + 1, len(points)):
                jump = (points[a], points[b])
                yield (jump,)
                for rest in extend(b, left - 1):
                    yield (jump,) + rest

    yield PoolSchedule()
    for jumps in extend(0, max_jumps):
        yield PoolSchedule(jumps)


def candidate_endpoints(inst):
    return sorted({0.0} | {v for support in inst.supports() for v in support})


def _second_highest(profile):
    if len(profile) < 2:
        return 0.0
    return sorted(profile, reverse=True)[1]


def search_lap(inst, family=None, max_jumps=None, endpoints=None):
    """
    Revenue-maximising pooling schedule

    With an explicit ``family`` every schedule in it is evaluated and the
    first best one kept. Without one, an exact dynamic program searches all
    schedules whose endpoints lie in ``endpoints`` (default: 0 and every
    support value). It relies on a profile's outcome being fixed by the
    jump [s, t) holding the second-highest bid, which holds for independent
    priors and for two bidders; other joint priors fall back to enumerating
    schedules of at most two jumps.

    Parameters:
        inst (AuctionInstance): the prior
        family (iterable, optional): PoolSchedules to compare
        max_jumps (int, optional): cap on the number of jumps
        endpoints (iterable, optional): candidate jump endpoints

    Returns:
        tuple: (PoolSchedule, expected revenue)
    """
    points = sorted(set(endpoints)) if endpoints is not None else candidate_endpoints(inst)
    if family is None and not inst.is_independent and inst.bidders > 2:
        family = multi_jump_family(points, 2 if max_jumps is None else max_jumps)
    if family is not None:
        best_schedule, best_revenue = None, -math.inf
        for schedule in family:
            revenue = expected_revenue(inst, lap_mechanism(schedule))
            if best_schedule is None or revenue > best_revenue + TOL * max(1.0, abs(best_revenue)):
                best_schedule, best_revenue = schedule, revenue
        logger.debug("family search: %s with revenue %.12g", best_schedule, best_revenue)
        return best_schedule, best_revenue
    return _search_dp(inst, points, max_jumps)


def _search_dp(inst, points, max_jumps):
    rows = inst.profiles()
    masses = np.array([m for _, m in rows])
    second = np.array([_second_highest(p) for p, _ in rows])
    la = np.array([run_la(inst, p).revenue for p, _ in rows])

    m = len(points)
    gain = {}
    for a, b in itertools.combinations(range(m), 2):
        s, t = points[a], points[b]
        hit = np.flatnonzero((second >= s) & (second < t))
        if not len(hit):
            continue
        schedule = PoolSchedule(((s, t),))
        pooled = np.array([run_lap(inst, schedule, rows[k][0]).revenue for k in hit])
        gain[a, b] = float(np.sum(masses[hit] * (pooled - la[hit])))

    jumps = m if max_jumps is None else max_jumps
    # value[i][k]: best total gain from jumps starting at or after points[i]
    value = [[0.0] * (jumps + 1) for _ in range(m + 1)]
    choice = [[None] * (jumps + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        for k in range(1, jumps + 1):
            value[i][k], choice[i][k] = value[i + 1][k], None
            for j in range(i + 1, m):
                g = gain.get((i, j))
                if g is None:
                    continue
                total = g + value[j][k - 1]
                if total > value[i][k] + 1e-12:
                    value[i][k], choice[i][k] = total, j

    selected = []
    i, k = 0, jumps
    while i < m and k > 0:
        j = choice[i][k]
        if j is None:
            i += 1
            continue
        selected.append((points[i], points[j]))
        i, k = j, k - 1

    schedule = PoolSchedule(tuple(selected))
    revenue = expected_revenue(inst, lap_mechanism(schedule))
    logger.debug("schedule search: %s with revenue %.12g (%d endpoints)", schedule, revenue, m)
    return schedule, revenue


def verify_corpus(corpus, check_dsic=True, schedules_to_check=None):
    """
    Run the full pipeline on every instance of a corpus

    Parameters:
        corpus (iterable): (seed, AuctionInstance) pairs
        check_dsic (bool): also run check_dsic_ir on LA, Myerson and the best LAP
        schedules_to_check (callable, optional): instance -> extra schedules
            whose LAPs are DSIC-checked

    Returns:
        DataFrame: one row per instance with revenues, ratios and DSIC flags
    """
    records = []
    for seed, inst in corpus:
        schedule, lap_revenue = search_lap(inst)
        la_revenue = expected_revenue(inst, la_mechanism())
        myerson_revenue = expected_revenue(inst, myerson_mechanism())
        lp_revenue = optimal_dsic_lp(inst)
        row = {
            "seed": seed,
            "bidders": inst.bidders,
            "profiles": inst.profile_count(),
            "la": la_revenue,
            "lap": lap_revenue,
            "schedule": str(schedule),
            "myerson": myerson_revenue,
            "virtual_surplus": myerson_virtual_surplus(inst),
            "lp": lp_revenue,
            "lap_ratio": lap_revenue / lp_revenue,
            "la_ratio": la_revenue / lp_revenue,
        }
        if check_dsic:
            extra = list(schedules_to_check(inst)) if schedules_to_check else []
            row["dsic_la"] = check_dsic_ir(inst, la_mechanism()).passed
            row["dsic_myerson"] = check_dsic_ir(inst, myerson_mechanism()).passed
            row["dsic_lap"] = all(
                check_dsic_ir(inst, lap_mechanism(s)).passed for s in [schedule, *extra]
            )
        records.append(row)
        logger.debug("corpus seed %s: lap ratio %.6f", seed, row["lap_ratio"])
    return pd.DataFrame.from_records(records)
