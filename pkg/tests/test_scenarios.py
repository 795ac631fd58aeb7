import math
from fractions import Fraction

import pytest

from lap.errors import ConstraintViolation, InfeasibleGrid, InvalidInstance
from lap.mech import expected_revenue, la_mechanism
from lap.verify import optimal_dsic_lp
from lap.scenarios import (
    build_correlated,
    build_example1,
    closed_form_bound_holds,
    continuum_benchmark,
    correlated_ladder,
    correlated_opt_benchmark,
    decoder_exact,
    equal_revenue_grid,
    gen_corpus,
    gen_random_instance,
    lap_interval_revenue_closed_form,
    simulate_pooled_interval,
    slice_revenue,
)


def test_example1_rejects_bad_eps():
    with pytest.raises(InvalidInstance):
        build_example1(0)
    with pytest.raises(InvalidInstance):
        build_example1(1.5)


def test_equal_revenue_grid_is_exact():
    points, masses = equal_revenue_grid(4, Fraction(1, 2), ratio=2)
    assert points == [1, 2, 4]
    assert masses == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
    assert sum(masses) == 1


def test_equal_revenue_grid_rejects_off_grid_top():
    with pytest.raises(InfeasibleGrid):
        equal_revenue_grid(3.3, 1)


@pytest.fixture(scope="module")
def small_construction():
    return build_correlated(0.1, 0.25)


def test_correlated_decoder_is_exact(small_construction):
    c = small_construction
    assert decoder_exact(c)
    assert c.v1_support[0] == 1.0
    assert c.v1_support[-1] == 10.0
    assert math.fsum(m for _, m in c.instance.profiles()) == pytest.approx(1.0)


def test_correlated_slices_earn_two_minus_eps2(small_construction):
    """Given v1 = w the top offer sells w.p. eps2 at w / eps2, else bidder 1 pays w."""
    c = small_construction
    for w in (c.v1_support[0], c.v1_support[5], c.v1_support[-1]):
        assert slice_revenue(c, w) == pytest.approx((2 - c.eps2) * w)


def test_correlated_opt_beats_la(small_construction):
    c = small_construction
    opt = correlated_opt_benchmark(c)
    assert opt > expected_revenue(c.instance, la_mechanism())
    assert opt == pytest.approx((2 - c.eps2) * c.instance.marginal(0).mean())
    assert continuum_benchmark(0.1, 0.25) == pytest.approx(1.75 * math.log(10))


def test_correlated_bump_leaves_offers_unchanged(small_construction):
    """Bidder 2 accepts the top offer v1 / eps2 exactly when xi2 reaches 1 / eps2."""
    c = small_construction
    bump = Fraction(repr(c.eps)) ** 3
    top_xi = 1 / Fraction(repr(c.eps2))
    for v1 in c.v1_points:
        for xi in c.xi_points:
            stored = float(v1 * (xi + bump))
            assert abs(stored - float(v1 * xi)) <= float(v1 * bump) + 1e-12 * stored
            assert (stored >= float(v1) / c.eps2) == (xi >= top_xi)


@pytest.mark.slow
def test_correlated_opt_is_dsic_feasible(small_construction):
    c = small_construction
    assert optimal_dsic_lp(c.instance) >= correlated_opt_benchmark(c) - 1e-6


def test_correlated_benchmark_tracks_continuum():
    c = build_correlated(0.001, 0.05)
    ratio = correlated_opt_benchmark(c) / continuum_benchmark(0.001, 0.05)
    assert abs(ratio - 1) <= 0.05


def test_correlated_rejects_bad_parameters():
    with pytest.raises(InfeasibleGrid):
        build_correlated(0.25, 0.1)
    with pytest.raises(InfeasibleGrid):
        build_correlated(0.1, 0.1)


def test_correlated_ladder_columns():
    df = correlated_ladder([0.1], 0.25, max_jumps=1)
    assert list(df.columns) == ["eps1", "opt", "best_lap", "la", "ratio", "la_ratio", "continuum", "schedule"]
    row = df.iloc[0]
    assert row["best_lap"] >= row["la"] - 1e-9
    assert 0 < row["ratio"] <= 1


@pytest.mark.slow
def test_correlated_ladder_shrinks():
    df = correlated_ladder([0.02, 0.005, 0.001], 0.05)
    ratios = df["ratio"].tolist()
    assert all(b <= a + 1e-9 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] <= 0.58


def test_interval_closed_form():
    assert lap_interval_revenue_closed_form(1, 2) == pytest.approx(0.5 + 0.25 * math.log(2))
    assert closed_form_bound_holds(1, 2)
    with pytest.raises(ConstraintViolation):
        lap_interval_revenue_closed_form(2, 1)


@pytest.mark.parametrize("s, t", [(1, 2), (1, math.e), (2, 3)])
def test_pooled_interval_converges(s, t):
    discrete, closed = simulate_pooled_interval(s, t, 400)
    assert discrete == pytest.approx(closed, rel=0.02)


def test_random_instances_are_reproducible():
    a = gen_random_instance(11, 3, 4)
    b = gen_random_instance(11, 3, 4)
    assert a.supports() == b.supports()
    assert [d.mass for d in a.marginals] == [d.mass for d in b.marginals]
    with pytest.raises(InvalidInstance):
        gen_random_instance(0, 5, 2)


def test_corpus_seeds_and_sizes():
    corpus = gen_corpus(7, 3, max_bidders=3, max_support=5)
    assert [seed for seed, _ in corpus] == [7, 8, 9]
    for _, inst in corpus:
        assert 2 <= inst.bidders <= 3
        assert all(1 <= len(s) <= 5 for s in inst.supports())
