import pytest

from lap.config import FOUR_SEVENTHS
from lap.dist import from_pairs
from lap.errors import InstanceTooLarge, ZeroBenchmark
from lap.mech import (
    AuctionInstance,
    PoolSchedule,
    expected_revenue,
    first_price_mechanism,
    la_mechanism,
    lap_mechanism,
    myerson_mechanism,
    posted_price_mechanism,
)
from lap.scenarios import gen_corpus, gen_random_instance
from lap.verify import (
    candidate_endpoints,
    check_dsic_ir,
    deviation_bids,
    grid_check_47,
    grid_point_ratio,
    multi_jump_family,
    optimal_dsic_lp,
    ratio_report,
    search_lap,
    single_jump_family,
    verify_corpus,
)


def test_deviation_bids_cover_endpoints(example1):
    bids = deviation_bids(example1, [PoolSchedule(((1, 100),))], delta=0.001)
    for b in (0.0, 1.0, 1.005, 1.01, 0.999, 99.999, 100.001, 101.0):
        assert any(abs(b - x) < 1e-9 for x in bids), b
    assert bids == sorted(bids)


@pytest.mark.parametrize("mech", [la_mechanism(), myerson_mechanism(), lap_mechanism(((1, 100),))])
def test_truthful_mechanisms_pass_example1(example1, mech):
    report = check_dsic_ir(example1, mech)
    assert report.passed
    assert report.witness is None


@pytest.mark.parametrize("schedule", [(), ((1, 2),), ((0, 1),), ((0, 2),)])
def test_lap_is_dsic_on_two_point(two_point_iid, schedule):
    assert check_dsic_ir(two_point_iid, lap_mechanism(schedule)).passed


def test_first_price_fails_with_witness(two_point_iid):
    report = check_dsic_ir(two_point_iid, first_price_mechanism())
    assert not report.passed
    w = report.witness
    assert w.deviating > w.truthful
    assert report.summary()["witness"]["bidder"] == w.bidder


def test_lp_matches_myerson(example1, two_point_iid):
    assert optimal_dsic_lp(example1) == pytest.approx(1.99, abs=1e-6)
    assert optimal_dsic_lp(two_point_iid) == pytest.approx(1.5, abs=1e-6)


def test_lp_on_joint_prior():
    """With a perfectly correlated prior the seller extracts the full value."""
    inst = AuctionInstance.from_joint({(1.0, 1.0): 0.5, (2.0, 2.0): 0.5})
    assert optimal_dsic_lp(inst) == pytest.approx(1.5, abs=1e-6)


def test_lp_size_limit():
    d = from_pairs([(float(v), 0.01) for v in range(1, 101)])
    inst = AuctionInstance.independent([d, d, d])
    with pytest.raises(InstanceTooLarge):
        optimal_dsic_lp(inst)


def test_ratio_report(example1):
    assert ratio_report(example1, la_mechanism(), 1.99) == pytest.approx(1.01 / 1.99)
    assert ratio_report(example1, la_mechanism(), optimal_dsic_lp) == pytest.approx(1.01 / 1.99, abs=1e-6)
    with pytest.raises(ZeroBenchmark):
        ratio_report(example1, la_mechanism(), 0.0)


def test_grid_point_ratio():
    assert grid_point_ratio(1, 1, 0, 0) == pytest.approx(2 / 3)
    assert grid_point_ratio(1, 1, 0, 0) / FOUR_SEVENTHS == pytest.approx(7 / 6)
    assert grid_point_ratio(0, 0, 0, 0) / FOUR_SEVENTHS == pytest.approx(7 / 4)


def test_grid_check_coarse():
    report = grid_check_47(0.1, 4)
    assert report.passed
    assert report.min_ratio >= FOUR_SEVENTHS - 1e-9
    assert report.lemma2_min >= 2 / 3 - 1e-9
    assert report.summary()["margin"] == pytest.approx(report.margin)


@pytest.mark.slow
def test_grid_check_fine():
    report = grid_check_47(0.02, 20)
    assert report.min_ratio >= FOUR_SEVENTHS - 1e-9


def test_families():
    single = list(single_jump_family([0, 1, 2]))
    assert [str(s) for s in single] == ["[]", "[0,1]", "[0,2]", "[1,2]"]
    double = [str(s) for s in multi_jump_family([0, 1, 2], 2)]
    assert "[0,1];[1,2]" in double
    assert len(double) == len(set(double))


def test_search_lap_example1(example1):
    schedule, revenue = search_lap(example1)
    assert str(schedule) == "[1,100]"
    assert revenue == pytest.approx(1.495)


def test_search_lap_two_point(two_point_iid):
    _, revenue = search_lap(two_point_iid)
    assert revenue == pytest.approx(1.5)


@pytest.mark.parametrize("seed", range(5))
def test_dp_search_matches_enumeration(seed):
    inst = gen_random_instance(seed, 2, 3, (1.0, 5.0))
    _, dp = search_lap(inst, max_jumps=2)
    points = sorted({0.0} | {v for s in inst.supports() for v in s})
    brute = max(expected_revenue(inst, lap_mechanism(s)) for s in multi_jump_family(points, 2))
    assert dp == pytest.approx(brute)


def test_verify_corpus_small():
    df = verify_corpus(gen_corpus(3, 4))
    assert len(df) == 4
    assert (df["lap_ratio"] >= FOUR_SEVENTHS - 1e-9).all()
    assert (df["lap"] >= df["la"] - 1e-9).all()
    assert ((df["myerson"] - df["lp"]).abs() <= 1e-6).all()
    assert df[["dsic_la", "dsic_myerson", "dsic_lap"]].all().all()


@pytest.mark.slow
def test_verify_corpus_full():
    df = verify_corpus(gen_corpus(0, 200))
    assert (df["lap_ratio"] >= FOUR_SEVENTHS - 1e-9).all()
    assert df[["dsic_la", "dsic_myerson", "dsic_lap"]].all().all()


@pytest.mark.parametrize("max_jumps", [1, 2])
def test_search_lap_explicit_family_example1(example1, max_jumps):
    """Searching a listed family finds the best member, never -inf or a worse one."""
    endpoints = candidate_endpoints(example1)
    if max_jumps == 1:
        family = list(single_jump_family(endpoints))
    else:
        family = list(multi_jump_family(endpoints, 2))
    schedule, revenue = search_lap(example1, family=family)
    assert schedule is not None
    assert revenue == pytest.approx(1.495, abs=1e-9)
    assert expected_revenue(example1, lap_mechanism(schedule)) == pytest.approx(revenue, abs=1e-12)
    assert max(expected_revenue(example1, lap_mechanism(s)) for s in family) <= 1.495 + 1e-9


def test_posted_price_is_truthful():
    inst = AuctionInstance.independent([from_pairs([(1, 0.3), (2, 0.3), (4, 0.4)])])
    for price in (0.5, 1.0, 2.0, 3.0, 4.0, 5.0):
        assert check_dsic_ir(inst, posted_price_mechanism(price)).passed, price


def test_every_single_jump_schedule_is_dsic():
    corpus = gen_corpus(11, 3, max_bidders=2, max_support=3)
    df = verify_corpus(corpus, schedules_to_check=lambda inst: single_jump_family(candidate_endpoints(inst)))
    assert df["dsic_lap"].all()


@pytest.mark.slow
def test_every_two_jump_schedule_is_dsic():
    corpus = gen_corpus(21, 10, max_bidders=2, max_support=3)
    df = verify_corpus(corpus, schedules_to_check=lambda inst: multi_jump_family(candidate_endpoints(inst), 2))
    assert df["dsic_lap"].all()
