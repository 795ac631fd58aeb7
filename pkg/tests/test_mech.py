import pytest

from lap.dist import from_pairs, point_mass
from lap.errors import InvalidInstance, NonMonotoneSchedule, RequiresIndependence
from lap.mech import (
    AuctionInstance,
    Knowledge,
    MenuChoice,
    Outcome,
    PoolSchedule,
    expected_revenue,
    la_mechanism,
    lap_mechanism,
    myerson_mechanism,
    myerson_virtual_surplus,
    outcome_table,
    posted_price_revenue,
    run_la,
    run_lap,
    run_myerson,
)
from lap.scenarios import gen_corpus


def test_posted_price_ties_go_to_lowest_price(two_point):
    assert posted_price_revenue(two_point) == (1.0, 1.0)
    assert posted_price_revenue(two_point, floor=1.5) == (2.0, 2.0)


def test_schedule_validation():
    assert str(PoolSchedule()) == "[]"
    assert str(PoolSchedule(((1, 100),))) == "[1,100]"
    assert PoolSchedule(((1, 2), (3, 5))).endpoints == [1.0, 2.0, 3.0, 5.0]
    with pytest.raises(NonMonotoneSchedule):
        PoolSchedule(((2, 3), (1, 4)))
    with pytest.raises(NonMonotoneSchedule):
        PoolSchedule(((1, 1),))


def test_menu_choice():
    menu = MenuChoice(pool_size=2, cutoff=1.0, price=100.0)
    assert menu.option_lottery == (0.5, 0.5)
    assert menu.option_buy == (1.0, 50.5)
    assert menu.choose(100.0) == menu.option_buy
    assert menu.choose(50.0) == menu.option_lottery


def test_knowledge_admits():
    assert list(Knowledge.exact(2).admits([1, 2, 3])) == [False, True, False]
    assert list(Knowledge.interval(1, 3).admits([0.5, 1, 2.9, 3])) == [False, True, True, False]


def test_la_on_example1(example1):
    """The high bidder always faces price 1 + eps."""
    assert run_la(example1, (1.0, 1.01)) == Outcome((0.0, 1.0), (0.0, 1.01))
    assert run_la(example1, (1.0, 100.0)).revenue == pytest.approx(1.01)
    assert expected_revenue(example1, la_mechanism()) == pytest.approx(1.01)


def test_lap_on_example1(example1):
    schedule = PoolSchedule(((1, 100),))
    lottery = run_lap(example1, schedule, (1.0, 1.01))
    assert lottery.alloc == (0.5, 0.5)
    assert lottery.revenue == pytest.approx(1.0)

    menu = run_lap(example1, schedule, (1.0, 100.0))
    assert menu.alloc == (0.0, 1.0)
    assert menu.pay[1] == pytest.approx(50.5)

    assert expected_revenue(example1, lap_mechanism(schedule)) == pytest.approx(1.495)


def test_lap_single_reacher_skips_jump(example1):
    """Only one bidder reaches s = 2, so the auction stays continuous."""
    schedule = PoolSchedule(((2, 100),))
    assert run_lap(example1, schedule, (1.0, 1.01)) == run_la(example1, (1.0, 1.01))


def test_myerson_on_example1(example1):
    assert run_myerson(example1, (1.0, 1.01)) == Outcome((1.0, 0.0), (1.0, 0.0))
    assert run_myerson(example1, (1.0, 100.0)) == Outcome((0.0, 1.0), (0.0, 100.0))
    assert expected_revenue(example1, myerson_mechanism()) == pytest.approx(1.99)
    assert myerson_virtual_surplus(example1) == pytest.approx(1.99)


def test_two_point_revenues(two_point_iid):
    assert expected_revenue(two_point_iid, myerson_mechanism()) == pytest.approx(1.5)
    assert expected_revenue(two_point_iid, la_mechanism()) == pytest.approx(1.25)
    assert expected_revenue(two_point_iid, lap_mechanism(((1, 2),))) == pytest.approx(1.5)


def test_myerson_tie_goes_to_lowest_index(two_point_iid):
    assert run_myerson(two_point_iid, (2.0, 2.0)) == Outcome((1.0, 0.0), (2.0, 0.0))
    assert run_myerson(two_point_iid, (1.0, 1.0)) == Outcome.empty(2)


def test_single_bidder_gets_monopoly_price():
    inst = AuctionInstance.independent([from_pairs([(1, 0.2), (3, 0.8)])])
    assert run_la(inst, (3.0,)) == Outcome((1.0,), (3.0,))
    assert run_la(inst, (1.0,)) == Outcome.empty(1)


def test_joint_instance_validation():
    with pytest.raises(InvalidInstance):
        AuctionInstance.from_joint({(1.0, 2.0): 0.5})
    with pytest.raises(InvalidInstance):
        AuctionInstance.from_joint({(1.0, 2.0): 0.5, (1.0,): 0.5})
    with pytest.raises(InvalidInstance):
        AuctionInstance()


def test_joint_marginals_and_posterior():
    inst = AuctionInstance.from_joint({(1.0, 1.0): 0.5, (1.0, 3.0): 0.25, (2.0, 3.0): 0.25})
    assert inst.bidders == 2
    assert inst.marginal(1).support == (1.0, 3.0)
    assert inst.marginal(1).mass == pytest.approx((0.5, 0.5))
    post = inst.posterior(1, 2.0, {0: Knowledge.exact(2.0)})
    assert post.support == (3.0,)
    assert inst.posterior(1, 5.0) is None
    with pytest.raises(RequiresIndependence):
        run_myerson(inst, (1.0, 1.0))


def test_joint_la_uses_revealed_value():
    """Bidder 1's drop at 2 tells the seller bidder 2 has value 3."""
    inst = AuctionInstance.from_joint({(1.0, 1.0): 0.5, (2.0, 3.0): 0.5})
    assert run_la(inst, (2.0, 3.0)) == Outcome((0.0, 1.0), (0.0, 3.0))
    assert expected_revenue(inst, la_mechanism()) == pytest.approx(2.0)


def test_outcome_table(two_point_iid):
    df = outcome_table(two_point_iid, la_mechanism())
    assert list(df.columns) == ["v1", "v2", "mass", "alloc1", "alloc2", "pay1", "pay2", "revenue"]
    assert len(df) == 4
    assert (df["mass"] * df["revenue"]).sum() == pytest.approx(1.25)


def test_point_mass_bidders_tie():
    inst = AuctionInstance.independent([point_mass(1.0), point_mass(1.0)])
    assert run_la(inst, (1.0, 1.0)) == Outcome((1.0, 0.0), (1.0, 0.0))


@pytest.mark.parametrize("seed, inst", gen_corpus(40, 15))
def test_myerson_revenue_is_virtual_surplus(seed, inst):
    assert expected_revenue(inst, myerson_mechanism()) == pytest.approx(myerson_virtual_surplus(inst), abs=1e-9)


@pytest.mark.parametrize("seed, inst", gen_corpus(60, 8))
def test_myerson_allocation_is_monotone(seed, inst):
    supports = inst.supports()
    for profile, _ in inst.profiles():
        for i, value in enumerate(profile):
            won = run_myerson(inst, profile).alloc[i]
            for higher in (v for v in supports[i] if v > value):
                raised = profile[:i] + (higher,) + profile[i + 1:]
                assert run_myerson(inst, raised).alloc[i] >= won
