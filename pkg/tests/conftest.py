import pytest

from lap.dist import from_pairs
from lap.scenarios import build_example1, build_two_point_iid


@pytest.fixture
def example1():
    return build_example1(0.01)


@pytest.fixture
def two_point_iid():
    return build_two_point_iid()


@pytest.fixture
def two_point():
    return from_pairs([(1, 0.5), (2, 0.5)])


@pytest.fixture
def irregular():
    """Revenue curve dips at q = 0.2 and is ironed over (0.1, 1)."""
    return from_pairs([(1, 0.8), (2, 0.1), (10, 0.1)])
