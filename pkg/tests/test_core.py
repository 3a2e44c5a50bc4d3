import pytest
from hypothesis import given, strategies as st

from unison_sim.core import (
    CLOCK_LIMIT, CORRECT, CRASHED, Byzantine, build_topology, check_clock, check_roles,
    make_configuration, neighbors,
)
from unison_sim.adversary import SILENT
from unison_sim.errors import ClockOverflow, IndexOutOfRange, SizeTooSmall, TooManyFaults

topologies = st.one_of(
    st.integers(2, 12).map(lambda n: build_topology("chain", n)),
    st.integers(3, 12).map(lambda n: build_topology("ring", n)),
)


def test_smallest_chain():
    t = build_topology("chain", 2)
    assert t.degrees() == [1, 1]
    assert neighbors(t, 0) == (None, 1)
    assert neighbors(t, 1) == (0, None)


def test_chain4_degrees():
    assert build_topology("chain", 4).degrees() == [1, 2, 2, 1]


def test_ring3_wraps():
    t = build_topology("ring", 3)
    assert t.degrees() == [2, 2, 2]
    assert t.left(0) == 2
    assert t.right(2) == 0


@pytest.mark.parametrize("kind,n", [("chain", 1), ("chain", 0), ("ring", 2), ("ring", 1)])
def test_size_too_small(kind, n):
    with pytest.raises(SizeTooSmall):
        build_topology(kind, n)


@pytest.mark.parametrize("kind,n,p,expected", [
    ("chain", 4, 0, (None, 1)),
    ("chain", 4, 2, (1, 3)),
    ("chain", 4, 3, (2, None)),
    ("ring", 5, 0, (4, 1)),
])
def test_neighbors_examples(kind, n, p, expected):
    assert neighbors(build_topology(kind, n), p) == expected


@pytest.mark.parametrize("p", [-1, 4, 100])
def test_neighbors_out_of_range(p):
    with pytest.raises(IndexOutOfRange):
        neighbors(build_topology("chain", 4), p)


@given(topologies)
def test_neighbor_symmetry(t):
    for p in range(t.n):
        for q in neighbors(t, p):
            if q is not None:
                assert p in neighbors(t, q)


@given(topologies)
def test_end_count(t):
    ones = sum(d == 1 for d in t.degrees())
    assert ones == (0 if t.is_ring else 2)
    assert all(d in (1, 2) for d in t.degrees())


@given(topologies)
def test_adjacent_at_distance_one(t):
    for p, q in t.edges():
        assert q in neighbors(t, p) and p in neighbors(t, q)
        assert (q - p) % t.n in (1, t.n - 1)


def test_roles_enforce_single_fault():
    check_roles((CORRECT, CRASHED, CORRECT), 3)
    with pytest.raises(TooManyFaults):
        check_roles((CRASHED, Byzantine(SILENT), CORRECT), 3)
    check_roles((CRASHED, Byzantine(SILENT), CORRECT), 3, unchecked=True)


def test_clock_overflow_is_reported():
    assert check_clock(-(CLOCK_LIMIT - 1)) == -(CLOCK_LIMIT - 1)
    with pytest.raises(ClockOverflow):
        check_clock(CLOCK_LIMIT)
    with pytest.raises(ClockOverflow):
        check_clock(-CLOCK_LIMIT)


def test_configuration_length_checked():
    t = build_topology("chain", 3)
    assert make_configuration([1, 2, 3], t) == (1, 2, 3)
    with pytest.raises(ValueError):
        make_configuration([1, 2], t)


def test_topology_is_immutable():
    t = build_topology("chain", 3)
    with pytest.raises(AttributeError):
        t.n = 5
