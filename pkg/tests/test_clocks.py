"""Vector clock semantics: ordering, merge lattice, tick."""

import pytest
from hypothesis import given, strategies as st

from stccsim.clocks import ClockOrder, VectorClock, compare, dominates, merge, tick


def vc(*entries):
    return VectorClock(tuple(entries))


def test_zero_and_width():
    z = VectorClock.zero(3)
    assert z.entries == (0, 0, 0)
    assert z.width == 3
    assert z[1] == 0


def test_zero_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        VectorClock.zero(0)


def test_negative_entries_rejected():
    with pytest.raises(ValueError):
        vc(1, -1, 0)


def test_str_and_parse_round_trip():
    c = vc(1, 0, 3)
    assert str(c) == "[1,0,3]"
    assert VectorClock.parse("[1,0,3]") == c
    assert VectorClock.parse(str(vc(7))) == vc(7)


def test_parse_rejects_garbage():
    for bad in ("1,2,3", "[]", "[1,2", "[a,b]"):
        with pytest.raises(ValueError):
            VectorClock.parse(bad)


def test_tick_increments_one_slot():
    c = vc(2, 5, 0)
    assert tick(c, 1) == vc(2, 6, 0)
    # the original is untouched
    assert c == vc(2, 5, 0)


def test_tick_out_of_range():
    with pytest.raises(IndexError):
        tick(vc(1, 2), 2)
    with pytest.raises(IndexError):
        tick(vc(1, 2), -1)


def test_merge_is_elementwise_max():
    assert merge(vc(1, 4, 0), vc(2, 3, 0)) == vc(2, 4, 0)


def test_width_mismatch_raises():
    with pytest.raises(ValueError):
        merge(vc(1, 2), vc(1, 2, 3))
    with pytest.raises(ValueError):
        compare(vc(1), vc(1, 1))


def test_compare_all_four_outcomes():
    assert compare(vc(1, 2), vc(1, 2)) is ClockOrder.EQUAL
    assert compare(vc(1, 1), vc(1, 2)) is ClockOrder.BEFORE
    assert compare(vc(2, 2), vc(1, 2)) is ClockOrder.AFTER
    assert compare(vc(2, 0), vc(0, 2)) is ClockOrder.CONCURRENT


def test_dominates():
    assert dominates(vc(2, 2), vc(1, 2))
    assert dominates(vc(2, 2), vc(2, 2))
    assert not dominates(vc(1, 2), vc(2, 1))


clocks3 = st.builds(
    lambda e: VectorClock(tuple(e)),
    st.lists(st.integers(min_value=0, max_value=6), min_size=3, max_size=3),
)


@given(clocks3, clocks3)
def test_compare_matches_elementwise_definition(a, b):
    # happens-before, written out the long way
    leq = all(x <= y for x, y in zip(a.entries, b.entries))
    geq = all(x >= y for x, y in zip(a.entries, b.entries))
    expect = (
        ClockOrder.EQUAL
        if leq and geq
        else ClockOrder.BEFORE
        if leq
        else ClockOrder.AFTER
        if geq
        else ClockOrder.CONCURRENT
    )
    assert compare(a, b) is expect


@given(clocks3, clocks3)
def test_compare_is_antisymmetric(a, b):
    flipped = {
        ClockOrder.BEFORE: ClockOrder.AFTER,
        ClockOrder.AFTER: ClockOrder.BEFORE,
        ClockOrder.EQUAL: ClockOrder.EQUAL,
        ClockOrder.CONCURRENT: ClockOrder.CONCURRENT,
    }
    assert compare(b, a) is flipped[compare(a, b)]


@given(clocks3, clocks3, clocks3)
def test_merge_semilattice(a, b, c):
    assert merge(a, b) == merge(b, a)
    assert merge(a, a) == a
    assert merge(merge(a, b), c) == merge(a, merge(b, c))


@given(clocks3, clocks3)
def test_merge_dominates_both_inputs(a, b):
    m = merge(a, b)
    assert dominates(m, a) and dominates(m, b)


@given(clocks3, st.integers(min_value=0, max_value=2))
def test_tick_strictly_advances(c, i):
    t = tick(c, i)
    assert compare(c, t) is ClockOrder.BEFORE
    assert t[i] == c[i] + 1
