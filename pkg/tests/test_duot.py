"""Operations table: stamping, accessors, audit pairs, GC, CSV export."""

import io

import pytest

from stccsim.clocks import VectorClock, compare, ClockOrder
from stccsim.duot import Duot, OpKind

from conftest import REFERENCE_ROWS, REFERENCE_STAMPS, build_reference_table


def test_reference_trace_stamps_are_exact():
    table = build_reference_table()
    got = [str(table.record(i).stamp) for i in range(1, 12)]
    assert got == REFERENCE_STAMPS
    assert str(table.table_clock) == "[3,5,3]"


def test_register_returns_same_stamp_record_reconstructs():
    table = Duot(3)
    fresh = []
    for user, kind, key, value in REFERENCE_ROWS:
        rec = table.register(user, kind, key, value if kind is OpKind.WRITE else None)
        fresh.append(rec.stamp)
    lazy = [table.record(i).stamp for i in range(1, 12)]
    assert fresh == lazy


def test_stamps_totally_ordered_in_registration_order():
    table = build_reference_table()
    for i in range(1, 11):
        a = table.record(i).stamp
        b = table.record(i + 1).stamp
        assert compare(a, b) is ClockOrder.BEFORE


def test_register_validation():
    table = Duot(2)
    with pytest.raises(ValueError):
        table.register(2, OpKind.WRITE, "x", "v")
    with pytest.raises(ValueError):
        table.register(-1, OpKind.READ, "x")
    with pytest.raises(ValueError):
        table.register(0, OpKind.WRITE, "x")  # write needs a value
    with pytest.raises(ValueError):
        table.register(0, OpKind.READ, "x", "v")  # read takes none


def test_population_must_be_positive():
    with pytest.raises(ValueError):
        Duot(0)


def test_record_out_of_range():
    table = Duot(1)
    table.register(0, OpKind.WRITE, "k", "v")
    with pytest.raises(KeyError):
        table.record(2)
    with pytest.raises(KeyError):
        table.record(0)


def test_accessors_and_len():
    table = build_reference_table()
    assert len(table) == 11
    assert table.max_op_id == 11
    assert table.user_of(5) == 1
    assert table.kind_of(5) is OpKind.WRITE
    assert table.key_of(5) == "x"
    assert table.value_of(5) == "d"
    assert table.value_of(3) == "a"  # filled by set_read_value


def test_set_read_value_rejects_writes():
    table = Duot(1)
    rec = table.register(0, OpKind.WRITE, "k", "v")
    with pytest.raises(ValueError):
        table.set_read_value(rec.op_id, "other")


def test_pairs_to_audit_focal_record():
    table = Duot(3)
    for user, kind, key, value in REFERENCE_ROWS[:2]:
        table.register(user, kind, key, value)
    rec = table.register(1, OpKind.READ, "x")
    pairs = table.pairs_to_audit(rec)
    assert [(a.op_id, b.op_id) for a, b in pairs] == [(1, 3), (2, 3)]


def test_pairs_to_audit_focal_skips_other_keys():
    table = Duot(2)
    table.register(0, OpKind.WRITE, "x", "1")
    table.register(0, OpKind.WRITE, "y", "2")
    rec = table.register(1, OpKind.READ, "y")
    assert [(a.op_id, b.op_id) for a, b in table.pairs_to_audit(rec)] == [(2, 3)]


def test_pairs_to_audit_full_table():
    table = Duot(2)
    table.register(0, OpKind.WRITE, "x", "1")
    table.register(0, OpKind.WRITE, "y", "2")
    table.register(1, OpKind.READ, "x")
    table.register(1, OpKind.WRITE, "y", "3")
    got = [(a.op_id, b.op_id) for a, b in table.pairs_to_audit()]
    assert got == [(1, 3), (2, 4)]


def test_gc_drops_only_unneeded():
    table = build_reference_table()
    # ops 1 and 2 are removable, but 2 is still needed by 4's read
    table.collect_garbage(lambda op: op in (1, 2), dependents={2: [4]})
    assert not table.is_live(1)
    assert table.is_live(2)
    assert len(table) == 10


def test_gc_retention_is_transitive():
    table = Duot(1)
    for v in "abc":
        table.register(0, OpKind.WRITE, "k", v)
    # 3 survives, 3 needs 2, 2 needs 1: nothing may go
    table.collect_garbage(lambda op: op in (1, 2), dependents=[(1, 2), (2, 3)])
    assert all(table.is_live(op) for op in (1, 2, 3))


def test_table_clock_monotone_across_gc():
    table = build_reference_table()
    before = table.table_clock
    table.collect_garbage(lambda op: op <= 4)
    assert table.table_clock == before
    rec = table.register(0, OpKind.WRITE, "x", "z")
    assert compare(before, rec.stamp) is ClockOrder.BEFORE


def test_gc_bumps_high_water_per_user():
    table = build_reference_table()
    table.collect_garbage(lambda op: op in (1, 3))
    assert table.high_water == [1, 1, 0]


def test_records_iterates_live_only():
    table = build_reference_table()
    table.collect_garbage(lambda op: op == 2)
    assert [r.op_id for r in table.records()] == [1, 3, 4, 5, 6, 7, 8, 9, 10, 11]


def test_dump_csv_shape():
    table = Duot(2)
    table.register(0, OpKind.WRITE, "x", "a")
    rec = table.register(1, OpKind.READ, "x")
    buf = io.StringIO()
    table.dump_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "user,op,key,value,clock"
    assert lines[1] == 'U1,W,x,a,"[1,0]"'
    # unserved read exports an empty value cell
    assert lines[2] == 'U2,R,x,,"[1,1]"'


def test_registration_latency_offsets_registered_at():
    table = Duot(1, registration_latency_ms=2.5)
    rec = table.register(0, OpKind.WRITE, "k", "v", at=10.0)
    assert rec.registered_at == 12.5
