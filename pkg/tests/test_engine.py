"""Phase routing and the delivery constraints each phase imposes."""

import json
from collections import Counter

import pytest

from stccsim.clocks import VectorClock
from stccsim.duot import Duot, OperationRecord, OpKind
from stccsim.engine import (
    DeliveryConstraint,
    Phase,
    Scope,
    constraints_for,
    decide,
    decision_log_lines,
    schedule_loop,
)

from conftest import build_reference_table


def mk(op_id, user, kind, key, value, stamp=None):
    return OperationRecord(
        op_id=op_id,
        user=user,
        kind=kind,
        key=key,
        value=value,
        stamp=stamp if stamp is not None else VectorClock((op_id, 0)),
        registered_at=0.0,
    )


def test_constraint_must_point_forward():
    with pytest.raises(ValueError):
        DeliveryConstraint(5, 5, Scope.ALL_REPLICAS)
    with pytest.raises(ValueError):
        DeliveryConstraint(6, 5, Scope.ALL_REPLICAS)


def test_decide_requires_oldest_first():
    a = mk(1, 0, OpKind.WRITE, "x", "v")
    b = mk(2, 0, OpKind.READ, "x", None)
    with pytest.raises(ValueError):
        decide(b, a)


def test_decide_same_session_phases():
    w1 = mk(1, 0, OpKind.WRITE, "x", "a")
    w2 = mk(2, 0, OpKind.WRITE, "x", "b")
    r3 = mk(3, 0, OpKind.READ, "x", "a")
    r4 = mk(4, 0, OpKind.READ, "x", "b")
    w5 = mk(5, 0, OpKind.WRITE, "x", "c")
    assert decide(w1, w2) is Phase.A2_MONOTONIC_WRITE
    assert decide(w1, r3) is Phase.A3_READ_YOUR_WRITE
    assert decide(r3, w5) is Phase.A4_WRITE_FOLLOW_READ
    # reads route to the monotonic-read phase whatever values they carry
    assert decide(r3, r4) is Phase.A1_MONOTONIC_READ
    same = mk(4, 0, OpKind.READ, "x", "a")
    assert decide(r3, same) is Phase.A1_MONOTONIC_READ


def test_decide_cross_session_is_timed_causal():
    w = mk(1, 0, OpKind.WRITE, "x", "a")
    r = mk(2, 1, OpKind.READ, "x", "a")
    assert decide(w, r) is Phase.B1_TIMED_CAUSAL


def test_decide_different_key_or_concurrent_needs_nothing():
    w = mk(1, 0, OpKind.WRITE, "x", "a")
    other = mk(2, 1, OpKind.WRITE, "y", "b")
    assert decide(w, other) is Phase.B2_NO_SAME_VIEW
    conc = mk(2, 1, OpKind.WRITE, "x", "b", stamp=VectorClock((0, 1)))
    assert decide(w, conc) is Phase.B2_NO_SAME_VIEW


def test_read_gating_constraints_cover_all_prior_writes():
    table = build_reference_table()
    # reference op 9 is a session read; gate it behind writes 1, 2 and 5
    first, second = table.record(5), table.record(9)
    cons = constraints_for(table, first, second, Phase.A3_READ_YOUR_WRITE)
    assert [(c.before_op, c.after_op) for c in cons] == [(1, 9), (2, 9), (5, 9)]
    assert all(c.scope is Scope.SESSION_REPLICA_SET for c in cons)


def test_write_order_constraints_stop_at_the_horizon():
    table = build_reference_table()
    # (3, 5): the read saw write 1, so only write 1 binds write 5
    cons = constraints_for(table, table.record(3), table.record(5), Phase.A4_WRITE_FOLLOW_READ)
    assert [(c.before_op, c.after_op) for c in cons] == [(1, 5)]
    # (9, 10): the read saw write 5, so 1, 2 and 5 all bind write 10
    cons = constraints_for(table, table.record(9), table.record(10), Phase.A4_WRITE_FOLLOW_READ)
    assert [(c.before_op, c.after_op) for c in cons] == [(1, 10), (2, 10), (5, 10)]


def test_unserved_read_horizon_falls_back_to_registration_order():
    table = Duot(1)
    table.register(0, OpKind.WRITE, "x", "v1")
    table.register(0, OpKind.READ, "x")  # never served
    table.register(0, OpKind.WRITE, "x", "v2")
    cons = constraints_for(table, table.record(2), table.record(3), Phase.A4_WRITE_FOLLOW_READ)
    assert [(c.before_op, c.after_op) for c in cons] == [(1, 3)]


def test_cross_session_write_carries_one_global_constraint():
    table = build_reference_table()
    cons = constraints_for(table, table.record(2), table.record(5), Phase.B1_TIMED_CAUSAL)
    assert len(cons) == 1
    assert (cons[0].before_op, cons[0].after_op, cons[0].scope) == (
        2,
        5,
        Scope.ALL_REPLICAS,
    )
    # read-first pairs impose nothing themselves
    assert constraints_for(table, table.record(3), table.record(6), Phase.B1_TIMED_CAUSAL) == ()


def test_no_same_view_imposes_nothing():
    table = build_reference_table()
    assert constraints_for(table, table.record(1), table.record(2), Phase.B2_NO_SAME_VIEW) == ()


def test_schedule_loop_covers_reference_trace():
    table = build_reference_table()
    decisions = list(schedule_loop(table))
    assert len(decisions) == 55  # all same-key pairs of 11 ops
    pairs = [(d.first_op, d.second_op) for d in decisions]
    assert len(set(pairs)) == 55  # no pair decided twice
    assert all(a < b for a, b in pairs)
    # every op after the first gets its predecessor group decided
    assert len({d.second_op for d in decisions}) == 10
    counts = Counter(d.phase for d in decisions)
    assert counts == Counter(
        {
            Phase.B1_TIMED_CAUSAL: 39,
            Phase.A1_MONOTONIC_READ: 6,
            Phase.A4_WRITE_FOLLOW_READ: 5,
            Phase.A3_READ_YOUR_WRITE: 3,
            Phase.A2_MONOTONIC_WRITE: 2,
        }
    )
    assert sum(1 for d in decisions if d.constraints) == 37


def test_schedule_loop_skips_cross_key_pairs():
    table = Duot(2)
    table.register(0, OpKind.WRITE, "x", "a")
    table.register(1, OpKind.WRITE, "y", "b")
    table.register(0, OpKind.READ, "x")
    decisions = list(schedule_loop(table))
    assert [(d.first_op, d.second_op) for d in decisions] == [(1, 3)]


def test_decision_log_lines_are_stable_json():
    table = build_reference_table()
    lines1 = list(decision_log_lines(schedule_loop(table)))
    lines2 = list(decision_log_lines(schedule_loop(table)))
    assert lines1 == lines2
    row = json.loads(lines1[0])
    assert row == {
        "first_op": 1,
        "second_op": 2,
        "phase": "a2_monotonic_write",
        "constraints": [{"before_op": 1, "after_op": 2, "scope": "session_replica_set"}],
    }
