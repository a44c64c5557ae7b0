"""Decision procedure turning audited pairs into delivery constraints.

Every ordered same-key pair lands in exactly one phase.  Pairs from one
session route to the four session-guarantee phases; cross-session pairs
with ordered stamps form the timed-causal phase whose constraints bind at
every replica; everything else (different keys, or concurrent stamps)
executes with no shared view and no constraint.

Constraints always point from an older op_id to a newer one, so the
constraint set is a DAG by construction and a blocked read can always make
progress once the writes before it are delivered.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterator

from .clocks import ClockOrder, compare
from .duot import Duot, OperationRecord, OpKind


class Phase(enum.Enum):
    A1_MONOTONIC_READ = "a1_monotonic_read"
    A2_MONOTONIC_WRITE = "a2_monotonic_write"
    A3_READ_YOUR_WRITE = "a3_read_your_write"
    A4_WRITE_FOLLOW_READ = "a4_write_follow_read"
    B1_TIMED_CAUSAL = "b1_timed_causal"
    B2_NO_SAME_VIEW = "b2_no_same_view"


class Scope(enum.Enum):
    ALL_REPLICAS = "all_replicas"
    SESSION_REPLICA_SET = "session_replica_set"


@dataclass(frozen=True)
class DeliveryConstraint:
    """Require before_op to be applied before after_op is applied or served."""

    before_op: int
    after_op: int
    scope: Scope

    def __post_init__(self) -> None:
        if self.before_op >= self.after_op:
            raise ValueError(
                f"constraint must point forward: {self.before_op} -> {self.after_op}"
            )


@dataclass(frozen=True)
class PairDecision:
    first_op: int
    second_op: int
    phase: Phase
    constraints: tuple[DeliveryConstraint, ...]


def decide(first: OperationRecord, second: OperationRecord) -> Phase:
    """Route an ordered pair to its phase.

    Reads of one session on one key always fall under the monotonic-read
    phase, whatever values they returned; the stricter value-sensitive
    split only matters to the audit classifier.
    """
    if first.op_id >= second.op_id:
        raise ValueError("pair must be given oldest first")
    if first.key != second.key:
        return Phase.B2_NO_SAME_VIEW
    ordered = compare(first.stamp, second.stamp) is ClockOrder.BEFORE
    if not ordered:
        return Phase.B2_NO_SAME_VIEW
    if first.user != second.user:
        return Phase.B1_TIMED_CAUSAL
    if first.kind is OpKind.READ and second.kind is OpKind.READ:
        return Phase.A1_MONOTONIC_READ
    if first.kind is OpKind.WRITE and second.kind is OpKind.WRITE:
        return Phase.A2_MONOTONIC_WRITE
    if first.kind is OpKind.WRITE and second.kind is OpKind.READ:
        return Phase.A3_READ_YOUR_WRITE
    return Phase.A4_WRITE_FOLLOW_READ


def _same_key_writes_before(duot: Duot, key: str, op_id: int) -> list[int]:
    return [
        op
        for op in range(1, op_id)
        if duot.is_live(op)
        and duot.key_of(op) == key
        and duot.kind_of(op) is OpKind.WRITE
    ]


def constraints_for(
    duot: Duot,
    first: OperationRecord,
    second: OperationRecord,
    phase: Phase,
) -> tuple[DeliveryConstraint, ...]:
    """Materialize the delivery constraints a phase imposes on the pair.

    Read-gating phases demand every same-key write registered before the
    read be applied at the serving replica first, so the read can only
    return the freshest causally known value.  Write-ordering phases demand
    the earlier write and its same-key predecessors land before the later
    write.  A timed-causal pair whose first element is a read imposes
    nothing by itself: the obligation already exists on the write that
    produced the read's value.
    """
    if phase is Phase.B2_NO_SAME_VIEW:
        return ()
    key = second.key
    if phase in (Phase.A1_MONOTONIC_READ, Phase.A3_READ_YOUR_WRITE):
        prior = _same_key_writes_before(duot, key, second.op_id)
        return tuple(
            DeliveryConstraint(w, second.op_id, Scope.SESSION_REPLICA_SET)
            for w in prior
        )
    if phase in (Phase.A2_MONOTONIC_WRITE, Phase.A4_WRITE_FOLLOW_READ):
        if first.kind is OpKind.WRITE:
            horizon = first.op_id
        else:
            source = _source_write(duot, first)
            horizon = source if source is not None else first.op_id - 1
        prior = [w for w in _same_key_writes_before(duot, key, second.op_id) if w <= horizon]
        return tuple(
            DeliveryConstraint(w, second.op_id, Scope.SESSION_REPLICA_SET)
            for w in prior
        )
    # Timed causal: binds everywhere, carried by the write side of the pair.
    if first.kind is OpKind.WRITE:
        return (DeliveryConstraint(first.op_id, second.op_id, Scope.ALL_REPLICAS),)
    return ()


def _source_write(duot: Duot, read: OperationRecord) -> int | None:
    if read.value is None:
        return None
    for op in range(read.op_id - 1, 0, -1):
        if (
            duot.is_live(op)
            and duot.kind_of(op) is OpKind.WRITE
            and duot.key_of(op) == read.key
            and duot.value_of(op) == read.value
        ):
            return op
    return None


def schedule_loop(duot: Duot) -> Iterator[PairDecision]:
    """Decide every live same-key pair exactly once, oldest pairs first.

    Walks the table in registration order; each record is decided against
    all earlier live records on its key while any remain, which mirrors a
    scan guarded by the latest operation counter.
    """
    by_key: dict[str, list[int]] = {}
    for op_id in range(1, duot.max_op_id + 1):
        if not duot.is_live(op_id):
            continue
        key = duot.key_of(op_id)
        earlier = by_key.setdefault(key, [])
        second = duot.record(op_id)
        i = 0
        while i < len(earlier):
            first = duot.record(earlier[i])
            phase = decide(first, second)
            constraints = constraints_for(duot, first, second, phase)
            for c in constraints:
                assert c.before_op < c.after_op
            yield PairDecision(first.op_id, second.op_id, phase, constraints)
            i += 1
        earlier.append(op_id)


def decision_log_lines(decisions: Iterator[PairDecision]) -> Iterator[str]:
    """Serialize decisions as JSON lines for trace logging."""
    for d in decisions:
        yield json.dumps(
            {
                "first_op": d.first_op,
                "second_op": d.second_op,
                "phase": d.phase.value,
                "constraints": [
                    {
                        "before_op": c.before_op,
                        "after_op": c.after_op,
                        "scope": c.scope.value,
                    }
                    for c in d.constraints
                ],
            },
            sort_keys=True,
        )
