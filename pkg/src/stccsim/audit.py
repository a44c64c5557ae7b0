"""Classification of operation pairs and the server-side causal order check.

The session-guarantee patterns are defined per key: only pairs touching the
same key carry ordering obligations, and write pairs on the same key whose
stamps are causally ordered must apply in that order at every replica.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from .clocks import ClockOrder, compare
from .duot import OperationRecord, OpKind


class PairPattern(enum.Enum):
    MONOTONIC_READ = "monotonic_read"
    READ_YOUR_WRITE = "read_your_write"
    MONOTONIC_WRITE = "monotonic_write"
    WRITE_FOLLOW_READ = "write_follow_read"
    NON_CONFLICTING = "non_conflicting"
    INDEPENDENT = "independent"


class CausalVerdict(enum.Enum):
    CAUSALLY_ORDERED = "causally_ordered"
    SAME_SESSION = "same_session"
    CONCURRENT = "concurrent"


def _check_order(first: OperationRecord, second: OperationRecord) -> None:
    if first.op_id >= second.op_id:
        raise ValueError(
            f"pair must be given oldest first: op {first.op_id} !< op {second.op_id}"
        )


def classify_pair(first: OperationRecord, second: OperationRecord) -> PairPattern:
    """Name the session-guarantee pattern an ordered same-key pair falls under.

    Different keys are independent.  Two reads returning the same value do
    not conflict; two reads returning different values form the monotonic
    read pattern; write-then-read is read-your-write; write-write is
    monotonic write; read-then-write is write-follows-read.
    """
    _check_order(first, second)
    if first.key != second.key:
        return PairPattern.INDEPENDENT
    if first.kind is OpKind.READ and second.kind is OpKind.READ:
        if first.value == second.value:
            return PairPattern.NON_CONFLICTING
        return PairPattern.MONOTONIC_READ
    if first.kind is OpKind.WRITE and second.kind is OpKind.READ:
        return PairPattern.READ_YOUR_WRITE
    if first.kind is OpKind.WRITE and second.kind is OpKind.WRITE:
        return PairPattern.MONOTONIC_WRITE
    return PairPattern.WRITE_FOLLOW_READ


def causal_verdict(first: OperationRecord, second: OperationRecord) -> CausalVerdict:
    """Relate two records through their stamps.

    Same user and ordered stamps mean one session produced both; ordered
    stamps across users mean cross-session causality; otherwise the pair is
    concurrent.  Two distinct records can never carry equal stamps under
    join-then-tick stamping, so equality is an internal invariant breach.
    """
    _check_order(first, second)
    order = compare(first.stamp, second.stamp)
    if order is ClockOrder.EQUAL:
        raise RuntimeError(
            f"distinct records {first.op_id} and {second.op_id} share a stamp"
        )
    if order is ClockOrder.CONCURRENT:
        return CausalVerdict.CONCURRENT
    if first.user == second.user:
        return CausalVerdict.SAME_SESSION
    return CausalVerdict.CAUSALLY_ORDERED


def rule1_holds(
    apply_logs: Mapping[str, Sequence[int]],
    writes: Sequence[OperationRecord],
) -> tuple[bool, tuple[str, int, int] | None]:
    """Check that every replica applied causally ordered same-key writes in order.

    apply_logs maps replica name to the op_ids it applied, oldest first.  A
    pair counts only when both writes appear in a log; a write a replica
    skipped as superseded imposes nothing.  Returns (True, None) when clean,
    else (False, (replica, earlier_write, later_write)) for the first
    violation in replica order.
    """
    by_id: dict[int, OperationRecord] = {w.op_id: w for w in writes}
    for replica in apply_logs:
        log = apply_logs[replica]
        seen_by_key: dict[str, list[OperationRecord]] = {}
        for op_id in log:
            rec = by_id.get(op_id)
            if rec is None:
                raise ValueError(f"apply log for {replica} names unknown write {op_id}")
            if rec.kind is not OpKind.WRITE:
                raise ValueError(f"apply log for {replica} contains non-write {op_id}")
            earlier = seen_by_key.setdefault(rec.key, [])
            for prev in earlier:
                if prev.op_id > rec.op_id:
                    ordered = compare(rec.stamp, prev.stamp) is ClockOrder.BEFORE
                    if ordered:
                        return False, (replica, rec.op_id, prev.op_id)
            earlier.append(rec)
    return True, None
