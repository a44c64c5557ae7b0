"""Globally serialized table of user operations.

Every read and write in a run registers here, in one total order, and gets a
vector-clock stamp built by joining the stamps of everything registered so
far and then ticking the registering user's entry.  Because of that join,
each stamp dominates all earlier ones, so stamp order and op_id order agree
for table records.  A stamp is therefore just the per-user registration
counts up to that op_id, which lets the table materialize stamps lazily
instead of storing one tuple per operation.

Garbage collection drops records from the live set but never rewinds the
table clock: a stamp handed out after a collection still dominates every
stamp handed out before it.
"""

from __future__ import annotations

import bisect
import csv
import enum
import io
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .clocks import VectorClock


class OpKind(enum.Enum):
    READ = "R"
    WRITE = "W"


@dataclass(frozen=True)
class OperationRecord:
    """One registered operation.

    value is None for a read that has not been served yet; the table fills
    it in when the serving replica returns.
    """

    op_id: int
    user: int
    kind: OpKind
    key: str
    value: str | None
    stamp: VectorClock
    registered_at: float


class Duot:
    """Distributed user operations table with join-then-tick stamping."""

    def __init__(self, n_users: int, registration_latency_ms: float = 0.0):
        if n_users <= 0:
            raise ValueError("user population must be positive")
        self.n_users = n_users
        self.registration_latency_ms = registration_latency_ms
        self._users: list[int] = []
        self._kinds: list[OpKind] = []
        self._keys: list[str] = []
        self._values: list[str | None] = []
        self._registered_at: list[float] = []
        # op_ids per user, ascending; backs lazy stamp materialization.
        self._user_ops: list[list[int]] = [[] for _ in range(n_users)]
        self._removed: set[int] = set()
        self.high_water: list[int] = [0] * n_users

    def __len__(self) -> int:
        return len(self._users) - len(self._removed)

    @property
    def max_op_id(self) -> int:
        return len(self._users)

    def register(
        self,
        user: int,
        kind: OpKind,
        key: str,
        value: str | None = None,
        at: float = 0.0,
    ) -> OperationRecord:
        if not 0 <= user < self.n_users:
            raise ValueError(f"user {user} outside population of {self.n_users}")
        if kind is OpKind.WRITE and value is None:
            raise ValueError("a write must carry a value")
        if kind is OpKind.READ and value is not None:
            raise ValueError("a read takes its value at serve time, not registration")
        op_id = len(self._users) + 1
        self._users.append(user)
        self._kinds.append(kind)
        self._keys.append(key)
        self._values.append(value)
        self._registered_at.append(at + self.registration_latency_ms)
        self._user_ops[user].append(op_id)
        # The freshest stamp is just the current per-user counts; skip the
        # bisect walk record() needs for historical op_ids.
        return OperationRecord(
            op_id=op_id,
            user=user,
            kind=kind,
            key=key,
            value=value,
            stamp=VectorClock(tuple(map(len, self._user_ops))),
            registered_at=self._registered_at[-1],
        )

    def _stamp(self, op_id: int) -> VectorClock:
        return VectorClock(
            tuple(bisect.bisect_right(ops, op_id) for ops in self._user_ops)
        )

    def record(self, op_id: int) -> OperationRecord:
        if not 1 <= op_id <= len(self._users):
            raise KeyError(f"no record with op_id {op_id}")
        i = op_id - 1
        return OperationRecord(
            op_id=op_id,
            user=self._users[i],
            kind=self._kinds[i],
            key=self._keys[i],
            value=self._values[i],
            stamp=self._stamp(op_id),
            registered_at=self._registered_at[i],
        )

    # Cheap accessors for hot paths that do not need materialized records.
    def user_of(self, op_id: int) -> int:
        return self._users[op_id - 1]

    def kind_of(self, op_id: int) -> OpKind:
        return self._kinds[op_id - 1]

    def key_of(self, op_id: int) -> str:
        return self._keys[op_id - 1]

    def value_of(self, op_id: int) -> str | None:
        return self._values[op_id - 1]

    def is_live(self, op_id: int) -> bool:
        return 1 <= op_id <= len(self._users) and op_id not in self._removed

    def set_read_value(self, op_id: int, value: str) -> None:
        """Fill in the value a served read returned."""
        i = op_id - 1
        if self._kinds[i] is not OpKind.READ:
            raise ValueError(f"op {op_id} is not a read")
        self._values[i] = value

    @property
    def table_clock(self) -> VectorClock:
        """Join of every stamp ever issued; monotone across garbage collection."""
        return VectorClock(tuple(len(ops) for ops in self._user_ops))

    def records(self) -> Iterator[OperationRecord]:
        for op_id in range(1, len(self._users) + 1):
            if op_id not in self._removed:
                yield self.record(op_id)

    def pairs_to_audit(
        self, newest: OperationRecord | None = None
    ) -> list[tuple[OperationRecord, OperationRecord]]:
        """Live same-key (older, newer) pairs, ordered by op_id.

        Given a focal record, returns only the pairs whose newer element is
        that record: the audit work introduced by registering it.
        """
        if newest is not None:
            older_ids = [
                op_id
                for op_id in range(1, newest.op_id)
                if op_id not in self._removed and self._keys[op_id - 1] == newest.key
            ]
            return [(self.record(a), newest) for a in older_ids]
        by_key: dict[str, list[int]] = {}
        for op_id in range(1, len(self._users) + 1):
            if op_id in self._removed:
                continue
            by_key.setdefault(self._keys[op_id - 1], []).append(op_id)
        pairs: list[tuple[int, int]] = []
        for ops in by_key.values():
            for i, older in enumerate(ops):
                for newer in ops[i + 1 :]:
                    pairs.append((older, newer))
        pairs.sort()
        return [(self.record(a), self.record(b)) for a, b in pairs]

    def collect_garbage(
        self,
        removable: Callable[[int], bool],
        dependents: Mapping[int, Sequence[int]] | Iterable[tuple[int, int]] | None = None,
    ) -> "Duot":
        """Drop live records that are removable and not depended on.

        A record survives if the predicate rejects it or if any surviving
        record depends on it (dependents maps op_id -> ops that need it, or
        is an edge list of (needed, dependent) pairs).  Retention closes
        transitively: keeping a dependent keeps everything it needs.
        """
        dep_map: dict[int, list[int]] = {}
        if dependents is not None:
            if isinstance(dependents, Mapping):
                dep_map = {k: list(v) for k, v in dependents.items()}
            else:
                for needed, dependent in dependents:
                    dep_map.setdefault(needed, []).append(dependent)
        live = [op for op in range(1, len(self._users) + 1) if op not in self._removed]
        keep: set[int] = {op for op in live if not removable(op)}
        # Dependency edges always point forward in op_id, so one backward
        # sweep reaches the fixpoint.
        for op in sorted(live, reverse=True):
            if op in keep:
                continue
            if any(d in keep for d in dep_map.get(op, ())):
                keep.add(op)
        for op in live:
            if op not in keep:
                self._removed.add(op)
                self.high_water[self._users[op - 1]] += 1
        return self

    def dump_csv(self, target: io.TextIOBase | str) -> None:
        """Write live records in the registration order: user, op, key, value, clock."""
        own = isinstance(target, str)
        fh = open(target, "w", newline="") if own else target
        try:
            writer = csv.writer(fh)
            writer.writerow(["user", "op", "key", "value", "clock"])
            for rec in self.records():
                writer.writerow(
                    [
                        f"U{rec.user + 1}",
                        rec.kind.value,
                        rec.key,
                        "" if rec.value is None else rec.value,
                        str(rec.stamp),
                    ]
                )
        finally:
            if own:
                fh.close()
