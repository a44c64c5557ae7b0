"""Dependency graph over registered operations, violation counting, and the
garbage-collection frontier.

Edges come in three kinds: timed edges chain the consecutive operations of
one user, causal edges chain the consecutive writes on one key, and data
edges connect a write to every read that returned its value.  All edges
point from an older op_id to a newer one, so the graph is acyclic by
construction.

Violation counting is scoped per key, mirroring the pair classification:
only operations on one key owe each other anything.  A read-side violation
counts once per offending read; a write-order violation counts once per
offending pair, however many replicas misordered it.  One pair can violate
several guarantees and then counts once under each.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .duot import Duot, OpKind


class EdgeKind(enum.Enum):
    TIMED = "timed"
    CAUSAL = "causal"
    DATA = "data"


@dataclass(frozen=True)
class OdgEdge:
    src: int
    dst: int
    kind: EdgeKind


@dataclass
class DependencyGraph:
    nodes: list[int]
    edges: list[OdgEdge]
    served: dict[int, int | None]  # read op_id -> source write op_id (None: empty read)
    _out: dict[int, list[int]] = field(default_factory=dict)
    _in: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for e in self.edges:
            self._out.setdefault(e.src, []).append(e.dst)
            self._in.setdefault(e.dst, []).append(e.src)

    def dependents_of(self, op_id: int) -> list[int]:
        return self._out.get(op_id, [])

    def dependencies_of(self, op_id: int) -> list[int]:
        return self._in.get(op_id, [])

    def export_edges(self) -> Iterator[str]:
        for e in self.edges:
            yield f"{e.src},{e.dst},{e.kind.value}"


def build(duot: Duot, serve_log: Mapping[int, int | None]) -> DependencyGraph:
    """Assemble the graph from the table and the read serve outcomes.

    serve_log maps each served read to the op_id of the write it returned,
    or None when the read found nothing.  A read whose recorded value names
    no registered write is a dangling data reference and raises.
    """
    nodes: list[int] = []
    edges: list[OdgEdge] = []
    last_by_user: dict[int, int] = {}
    last_write_by_key: dict[str, int] = {}
    writes_by_value: dict[tuple[str, str], int] = {}

    for op_id in range(1, duot.max_op_id + 1):
        if not duot.is_live(op_id):
            continue
        nodes.append(op_id)
        user = duot.user_of(op_id)
        key = duot.key_of(op_id)
        prev = last_by_user.get(user)
        if prev is not None:
            edges.append(OdgEdge(prev, op_id, EdgeKind.TIMED))
        last_by_user[user] = op_id
        if duot.kind_of(op_id) is OpKind.WRITE:
            prev_w = last_write_by_key.get(key)
            if prev_w is not None:
                edges.append(OdgEdge(prev_w, op_id, EdgeKind.CAUSAL))
            last_write_by_key[key] = op_id
            writes_by_value[(key, duot.value_of(op_id))] = op_id

    served: dict[int, int | None] = {}
    for read_op in sorted(serve_log):
        source = serve_log[read_op]
        served[read_op] = source
        if source is not None:
            edges.append(OdgEdge(source, read_op, EdgeKind.DATA))

    # Reads served outside the serve log but carrying a value must still
    # resolve to a registered write.
    for op_id in nodes:
        if duot.kind_of(op_id) is OpKind.READ and op_id not in served:
            value = duot.value_of(op_id)
            if value is not None:
                key = duot.key_of(op_id)
                source = writes_by_value.get((key, value))
                if source is None:
                    raise ValueError(
                        f"read {op_id} returned {value!r} which no write produced"
                    )
                served[op_id] = source
                edges.append(OdgEdge(source, op_id, EdgeKind.DATA))

    return DependencyGraph(nodes=nodes, edges=edges, served=served)


@dataclass(frozen=True)
class ViolationReport:
    monotonic_read: int
    monotonic_write: int
    read_your_write: int
    write_follow_read: int
    timed_causal: int
    examined_pairs: int

    @property
    def total(self) -> int:
        return (
            self.monotonic_read
            + self.monotonic_write
            + self.read_your_write
            + self.write_follow_read
            + self.timed_causal
        )

    @property
    def violation_rate(self) -> float:
        if self.examined_pairs == 0:
            return 0.0
        return self.total / self.examined_pairs

    def as_dict(self) -> dict:
        return {
            "mr": self.monotonic_read,
            "mw": self.monotonic_write,
            "ryw": self.read_your_write,
            "wfr": self.write_follow_read,
            "timed_causal": self.timed_causal,
            "rate": self.violation_rate,
        }


def _inverted_pairs(sequence: Sequence[int]) -> set[tuple[int, int]]:
    """Distinct (earlier_op, later_op) pairs applied in the wrong order."""
    out: set[tuple[int, int]] = set()
    # Fast path: logs from well-behaved runs are ascending per key.
    if all(a < b for a, b in zip(sequence, sequence[1:])):
        return out
    for i, later in enumerate(sequence):
        for earlier in sequence[i + 1 :]:
            if earlier < later:
                out.add((earlier, later))
    return out


def detect_violations(
    duot: Duot,
    apply_logs: Mapping[str, Sequence[int]],
    serve_log: Mapping[int, int | None],
) -> ViolationReport:
    """Count per-guarantee violations from the table, apply logs, and serves.

    Read guarantees compare the stamps of returned writes within a session:
    a read regressing behind an earlier read breaks monotonic reads, and a
    read behind the session's own latest write breaks read-your-write.
    Write guarantees look for misapplied pairs in the replica logs: a
    session's writes on one key out of order anywhere break monotonic
    writes, any causally ordered same-key writes out of order anywhere
    break the timed-causal rule, and a write applied before the write its
    session had previously read breaks write-follows-read.
    """
    mr = ryw = 0
    ops_by_key_count: dict[str, int] = {}
    # Per (user, key): largest source op seen by an earlier read, and the
    # session's latest own write.
    best_read: dict[tuple[int, str], int] = {}
    own_write: dict[tuple[int, str], int] = {}
    # Per (user, key): sources read so far, for the write-follows-read scan.
    read_sources: dict[tuple[int, str], set[int]] = {}
    wfr_pairs: set[tuple[int, int]] = set()
    session_writes: dict[tuple[int, str], list[int]] = {}

    # Bulk-index the table once; the replica logs below revisit every op id
    # and per-entry accessor calls dominate the scan otherwise.
    top = duot.max_op_id
    key_arr: list[str | None] = [None] * (top + 1)
    user_arr: list[int] = [0] * (top + 1)
    for op_id in range(1, top + 1):
        key_arr[op_id] = duot.key_of(op_id)
        user_arr[op_id] = duot.user_of(op_id)

    for op_id in range(1, top + 1):
        if not duot.is_live(op_id):
            continue
        key = key_arr[op_id]
        user = user_arr[op_id]
        ops_by_key_count[key] = ops_by_key_count.get(key, 0) + 1
        slot = (user, key)
        if duot.kind_of(op_id) is OpKind.READ:
            if op_id not in serve_log:
                continue
            source = serve_log[op_id] or 0
            if source < best_read.get(slot, 0):
                mr += 1
            best_read[slot] = max(best_read.get(slot, 0), source)
            if source < own_write.get(slot, 0):
                ryw += 1
            if source:
                read_sources.setdefault(slot, set()).add(source)
        else:
            own_write[slot] = op_id
            session_writes.setdefault(slot, []).append(op_id)
            for w0 in read_sources.get(slot, ()):
                if w0 < op_id:
                    wfr_pairs.add((w0, op_id))

    mw_pairs: set[tuple[int, int]] = set()
    tc_pairs: set[tuple[int, int]] = set()
    wfr_hits: set[tuple[int, int]] = set()
    for replica in apply_logs:
        log = apply_logs[replica]
        per_key: dict[str | None, list[int]] = {}
        for op_id in log:
            k = key_arr[op_id]
            seq = per_key.get(k)
            if seq is None:
                per_key[k] = [op_id]
            else:
                seq.append(op_id)
        for seq in per_key.values():
            inverted = _inverted_pairs(seq)
            if not inverted:
                continue
            tc_pairs |= inverted
            wfr_hits |= inverted & wfr_pairs
            # A user's subsequence can only invert where the key's did.
            per_user: dict[int, list[int]] = {}
            for op_id in seq:
                per_user.setdefault(user_arr[op_id], []).append(op_id)
            for useq in per_user.values():
                mw_pairs |= _inverted_pairs(useq)

    examined = sum(n * (n - 1) // 2 for n in ops_by_key_count.values())
    return ViolationReport(
        monotonic_read=mr,
        monotonic_write=len(mw_pairs),
        read_your_write=ryw,
        write_follow_read=len(wfr_hits),
        timed_causal=len(tc_pairs),
        examined_pairs=examined,
    )


def gc_frontier(
    graph: DependencyGraph,
    applied_everywhere: Callable[[int], bool],
    duot: Duot | None = None,
) -> set[int]:
    """Nodes safe to collect: every node in their ancestor closure
    (themselves included) passes the predicate, and no unserved read may
    still need them.

    The predicate answers for every node; for reads it should report
    whether the read completed.  A read still in flight can return any
    earlier live write on its key, so those writes are retained along
    with everything the read already depends on.  Without the table the
    key and kind information is gone; then everything registered before
    an unserved failing node is retained wholesale, which over-retains
    but never collects more than the informed path would.
    """
    ok: dict[int, bool] = {}
    for op in graph.nodes:  # ancestors precede descendants in op_id order
        good = applied_everywhere(op)
        if good:
            for dep in graph.dependencies_of(op):
                if not ok.get(dep, False):
                    good = False
                    break
        ok[op] = good

    poisoned: set[int] = set()
    if duot is not None:
        pending = [
            op
            for op in graph.nodes
            if duot.kind_of(op) is OpKind.READ and op not in graph.served
        ]
        stack = list(pending)
        for p in pending:
            key = duot.key_of(p)
            for w in graph.nodes:
                if w > p:
                    break
                if (
                    duot.kind_of(w) is OpKind.WRITE
                    and duot.key_of(w) == key
                    and w not in poisoned
                ):
                    poisoned.add(w)
                    stack.append(w)
        while stack:
            op = stack.pop()
            for dep in graph.dependencies_of(op):
                if dep not in poisoned:
                    poisoned.add(dep)
                    stack.append(dep)
    else:
        pending = [
            op
            for op in graph.nodes
            if not applied_everywhere(op) and op not in graph.served
        ]
        if pending:
            horizon = max(pending)
            poisoned = {op for op in graph.nodes if op < horizon}

    return {op for op in graph.nodes if ok.get(op, False) and op not in poisoned}
