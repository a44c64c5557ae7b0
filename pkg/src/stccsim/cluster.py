"""Discrete-event simulator for a replicated key-value cluster.

Topology: a fixed set of datacenters, each with a row of nodes; the
replication group places an equal share of replicas in every datacenter.
Clients are colocated with their home datacenter and talk to a randomly
chosen in-datacenter replica that coordinates each operation.

Five consistency levels share one event loop:

  ONE     write acks after the coordinator applies; reads serve locally.
  QUORUM  write acks after floor(rf/2)+1 replicas apply; reads contact
          the same number of nearest replicas, wait for all, freshest wins.
  ALL     as QUORUM with every replica.
  CAUSAL  coordinator apply plus a dependency-sync round with a remote
          datacenter before the ack; replicas apply each key's writes in
          order; reads serve locally after dependency verification and
          are floored by the session's own context.
  XSTCC   coordinator apply acks immediately; propagation is eager inside
          the datacenter and batched with per-key coalescing across
          datacenters; reads block until the serving replica has applied
          the newest same-key write acked before the read was issued.

Replicas process work through a FIFO per-node queue.  Reads observe the
state of applies that *completed* by the time the read arrived, so a
value in flight through a busy queue is invisible; this is what exposes
propagation lag under load.  Mutation logs keep last-writer-wins order:
an arrival older than the applied version is skipped, never logged.

All internal times are milliseconds.  Same seed, same trace, bit for bit.
"""

from __future__ import annotations

import heapq
import json
import random
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, replace
from enum import Enum
from typing import TextIO

from .duot import Duot, OpKind
from .workload import Request, WorkloadSpec, generate


class ConsistencyLevel(Enum):
    ONE = "ONE"
    QUORUM = "QUORUM"
    ALL = "ALL"
    CAUSAL = "CAUSAL"
    XSTCC = "XSTCC"

    def write_ack_count(self, rf: int) -> int:
        if self in (ConsistencyLevel.ONE, ConsistencyLevel.CAUSAL, ConsistencyLevel.XSTCC):
            return 1
        if self is ConsistencyLevel.QUORUM:
            return rf // 2 + 1
        return rf

    def read_contact_count(self, rf: int) -> int:
        if self is ConsistencyLevel.QUORUM:
            return rf // 2 + 1
        if self is ConsistencyLevel.ALL:
            return rf
        return 1


@dataclass(frozen=True)
class ClusterConfig:
    """Cluster shape, link timing and service-cost knobs.

    prop_delay_ms, when set, replaces every replica-to-replica one-way
    delay with a fixed value, zeroes the client hop and disables jitter;
    used to line the simulator up against the analytic staleness models.
    """

    datacenters: int = 3
    nodes_per_dc: int = 8
    replication_factor: int = 12
    intra_dc_rtt_ms: float = 0.115
    inter_dc_rtt_ms: float = 45.7
    jitter_frac: float = 0.10
    apply_cost_ms: float = 0.85
    serve_cost_ms: float = 2.4
    causal_dep_reads: int = 8
    causal_sync_overhead_ms: float = 0.6
    batch_interval_ms: float = 8.0
    message_overhead_bytes: int = 128
    registration_latency_ms: float = 0.0
    prop_delay_ms: float | None = None
    closed_loop: bool = True

    def __post_init__(self) -> None:
        if self.replication_factor % self.datacenters != 0:
            raise ValueError("replication factor must divide evenly across datacenters")
        if self.replicas_per_dc > self.nodes_per_dc:
            raise ValueError("more replicas than nodes in a datacenter")

    @property
    def replicas_per_dc(self) -> int:
        return self.replication_factor // self.datacenters

    @property
    def node_count(self) -> int:
        return self.datacenters * self.nodes_per_dc


@dataclass
class RunTrace:
    """Everything one simulation run produced, in registration order.

    Per-op parallel lists are indexed by op_id - 1.  apply_logs hold the
    write op ids each replica logged, in apply order; serve_log maps a
    read to the write it returned (None for a miss on an unwritten key).
    """

    level: ConsistencyLevel
    workload: WorkloadSpec
    config: ClusterConfig
    seed: int
    duot: Duot
    threads: list[int]
    kinds: list[OpKind]
    keys: list[str]
    issue_ms: list[float]
    complete_ms: list[float]
    coordinator: list[int]
    returned_op: list[int | None]
    stale: list[bool]
    blocked_ms: list[float]
    apply_logs: dict[str, list[int]]
    serve_log: dict[int, int | None]
    replica_kv: dict[str, dict[str, int]]
    bytes_intra: int
    bytes_inter: int
    storage_requests: int
    makespan_ms: float
    drain_ms: float

    @property
    def op_count(self) -> int:
        return len(self.kinds)

    @property
    def makespan_s(self) -> float:
        return self.makespan_ms / 1000.0

    def throughput_ops_s(self) -> float:
        return self.op_count / self.makespan_s if self.makespan_ms > 0 else 0.0

    def read_count(self) -> int:
        return sum(1 for k in self.kinds if k is OpKind.READ)

    def stale_read_count(self) -> int:
        return sum(1 for s in self.stale if s)

    def staleness_rate(self) -> float:
        reads = self.read_count()
        return self.stale_read_count() / reads if reads else 0.0

    def mean_latency_ms(self) -> float:
        if not self.kinds:
            return 0.0
        total = sum(c - i for c, i in zip(self.complete_ms, self.issue_ms))
        return total / len(self.kinds)

    def replicas_converged(self) -> bool:
        states = list(self.replica_kv.values())
        return all(s == states[0] for s in states[1:])

    def to_json_lines(self, fh: TextIO) -> None:
        head = {
            "kind": "summary",
            "level": self.level.value,
            "workload": self.workload.name,
            "seed": self.seed,
            "ops": self.op_count,
            "makespan_s": round(self.makespan_s, 9),
            "throughput_ops_s": round(self.throughput_ops_s(), 9),
            "staleness_rate": round(self.staleness_rate(), 9),
            "bytes_intra": self.bytes_intra,
            "bytes_inter": self.bytes_inter,
            "storage_requests": self.storage_requests,
        }
        fh.write(json.dumps(head, sort_keys=True) + "\n")
        for i in range(self.op_count):
            row = {
                "op": i + 1,
                "thread": self.threads[i],
                "kind": self.kinds[i].value,
                "key": self.keys[i],
                "issue_ms": round(self.issue_ms[i], 6),
                "complete_ms": round(self.complete_ms[i], 6),
                "coordinator": self.coordinator[i],
                "returned_op": self.returned_op[i],
                "stale": self.stale[i],
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


# Event kinds, ordered tuples on one heap: (time, seq, kind, payload).
_EV_SESSION = 0
_EV_APPLY = 1
_EV_SERVE = 2
_EV_ACK = 3
_EV_RESP = 4
_EV_SYNC = 5
_EV_FLUSH = 6
_EV_BATCH = 7
_EV_SYNCARR = 8


class _Sim:
    def __init__(self, spec: WorkloadSpec, level: ConsistencyLevel, config: ClusterConfig, seed: int):
        self.spec = spec
        self.level = level
        self.cfg = config
        self.seed = seed
        self.rf = config.replication_factor
        self.rpd = config.replicas_per_dc
        self.rng_net = random.Random(f"net:{seed}")
        self.rng_coord = random.Random(f"coord:{seed}")
        self.duot = Duot(spec.threads, registration_latency_ms=config.registration_latency_ms)

        self.heap: list[tuple] = []
        self.seq = 0
        self.now = 0.0

        # Replica state: FIFO busy horizon per node, per-key apply history
        # as parallel (completion time, op id) lists, plus the mutation log.
        self.busy = [0.0] * self.rf
        self.hist_t: list[dict[str, list[float]]] = [dict() for _ in range(self.rf)]
        self.hist_v: list[dict[str, list[int]]] = [dict() for _ in range(self.rf)]
        self.apply_log: list[list[int]] = [[] for _ in range(self.rf)]

        # Per-key acked writes, (ack time, running max op id), for the
        # staleness gate; appended in event order, kept sorted.
        self.ack_t: dict[str, list[float]] = {}
        self.ack_max: dict[str, list[int]] = {}

        # CAUSAL: global per-key write order, per-replica progress, and the
        # set of (coordinator, op) pairs whose local apply gates the ack.
        self.key_writes: dict[str, list[int]] = {}
        self.applied_count: list[dict[str, int]] = [dict() for _ in range(self.rf)]
        self.holdback: list[dict[str, list[int]]] = [dict() for _ in range(self.rf)]

        # XSTCC: per-(source dc, target dc) egress batches and blocked reads.
        self.pending: dict[tuple[int, int], dict[str, int]] = {}
        self.flush_armed: set[tuple[int, int]] = set()
        self.blocked: dict[tuple[int, str], list[tuple[int, int, float]]] = {}
        self.relay_rotor: dict[tuple[int, int], int] = {}

        # In-flight op bookkeeping.
        self.wstate: dict[int, list] = {}  # op -> [acks_seen, need, apply_done, sync_done]
        self.rstate: dict[int, list] = {}  # op -> [pending, best_ver, last_resp]

        self.bytes_intra = 0
        self.bytes_inter = 0
        self.requests = 0

        # Trace columns.
        self.tr_thread: list[int] = []
        self.tr_kind: list[OpKind] = []
        self.tr_key: list[str] = []
        self.tr_issue: list[float] = []
        self.tr_complete: list[float] = []
        self.tr_coord: list[int] = []
        self.tr_returned: list[int | None] = []
        self.tr_stale: list[bool] = []
        self.tr_blocked: list[float] = []
        self.serve_log: dict[int, int | None] = {}

        # Session floors (CAUSAL): per (thread, key) newest op the session saw.
        self.floor: dict[tuple[int, str], int] = {}

        self._build_sessions()
        self.contact_sets = [self._nearest(dc) for dc in range(config.datacenters)]

    # -- topology helpers ------------------------------------------------

    def dc_of(self, replica: int) -> int:
        return replica // self.rpd

    def _nearest(self, dc: int) -> list[int]:
        # Ring order keeps remote contact sets disjoint across client DCs,
        # otherwise the lowest-numbered replicas serve two DCs' quorum reads.
        n_dc = self.cfg.datacenters
        order = sorted(
            range(self.rf),
            key=lambda r: ((self.dc_of(r) - dc) % n_dc, r % self.rpd, r),
        )
        return order

    def delay(self, src_dc: int, dst_dc: int) -> float:
        if self.cfg.prop_delay_ms is not None:
            return self.cfg.prop_delay_ms
        base = self.cfg.intra_dc_rtt_ms / 2 if src_dc == dst_dc else self.cfg.inter_dc_rtt_ms / 2
        j = self.cfg.jitter_frac
        return base * (1.0 + self.rng_net.uniform(-j, j)) if j > 0 else base

    def client_hop(self, dc: int) -> float:
        if self.cfg.prop_delay_ms is not None:
            return 0.0
        j = self.cfg.jitter_frac
        base = self.cfg.intra_dc_rtt_ms / 2
        return base * (1.0 + self.rng_net.uniform(-j, j)) if j > 0 else base

    def count_bytes(self, src_dc: int, dst_dc: int, payload: int) -> None:
        n = payload + self.cfg.message_overhead_bytes
        if src_dc == dst_dc:
            self.bytes_intra += n
        else:
            self.bytes_inter += n

    # -- event plumbing --------------------------------------------------

    def push(self, t: float, kind: int, payload: tuple) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, kind, payload))

    def _build_sessions(self) -> None:
        requests = generate(self.spec)
        self.session_reqs: list[list[Request]] = [[] for _ in range(self.spec.threads)]
        for r in requests:
            self.session_reqs[r.thread].append(r)
        self.session_idx = [0] * self.spec.threads
        self.session_ops = [0] * self.spec.threads  # per-thread issued count, names values
        self.live_sessions = 0
        for thread, reqs in enumerate(self.session_reqs):
            if reqs:
                self.live_sessions += 1
                self.push(reqs[0].issue_at * 1000.0, _EV_SESSION, (thread,))

    def session_advance(self, thread: int, completed_at: float) -> None:
        idx = self.session_idx[thread]
        reqs = self.session_reqs[thread]
        if idx >= len(reqs):
            self.live_sessions -= 1
            return
        poisson_t = reqs[idx].issue_at * 1000.0
        t = poisson_t if not self.cfg.closed_loop else max(poisson_t, completed_at)
        self.push(t, _EV_SESSION, (thread,))

    # -- replica work ----------------------------------------------------

    def version_at(self, replica: int, key: str, t: float) -> int | None:
        times = self.hist_t[replica].get(key)
        if not times:
            return None
        i = bisect_right(times, t) - 1
        return self.hist_v[replica][key][i] if i >= 0 else None

    def latest_version(self, replica: int, key: str) -> int | None:
        vals = self.hist_v[replica].get(key)
        return vals[-1] if vals else None

    def occupy(self, replica: int, t: float, cost: float) -> float:
        start = max(t, self.busy[replica])
        end = start + cost
        self.busy[replica] = end
        return end

    def apply_write(self, replica: int, key: str, opid: int, t: float) -> float:
        """LWW apply: queue service, log unless an equal-or-newer op won."""
        end = self.occupy(replica, t, self.cfg.apply_cost_ms)
        self.requests += 1
        latest = self.latest_version(replica, key)
        if latest is not None and latest >= opid:
            return end
        self.hist_t[replica].setdefault(key, []).append(end)
        self.hist_v[replica].setdefault(key, []).append(opid)
        self.apply_log[replica].append(opid)
        self._wake_blocked(replica, key, opid, end)
        return end

    def apply_write_in_order(
        self, replica: int, key: str, opid: int, t: float
    ) -> list[tuple[int, float]]:
        """CAUSAL apply: hold back until every earlier same-key write landed.

        Returns the (op, completion) pairs actually applied by this arrival,
        possibly several when it releases buffered successors, possibly none.
        """
        order = self.key_writes[key]
        count = self.applied_count[replica].get(key, 0)
        buf = self.holdback[replica].setdefault(key, [])
        heapq.heappush(buf, opid)
        drained: list[tuple[int, float]] = []
        while buf and count < len(order) and buf[0] == order[count]:
            ready = heapq.heappop(buf)
            last = self.occupy(replica, t, self.cfg.apply_cost_ms)
            self.requests += 1
            self.hist_t[replica].setdefault(key, []).append(last)
            self.hist_v[replica].setdefault(key, []).append(ready)
            self.apply_log[replica].append(ready)
            count += 1
            drained.append((ready, last))
            t = last
        self.applied_count[replica][key] = count
        return drained

    def _wake_blocked(self, replica: int, key: str, opid: int, at: float) -> None:
        waiting = self.blocked.get((replica, key))
        if not waiting:
            return
        still = []
        for read_op, gate, arrived in waiting:
            if opid >= gate:
                self.tr_blocked[read_op - 1] = at - arrived
                self.push(at, _EV_SERVE, (replica, read_op, True))
            else:
                still.append((read_op, gate, arrived))
        if still:
            self.blocked[(replica, key)] = still
        else:
            del self.blocked[(replica, key)]

    def record_ack(self, key: str, opid: int, ack_t: float) -> None:
        times = self.ack_t.setdefault(key, [])
        maxes = self.ack_max.setdefault(key, [])
        prev = maxes[-1] if maxes else 0
        if times and ack_t < times[-1]:
            # Rare jitter inversion; keep the gate index sorted.
            insort(times, ack_t)
            pos = times.index(ack_t)
            maxes.insert(pos, max(opid, maxes[pos - 1] if pos else 0))
            for i in range(pos + 1, len(maxes)):
                maxes[i] = max(maxes[i], opid)
            return
        times.append(ack_t)
        maxes.append(max(prev, opid))

    def acked_gate(self, key: str, t: float) -> int:
        times = self.ack_t.get(key)
        if not times:
            return 0
        i = bisect_right(times, t) - 1
        return self.ack_max[key][i] if i >= 0 else 0

    # -- op issue --------------------------------------------------------

    def issue_op(self, thread: int, t: float) -> None:
        reqs = self.session_reqs[thread]
        idx = self.session_idx[thread]
        self.session_idx[thread] = idx + 1
        req = reqs[idx]
        dc = thread % self.cfg.datacenters
        coord = dc * self.rpd + self.rng_coord.randrange(self.rpd)
        self.session_ops[thread] += 1
        if req.kind is OpKind.WRITE:
            value = f"v{thread}.{self.session_ops[thread]}"
            rec = self.duot.register(thread, OpKind.WRITE, req.key, value, at=t)
        else:
            rec = self.duot.register(thread, OpKind.READ, req.key, at=t)
        op = rec.op_id
        self.tr_thread.append(thread)
        self.tr_kind.append(req.kind)
        self.tr_key.append(req.key)
        self.tr_issue.append(t)
        self.tr_complete.append(0.0)
        self.tr_coord.append(coord)
        self.tr_returned.append(None)
        self.tr_stale.append(False)
        self.tr_blocked.append(0.0)
        hop = self.client_hop(dc)
        self.count_bytes(dc, dc, self.spec.value_size_bytes if req.kind is OpKind.WRITE else 0)
        if req.kind is OpKind.WRITE:
            if self.level is ConsistencyLevel.CAUSAL:
                self.key_writes.setdefault(req.key, []).append(op)
            self.wstate[op] = [0, self.level.write_ack_count(self.rf), None, None]
            self.push(t + hop, _EV_APPLY, (coord, op, req.key, True))
            if self.level is ConsistencyLevel.CAUSAL:
                self._start_sync_round(coord, op, t + hop)
        else:
            n_contacts = self.level.read_contact_count(self.rf)
            if self.level is ConsistencyLevel.CAUSAL:
                # Dependency checks fan out over the in-DC replicas; one
                # replica swallowing the whole chain turns hot reads into
                # head-of-line blobs that stall unrelated writes.
                serves = [(coord, 1, True)]
                spread: dict[int, int] = {}
                for i in range(self.cfg.causal_dep_reads):
                    j = dc * self.rpd + (coord - dc * self.rpd + 1 + i) % self.rpd
                    spread[j] = spread.get(j, 0) + 1
                serves += [(j, units, False) for j, units in sorted(spread.items())]
            elif n_contacts == 1:
                serves = [(coord, 1, True)]
            else:
                serves = [(j, 1, True) for j in self.contact_sets[dc][:n_contacts]]
            self.rstate[op] = [len(serves), 0, 0.0]
            for j, units, with_value in serves:
                transit = hop if j == coord else hop + self.delay(dc, self.dc_of(j))
                self.count_bytes(dc, self.dc_of(j), 0)
                self.push(t + transit, _EV_SERVE, (j, op, False, units, with_value))
        if not self.cfg.closed_loop:
            # Open loop: next issue keyed to its arrival time, not completion.
            nxt = self.session_idx[thread]
            if nxt < len(reqs):
                self.push(max(t, reqs[nxt].issue_at * 1000.0), _EV_SESSION, (thread,))
            else:
                self.live_sessions -= 1

    def _start_sync_round(self, coord: int, op: int, t: float) -> None:
        dc = self.dc_of(coord)
        if self.cfg.datacenters == 1:
            self.push(t, _EV_SYNC, (op,))
            return
        target_dc = (dc + 1 + (op % (self.cfg.datacenters - 1))) % self.cfg.datacenters
        peer = target_dc * self.rpd + op % self.rpd
        out = self.delay(dc, target_dc)
        self.count_bytes(dc, target_dc, 0)
        self.count_bytes(target_dc, dc, 0)
        self.push(t + out, _EV_SYNCARR, (op, peer, dc))

    def handle_sync_arrival(self, t: float, op: int, peer: int, src_dc: int) -> None:
        # The dependency check is real work at the peer: it queues behind
        # whatever the peer is applying or serving.
        end = self.occupy(peer, t, self.cfg.causal_sync_overhead_ms)
        back = self.delay(self.dc_of(peer), src_dc)
        self.push(end + back, _EV_SYNC, (op,))

    # -- write path ------------------------------------------------------

    def handle_apply(self, t: float, replica: int, op: int, key: str, is_coord: bool) -> None:
        if self.level is ConsistencyLevel.CAUSAL:
            if is_coord:
                # Forward right away; holding propagation until the local
                # in-order apply would chain same-key writes across
                # datacenters one inter-DC hop per write.
                self._propagate(replica, op, key, t)
            self.apply_write_in_order(replica, key, op, t)
            return
        end = self.apply_write(replica, key, op, t)
        if not is_coord:
            st = self.wstate.get(op)
            if (
                st is not None
                and st[0] < st[1]
                and self.level in (ConsistencyLevel.QUORUM, ConsistencyLevel.ALL)
            ):
                coord = self.tr_coord[op - 1]
                self.count_bytes(self.dc_of(replica), self.dc_of(coord), 0)
                self.push(end + self.delay(self.dc_of(replica), self.dc_of(coord)), _EV_ACK, (op,))
            return
        # Coordinator apply: propagate, then settle the ack per level.
        self._propagate(replica, op, key, end)
        st = self.wstate[op]
        st[2] = end
        if self.level in (ConsistencyLevel.ONE, ConsistencyLevel.XSTCC):
            self._finish_write(op, end)
        else:
            st[0] += 1  # the coordinator's own ack
            if st[0] >= st[1]:
                self._finish_write(op, end)

    def _propagate(self, coord: int, op: int, key: str, t: float) -> None:
        dc = self.dc_of(coord)
        if self.level is ConsistencyLevel.XSTCC:
            for j in range(dc * self.rpd, (dc + 1) * self.rpd):
                if j == coord:
                    continue
                self.count_bytes(dc, dc, self.spec.value_size_bytes)
                self.push(t + self.delay(dc, dc), _EV_APPLY, (j, op, key, False))
            for other in range(self.cfg.datacenters):
                if other == dc:
                    continue
                slot = (dc, other)
                bucket = self.pending.setdefault(slot, {})
                bucket[key] = max(bucket.get(key, 0), op)
                if slot not in self.flush_armed:
                    self.flush_armed.add(slot)
                    self.push(t + self.cfg.batch_interval_ms, _EV_FLUSH, slot)
            return
        for j in range(self.rf):
            if j == coord:
                continue
            jdc = self.dc_of(j)
            self.count_bytes(dc, jdc, self.spec.value_size_bytes)
            self.push(t + self.delay(dc, jdc), _EV_APPLY, (j, op, key, False))

    def handle_flush(self, t: float, src_dc: int, target_dc: int) -> None:
        slot = (src_dc, target_dc)
        self.flush_armed.discard(slot)
        bucket = self.pending.pop(slot, None)
        if not bucket:
            return
        items = tuple(sorted(bucket.items()))
        self.count_bytes(src_dc, target_dc, len(items) * self.spec.value_size_bytes)
        rotor = self.relay_rotor.get(slot, 0)
        self.relay_rotor[slot] = rotor + 1
        relay = target_dc * self.rpd + rotor % self.rpd
        self.push(t + self.delay(src_dc, target_dc), _EV_BATCH, (relay, items))

    def handle_batch(self, t: float, relay: int, items: tuple) -> None:
        dc = self.dc_of(relay)
        for key, op in items:
            end = self.apply_write(relay, key, op, t)
            for j in range(dc * self.rpd, (dc + 1) * self.rpd):
                if j == relay:
                    continue
                self.count_bytes(dc, dc, self.spec.value_size_bytes)
                self.push(end + self.delay(dc, dc), _EV_APPLY, (j, op, key, False))
            t = end

    def handle_ack(self, t: float, op: int) -> None:
        st = self.wstate.get(op)
        if st is None:
            return
        st[0] += 1
        if st[0] == st[1]:
            self._finish_write(op, t)

    def handle_sync(self, t: float, op: int) -> None:
        # Causal ack: the peer round confirmed the dependency frontier.
        # Local delivery proceeds independently through the holdback queue.
        self._finish_write(op, t)

    def _finish_write(self, op: int, t: float) -> None:
        idx = op - 1
        thread = self.tr_thread[idx]
        ack_t = t + self.client_hop(thread % self.cfg.datacenters)
        self.count_bytes(thread % self.cfg.datacenters, thread % self.cfg.datacenters, 0)
        self.tr_complete[idx] = ack_t
        self.record_ack(self.tr_key[idx], op, ack_t)
        if self.level is ConsistencyLevel.CAUSAL:
            slot = (thread, self.tr_key[idx])
            self.floor[slot] = max(self.floor.get(slot, 0), op)
        del self.wstate[op]
        if self.cfg.closed_loop:
            self.session_advance(thread, ack_t)

    # -- read path -------------------------------------------------------

    def handle_serve(
        self,
        t: float,
        replica: int,
        op: int,
        was_blocked: bool,
        units: int = 1,
        with_value: bool = True,
    ) -> None:
        idx = op - 1
        key = self.tr_key[idx]
        if self.level is ConsistencyLevel.XSTCC and not was_blocked:
            gate = self.acked_gate(key, self.tr_issue[idx])
            have = self.version_at(replica, key, t) or 0
            if have < gate:
                # A satisfying apply may already be in the service queue;
                # if so resume at its completion, otherwise park the read.
                vals = self.hist_v[replica].get(key)
                if vals and vals[-1] >= gate:
                    i = bisect_left(vals, gate)
                    avail = self.hist_t[replica][key][i]
                    self.tr_blocked[idx] = avail - t
                    self.push(avail, _EV_SERVE, (replica, op, True))
                else:
                    self.blocked.setdefault((replica, key), []).append((op, gate, t))
                return
        end = self.occupy(replica, t, self.cfg.serve_cost_ms * units)
        self.requests += units
        coord = self.tr_coord[idx]
        rdc, cdc = self.dc_of(replica), self.dc_of(coord)
        transit = 0.0 if replica == coord else self.delay(rdc, cdc)
        if with_value:
            self.count_bytes(rdc, cdc, self.spec.value_size_bytes)
            version = self.version_at(replica, key, t)
            self.push(end + transit, _EV_RESP, (op, version if version is not None else 0))
        else:
            # Dependency check: gates completion, returns no value.
            self.count_bytes(rdc, cdc, 0)
            self.push(end + transit, _EV_RESP, (op, -1))

    def handle_resp(self, t: float, op: int, version: int) -> None:
        st = self.rstate[op]
        st[0] -= 1
        if version >= 0:
            st[1] = max(st[1], version)
        st[2] = max(st[2], t)
        if st[0] > 0:
            return
        idx = op - 1
        thread = self.tr_thread[idx]
        key = self.tr_key[idx]
        best = st[1]
        if self.level is ConsistencyLevel.CAUSAL:
            best = max(best, self.floor.get((thread, key), 0))
        done = st[2] + self.client_hop(thread % self.cfg.datacenters)
        self.count_bytes(thread % self.cfg.datacenters, thread % self.cfg.datacenters,
                         self.spec.value_size_bytes)
        returned = best if best > 0 else None
        self.tr_returned[idx] = returned
        self.tr_complete[idx] = done
        self.serve_log[op] = returned
        if returned is not None:
            self.duot.set_read_value(op, self.duot.value_of(returned))
        gate = self.acked_gate(key, self.tr_issue[idx])
        self.tr_stale[idx] = gate > (returned or 0)
        if self.level is ConsistencyLevel.CAUSAL:
            slot = (thread, key)
            self.floor[slot] = max(self.floor.get(slot, 0), returned or 0)
        del self.rstate[op]
        if self.cfg.closed_loop:
            self.session_advance(thread, done)

    # -- main loop -------------------------------------------------------

    def run(self) -> RunTrace:
        makespan = 0.0
        drained_sessions = False
        while self.heap:
            t, _, kind, payload = heapq.heappop(self.heap)
            self.now = t
            if kind == _EV_SESSION:
                self.issue_op(payload[0], t)
            elif kind == _EV_APPLY:
                self.handle_apply(t, *payload)
            elif kind == _EV_SERVE:
                self.handle_serve(t, *payload)
            elif kind == _EV_ACK:
                self.handle_ack(t, payload[0])
            elif kind == _EV_RESP:
                self.handle_resp(t, *payload)
            elif kind == _EV_SYNC:
                self.handle_sync(t, payload[0])
            elif kind == _EV_SYNCARR:
                self.handle_sync_arrival(t, *payload)
            elif kind == _EV_FLUSH:
                self.handle_flush(t, *payload)
            elif kind == _EV_BATCH:
                self.handle_batch(t, *payload)
            if (
                not drained_sessions
                and self.live_sessions == 0
                and not self.wstate
                and not self.rstate
            ):
                drained_sessions = True
                makespan = max(self.tr_complete) if self.tr_complete else t
                self._final_flush(t)
        if self.blocked:
            stuck = sorted(op for waits in self.blocked.values() for op, _, _ in waits)
            raise RuntimeError(f"reads blocked past drain: {stuck}")
        if not drained_sessions:
            makespan = max(self.tr_complete) if self.tr_complete else 0.0
        if self.level is ConsistencyLevel.CAUSAL:
            leftovers = [
                (r, k) for r in range(self.rf) for k, buf in self.holdback[r].items() if buf
            ]
            if leftovers:
                raise RuntimeError(f"undelivered in-order writes: {sorted(leftovers)}")
        replica_kv = {}
        for r in range(self.rf):
            replica_kv[f"r{r}"] = {k: vals[-1] for k, vals in self.hist_v[r].items()}
        return RunTrace(
            level=self.level,
            workload=self.spec,
            config=self.cfg,
            seed=self.seed,
            duot=self.duot,
            threads=self.tr_thread,
            kinds=self.tr_kind,
            keys=self.tr_key,
            issue_ms=self.tr_issue,
            complete_ms=self.tr_complete,
            coordinator=self.tr_coord,
            returned_op=self.tr_returned,
            stale=self.tr_stale,
            blocked_ms=self.tr_blocked,
            apply_logs={f"r{r}": self.apply_log[r] for r in range(self.rf)},
            serve_log=self.serve_log,
            replica_kv=replica_kv,
            bytes_intra=self.bytes_intra,
            bytes_inter=self.bytes_inter,
            storage_requests=self.requests,
            makespan_ms=makespan,
            drain_ms=self.now,
        )

    def _final_flush(self, t: float) -> None:
        for slot in list(self.pending.keys()):
            if slot not in self.flush_armed:
                self.flush_armed.add(slot)
                self.push(t, _EV_FLUSH, slot)


def simulate(
    spec: WorkloadSpec,
    level: ConsistencyLevel,
    config: ClusterConfig | None = None,
    seed: int | None = None,
) -> RunTrace:
    """Run one workload against the cluster at the given level."""
    cfg = config if config is not None else ClusterConfig()
    run_seed = seed if seed is not None else spec.seed
    if spec.seed != run_seed:
        spec = replace(spec, seed=run_seed)
    return _Sim(spec, level, cfg, run_seed).run()
