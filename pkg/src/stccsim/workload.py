"""Synthetic client workloads: Poisson op streams over a keyspace.

Each thread is an independent session producing two merged Poisson streams,
one of reads and one of writes, so the realized mix tracks the configured
read fraction.  Keys come from a uniform or zipfian(0.99) draw over the
record space.  Generation is fully determined by the workload seed.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .duot import OpKind

ZIPF_THETA_DEFAULT = 0.99


@dataclass(frozen=True)
class Request:
    issue_at: float  # seconds from run start
    thread: int
    kind: OpKind
    key: str


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters of one generated workload.

    lambda_read / lambda_write are per-thread rates in ops per second; the
    read fraction must match their ratio.  Workload A is the balanced
    50/50 mix; workload B is write-heavy with 5% reads.
    """

    name: str
    read_fraction: float
    op_count: int
    record_count: int
    threads: int
    lambda_read: float
    lambda_write: float
    key_distribution: str = "zipfian"
    zipf_theta: float = ZIPF_THETA_DEFAULT
    value_size_bytes: int = 1024
    seed: int = 0

    def __post_init__(self) -> None:
        if self.op_count <= 0 or self.record_count <= 0 or self.threads <= 0:
            raise ValueError("op_count, record_count and threads must be positive")
        if not 0.0 <= self.read_fraction <= 1.0:
            raise ValueError("read fraction must lie in [0, 1]")
        if self.lambda_read < 0 or self.lambda_write < 0:
            raise ValueError("rates must be non-negative")
        if self.key_distribution not in ("uniform", "zipfian"):
            raise ValueError(f"unknown key distribution {self.key_distribution!r}")
        total = self.lambda_read + self.lambda_write
        if total <= 0:
            raise ValueError("at least one rate must be positive")
        implied = self.lambda_read / total
        if abs(implied - self.read_fraction) > 1e-9:
            raise ValueError(
                f"read fraction {self.read_fraction} does not match rates "
                f"({implied:.6f} implied)"
            )

    @classmethod
    def workload_a(cls, **overrides) -> "WorkloadSpec":
        return cls._named("A", 0.50, **overrides)

    @classmethod
    def workload_b(cls, **overrides) -> "WorkloadSpec":
        return cls._named("B", 0.05, **overrides)

    @classmethod
    def _named(cls, name: str, fraction: float, **overrides) -> "WorkloadSpec":
        rate = overrides.pop("rate_per_thread", 60.0)
        base = dict(
            name=name,
            read_fraction=fraction,
            op_count=100_000,
            record_count=10_000,
            threads=64,
            lambda_read=fraction * rate,
            lambda_write=(1.0 - fraction) * rate,
        )
        base.update(overrides)
        return cls(**base)

    def with_threads(self, threads: int) -> "WorkloadSpec":
        return replace(self, threads=threads)


class KeySampler:
    """Seed-stable key chooser over ranked records."""

    def __init__(self, spec: WorkloadSpec):
        self._count = spec.record_count
        self._zipf = spec.key_distribution == "zipfian"
        if self._zipf:
            weights = [1.0 / (i + 1) ** spec.zipf_theta for i in range(self._count)]
            total = math.fsum(weights)
            cdf = []
            acc = 0.0
            for w in weights:
                acc += w / total
                cdf.append(acc)
            cdf[-1] = 1.0
            self._cdf = cdf

    def sample(self, rng: random.Random) -> str:
        if self._zipf:
            idx = bisect.bisect_left(self._cdf, rng.random())
        else:
            idx = rng.randrange(self._count)
        return f"k{idx}"


def _thread_rng(seed: int, thread: int) -> random.Random:
    # Strings seed through a stable hash, unlike tuples.
    return random.Random(f"workload:{seed}:{thread}")


def generate(spec: WorkloadSpec) -> list[Request]:
    """Materialize the request list, globally ordered by issue time.

    Each thread draws exponential inter-arrival gaps per kind and the two
    streams merge; the global merge across threads is truncated to
    op_count requests.
    """
    sampler = KeySampler(spec)
    per_thread_target = spec.op_count / spec.threads
    # Head room so the global truncation never starves.
    budget = int(per_thread_target * 1.25) + 20
    requests: list[Request] = []
    for thread in range(spec.threads):
        rng = _thread_rng(spec.seed, thread)
        t_read = rng.expovariate(spec.lambda_read) if spec.lambda_read > 0 else math.inf
        t_write = rng.expovariate(spec.lambda_write) if spec.lambda_write > 0 else math.inf
        for _ in range(budget):
            if t_read <= t_write:
                requests.append(Request(t_read, thread, OpKind.READ, sampler.sample(rng)))
                t_read += rng.expovariate(spec.lambda_read)
            else:
                requests.append(Request(t_write, thread, OpKind.WRITE, sampler.sample(rng)))
                t_write += rng.expovariate(spec.lambda_write)
    requests.sort(key=lambda r: (r.issue_at, r.thread))
    return requests[: spec.op_count]


@dataclass(frozen=True)
class RateEstimate:
    read_rate: float
    write_rate: float
    window_s: float
    n_reads: int
    n_writes: int


def estimate_rates(
    requests: Sequence[Request], window_s: float, now: float | None = None
) -> RateEstimate | None:
    """Count/window rate estimate over the trailing window; None when empty."""
    if window_s <= 0:
        raise ValueError("window must be positive")
    if not requests:
        return None
    end = now if now is not None else max(r.issue_at for r in requests)
    start = end - window_s
    n_reads = n_writes = 0
    for r in requests:
        if start < r.issue_at <= end:
            if r.kind is OpKind.READ:
                n_reads += 1
            else:
                n_writes += 1
    if n_reads + n_writes == 0:
        return None
    return RateEstimate(
        read_rate=n_reads / window_s,
        write_rate=n_writes / window_s,
        window_s=window_s,
        n_reads=n_reads,
        n_writes=n_writes,
    )


def export_csv(requests: Iterable[Request], target: io.TextIOBase | str) -> None:
    own = isinstance(target, str)
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh)
        writer.writerow(["issue_at_s", "thread", "kind", "key"])
        for r in requests:
            writer.writerow([f"{r.issue_at:.9f}", r.thread, r.kind.value, r.key])
    finally:
        if own:
            fh.close()
