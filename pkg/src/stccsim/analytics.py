"""Staleness models and per-run metric reports.

Two estimators for the probability that a read misses the newest
acknowledged write: a closed-form expression over the read rate, write
rate, replica count and propagation delay, and a Monte Carlo estimator
that replays the same renewal process on a miniature timeline.  The
closed form is evaluated exactly as given and clamped into [0, 1] when
it strays; the Monte Carlo mirrors the simulator's staleness rule.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .cluster import RunTrace
from .costs import (
    PricingScheme,
    cost_instances,
    cost_network,
    cost_storage,
    cost_total,
    usage_from_trace,
)
from .duot import OpKind
from .odg import detect_violations


@dataclass(frozen=True)
class StaleModelParams:
    """Inputs shared by both staleness estimators.

    Rates are system-wide ops per second; prop_delay_s is the one-way
    time for a write to reach the non-origin replicas; write_dwell_s
    models a commit window during which no replica serves the write yet.
    """

    replicas: int
    read_rate: float
    write_rate: float
    prop_delay_s: float
    write_dwell_s: float = 0.0

    def __post_init__(self) -> None:
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        if self.read_rate < 0 or self.write_rate < 0:
            raise ValueError("rates must be non-negative")
        if self.prop_delay_s < 0 or self.write_dwell_s < 0:
            raise ValueError("delays must be non-negative")


@dataclass(frozen=True)
class ClosedFormResult:
    value: float
    raw_value: float
    clamped: bool


def staleness_closed_form(params: StaleModelParams) -> ClosedFormResult:
    """Closed-form stale-read probability.

    Undefined when either rate is zero (the rate product divides the
    expression); raises ValueError there rather than guessing.
    """
    n = params.replicas
    lr, lw = params.read_rate, params.write_rate
    if lr * lw == 0:
        raise ValueError("closed form undefined when read or write rate is zero")
    raw = (n - 1) * (1.0 - math.exp(-lr * params.prop_delay_s)) * (1.0 + lr * lw) / (n * lr * lw)
    value = min(1.0, max(0.0, raw))
    return ClosedFormResult(value=value, raw_value=raw, clamped=value != raw)


@dataclass(frozen=True)
class MonteCarloResult:
    value: float
    stderr: float
    trials: int


def staleness_monte_carlo(
    params: StaleModelParams, trials: int = 10_000, seed: int = 0
) -> MonteCarloResult:
    """Timeline replay estimate of the stale-read probability.

    Writes form a Poisson process; each becomes readable at its origin
    replica after the dwell window and everywhere else one propagation
    delay later.  Each trial is one read against the newest prior write:
    inside the dwell window every replica misses it, inside the
    propagation window all but the origin do.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if params.read_rate <= 0:
        raise ValueError("monte carlo needs a positive read rate")
    n = params.replicas
    rng = random.Random(f"staleness-mc:{seed}")
    t = 0.0
    last_write: float | None = None
    next_write = (
        rng.expovariate(params.write_rate) if params.write_rate > 0 else math.inf
    )
    stale = 0
    for _ in range(trials):
        t += rng.expovariate(params.read_rate)
        while next_write <= t:
            last_write = next_write
            next_write += rng.expovariate(params.write_rate)
        if last_write is None:
            continue
        age = t - last_write
        if age < params.write_dwell_s:
            stale += 1
        elif age < params.write_dwell_s + params.prop_delay_s:
            # Uniform replica choice; only the origin already has it.
            if rng.randrange(n) != 0:
                stale += 1
    p = stale / trials
    return MonteCarloResult(
        value=p,
        stderr=math.sqrt(p * (1.0 - p) / trials),
        trials=trials,
    )


@dataclass(frozen=True)
class MetricsReport:
    """One run's headline numbers, shaped for JSON export."""

    level: str
    workload: str
    seed: int
    ops: int
    throughput_ops_s: float
    staleness_rate: float
    violations: dict
    cost: dict
    model: dict
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        out = {
            "level": self.level,
            "workload": self.workload,
            "seed": self.seed,
            "ops": self.ops,
            "throughput_ops_s": self.throughput_ops_s,
            "staleness_rate": self.staleness_rate,
            "violations": self.violations,
            "cost": self.cost,
            "model": self.model,
        }
        if self.flags:
            out["flags"] = list(self.flags)
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _rounded(x: float) -> float:
    return round(x, 9)


def measured_metrics(
    trace: RunTrace,
    pricing: PricingScheme | None = None,
    mc_trials: int = 4000,
) -> MetricsReport:
    """Distill a simulation trace into the standard report."""
    pricing = pricing if pricing is not None else PricingScheme()
    flags: list[str] = []
    report = detect_violations(trace.duot, trace.apply_logs, trace.serve_log)
    violations = report.as_dict()
    violations = {
        k: (_rounded(v) if isinstance(v, float) else v) for k, v in violations.items()
    }

    usage = usage_from_trace(trace)
    cost = {
        "instances_usd": _rounded(cost_instances(usage, pricing)),
        "storage_usd": _rounded(cost_storage(usage, pricing)),
        "network_usd": _rounded(cost_network(usage, pricing)),
        "total_usd": _rounded(cost_total(usage, pricing)),
    }

    reads = trace.read_count()
    writes = trace.op_count - reads
    if reads == 0:
        flags.append("no_reads")
    makespan = trace.makespan_s
    closed: float | None = None
    mc_value: float | None = None
    mc_err: float | None = None
    if reads > 0 and writes > 0 and makespan > 0:
        params = StaleModelParams(
            replicas=trace.config.replication_factor,
            read_rate=reads / makespan,
            write_rate=writes / makespan,
            prop_delay_s=(
                trace.config.prop_delay_ms
                if trace.config.prop_delay_ms is not None
                else trace.config.inter_dc_rtt_ms / 2
            )
            / 1000.0,
        )
        cf = staleness_closed_form(params)
        if cf.clamped:
            flags.append("closed_form_clamped")
        closed = _rounded(cf.value)
        mc = staleness_monte_carlo(params, trials=mc_trials, seed=trace.seed)
        mc_value = _rounded(mc.value)
        mc_err = _rounded(mc.stderr)
    else:
        flags.append("model_undefined")

    return MetricsReport(
        level=trace.level.value,
        workload=trace.workload.name,
        seed=trace.seed,
        ops=trace.op_count,
        throughput_ops_s=_rounded(trace.throughput_ops_s()),
        staleness_rate=_rounded(trace.staleness_rate()),
        violations=violations,
        cost=cost,
        model={"closed_form": closed, "monte_carlo": mc_value, "stderr": mc_err},
        flags=tuple(flags),
    )
