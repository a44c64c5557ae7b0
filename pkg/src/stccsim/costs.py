"""Monetary cost model: cloud pricing applied to measured resource usage.

Three components: compute instances billed per hour, storage billed per
GB-month of data at rest plus per million requests against the storage
engine, and network traffic billed per GB with separate intra- and
inter-datacenter rates.  The total is the exact sum of the breakdown.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cluster import RunTrace

HOURS_PER_MONTH = 730.0


@dataclass(frozen=True)
class PricingScheme:
    instance_usd_per_hour: float = 0.0464
    storage_usd_per_gb_month: float = 0.10
    requests_usd_per_million: float = 0.10
    traffic_intra_usd_per_gb: float = 0.00
    traffic_inter_usd_per_gb: float = 0.01


@dataclass(frozen=True)
class UsageSummary:
    """Resource consumption of one run, in billing units."""

    nb_instances: int
    runtime_hours: float
    stored_gb_months: float
    storage_requests: float
    traffic_intra_gb: float
    traffic_inter_gb: float


def cost_instances(usage: UsageSummary, pricing: PricingScheme) -> float:
    return usage.nb_instances * usage.runtime_hours * pricing.instance_usd_per_hour


def cost_storage(usage: UsageSummary, pricing: PricingScheme) -> float:
    at_rest = usage.stored_gb_months * pricing.storage_usd_per_gb_month
    requests = usage.storage_requests / 1e6 * pricing.requests_usd_per_million
    return at_rest + requests


def cost_network(usage: UsageSummary, pricing: PricingScheme) -> float:
    return (
        usage.traffic_intra_gb * pricing.traffic_intra_usd_per_gb
        + usage.traffic_inter_gb * pricing.traffic_inter_usd_per_gb
    )


def cost_total(usage: UsageSummary, pricing: PricingScheme) -> float:
    return (
        cost_instances(usage, pricing)
        + cost_storage(usage, pricing)
        + cost_network(usage, pricing)
    )


def usage_from_trace(trace: RunTrace) -> UsageSummary:
    """Measure a simulation run in billing units.

    Storage requests are the replica-side operations the run performed:
    every mutation delivery a replica processed plus every read it served,
    dependency verification included.
    """
    cfg = trace.config
    spec = trace.workload
    runtime_hours = trace.makespan_s / 3600.0
    stored_gb = spec.record_count * spec.value_size_bytes * cfg.replication_factor / 1e9
    return UsageSummary(
        nb_instances=cfg.node_count,
        runtime_hours=runtime_hours,
        stored_gb_months=stored_gb * runtime_hours / HOURS_PER_MONTH,
        storage_requests=float(trace.storage_requests),
        traffic_intra_gb=trace.bytes_intra / 1e9,
        traffic_inter_gb=trace.bytes_inter / 1e9,
    )
