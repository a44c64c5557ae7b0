"""Cost model: worked pricing examples, additivity, trace accounting."""

import pytest

from stccsim.cluster import ClusterConfig, ConsistencyLevel, simulate
from stccsim.costs import (
    HOURS_PER_MONTH,
    PricingScheme,
    UsageSummary,
    cost_instances,
    cost_network,
    cost_storage,
    cost_total,
    usage_from_trace,
)
from stccsim.workload import WorkloadSpec

PRICING = PricingScheme()

WORKED = UsageSummary(
    nb_instances=24,
    runtime_hours=1.0,
    stored_gb_months=18.65,
    storage_requests=8_000_000.0,
    traffic_intra_gb=100.0,
    traffic_inter_gb=100.0,
)


def test_default_rates():
    assert PRICING.instance_usd_per_hour == 0.0464
    assert PRICING.storage_usd_per_gb_month == 0.10
    assert PRICING.requests_usd_per_million == 0.10
    assert PRICING.traffic_intra_usd_per_gb == 0.0
    assert PRICING.traffic_inter_usd_per_gb == 0.01
    assert HOURS_PER_MONTH == 730.0


def test_worked_example_components():
    # 24 instances for an hour at $0.0464
    assert cost_instances(WORKED, PRICING) == pytest.approx(1.1136, abs=1e-9)
    # 18.65 GB-months at $0.10 plus 8M requests at $0.10/M
    assert cost_storage(WORKED, PRICING) == pytest.approx(2.665, abs=1e-9)
    # intra traffic is free, 100 GB inter at $0.01
    assert cost_network(WORKED, PRICING) == pytest.approx(1.0, abs=1e-9)
    assert cost_total(WORKED, PRICING) == pytest.approx(4.7786, abs=1e-9)


def test_total_is_exact_component_sum():
    total = (
        cost_instances(WORKED, PRICING)
        + cost_storage(WORKED, PRICING)
        + cost_network(WORKED, PRICING)
    )
    assert cost_total(WORKED, PRICING) == total


def test_costs_scale_linearly():
    doubled = UsageSummary(
        nb_instances=WORKED.nb_instances,
        runtime_hours=2 * WORKED.runtime_hours,
        stored_gb_months=2 * WORKED.stored_gb_months,
        storage_requests=2 * WORKED.storage_requests,
        traffic_intra_gb=2 * WORKED.traffic_intra_gb,
        traffic_inter_gb=2 * WORKED.traffic_inter_gb,
    )
    assert cost_total(doubled, PRICING) == pytest.approx(
        2 * cost_total(WORKED, PRICING), rel=1e-12
    )


def test_zero_usage_costs_nothing():
    idle = UsageSummary(0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert cost_total(idle, PRICING) == 0.0


def test_custom_pricing_applies():
    premium = PricingScheme(
        instance_usd_per_hour=1.0,
        storage_usd_per_gb_month=0.0,
        requests_usd_per_million=0.0,
        traffic_intra_usd_per_gb=0.5,
        traffic_inter_usd_per_gb=0.0,
    )
    assert cost_total(WORKED, premium) == pytest.approx(24.0 + 50.0, abs=1e-9)


@pytest.fixture(scope="module")
def trace():
    spec = WorkloadSpec.workload_a(op_count=800, threads=4, record_count=30, seed=13)
    cfg = ClusterConfig(datacenters=3, nodes_per_dc=2, replication_factor=6)
    return simulate(spec, ConsistencyLevel.QUORUM, cfg)


def test_usage_from_trace_fields(trace):
    usage = usage_from_trace(trace)
    cfg, spec = trace.config, trace.workload
    assert usage.nb_instances == cfg.node_count
    assert usage.runtime_hours == pytest.approx(trace.makespan_s / 3600.0)
    stored_gb = spec.record_count * spec.value_size_bytes * cfg.replication_factor / 1e9
    assert usage.stored_gb_months == pytest.approx(
        stored_gb * usage.runtime_hours / HOURS_PER_MONTH
    )
    assert usage.storage_requests == float(trace.storage_requests)
    assert usage.traffic_intra_gb == pytest.approx(trace.bytes_intra / 1e9)
    assert usage.traffic_inter_gb == pytest.approx(trace.bytes_inter / 1e9)


def test_trace_usage_is_positive(trace):
    usage = usage_from_trace(trace)
    assert usage.storage_requests > 0
    assert usage.traffic_intra_gb > 0
    assert usage.traffic_inter_gb > 0
    assert cost_total(usage, PRICING) > 0


def test_requests_cover_applies_and_serves(trace):
    usage = usage_from_trace(trace)
    applied = sum(len(log) for log in trace.apply_logs.values())
    served = len(trace.serve_log)
    assert usage.storage_requests >= applied + served
