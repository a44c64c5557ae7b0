"""Deterministic simulator and audit library for replicated key-value
stores under tunable consistency, with a strict timed causal level, an
operation audit trail, dependency tracking, staleness models and a
monetary cost model."""

from .analytics import (
    ClosedFormResult,
    MetricsReport,
    MonteCarloResult,
    StaleModelParams,
    measured_metrics,
    staleness_closed_form,
    staleness_monte_carlo,
)
from .audit import CausalVerdict, PairPattern, causal_verdict, classify_pair, rule1_holds
from .clocks import ClockOrder, VectorClock, compare, dominates, merge, tick
from .cluster import ClusterConfig, ConsistencyLevel, RunTrace, simulate
from .costs import (
    PricingScheme,
    UsageSummary,
    cost_instances,
    cost_network,
    cost_storage,
    cost_total,
    usage_from_trace,
)
from .duot import Duot, OperationRecord, OpKind
from .engine import (
    DeliveryConstraint,
    PairDecision,
    Phase,
    Scope,
    constraints_for,
    decide,
    decision_log_lines,
    schedule_loop,
)
from .odg import (
    DependencyGraph,
    EdgeKind,
    OdgEdge,
    ViolationReport,
    build,
    detect_violations,
    gc_frontier,
)
from .workload import RateEstimate, Request, WorkloadSpec, estimate_rates, generate

__version__ = "0.1.0"

__all__ = [
    "CausalVerdict",
    "ClockOrder",
    "ClosedFormResult",
    "ClusterConfig",
    "ConsistencyLevel",
    "DeliveryConstraint",
    "DependencyGraph",
    "Duot",
    "EdgeKind",
    "MetricsReport",
    "MonteCarloResult",
    "OdgEdge",
    "OperationRecord",
    "OpKind",
    "PairDecision",
    "PairPattern",
    "Phase",
    "PricingScheme",
    "RateEstimate",
    "Request",
    "RunTrace",
    "Scope",
    "StaleModelParams",
    "UsageSummary",
    "VectorClock",
    "ViolationReport",
    "WorkloadSpec",
    "causal_verdict",
    "classify_pair",
    "compare",
    "constraints_for",
    "cost_instances",
    "cost_network",
    "cost_storage",
    "cost_total",
    "decide",
    "decision_log_lines",
    "detect_violations",
    "dominates",
    "estimate_rates",
    "gc_frontier",
    "generate",
    "measured_metrics",
    "merge",
    "rule1_holds",
    "schedule_loop",
    "simulate",
    "staleness_closed_form",
    "staleness_monte_carlo",
    "tick",
    "usage_from_trace",
    "build",
]
