"""Command-line front end.

Three subcommands:

  run       execute a configured experiment and write a JSON report
  validate  sweep the staleness models over a parameter grid
  compare   run every configured level and judge the expected orderings

Configuration is YAML with nested sections (experiment, workload,
cluster, levels, pricing).  Unknown keys are rejected with the full
field path so typos surface immediately.  STCCSIM_SEED overrides the
configured base seed.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from dataclasses import fields
from pathlib import Path

import yaml

from .analytics import (
    MetricsReport,
    StaleModelParams,
    measured_metrics,
    staleness_closed_form,
    staleness_monte_carlo,
)
from .cluster import ClusterConfig, ConsistencyLevel, simulate
from .costs import PricingScheme
from .workload import WorkloadSpec

SCHEMA_VERSION = 1


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(name, "expected a mapping")
    return value


def _build(cls, section: dict, prefix: str, **extra):
    known = {f.name for f in fields(cls)}
    for key in section:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown field")
    try:
        return cls(**{**section, **extra})
    except (TypeError, ValueError) as exc:
        raise ConfigError(prefix, str(exc)) from exc


class ExperimentConfig:
    """Parsed experiment file; builds the per-run objects on demand."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "expected a mapping at top level")
        for key in raw:
            if key not in ("experiment", "workload", "cluster", "levels", "pricing"):
                raise ConfigError(key, "unknown section")
        exp = _section(raw, "experiment")
        for key in exp:
            if key not in ("seed", "repetitions", "mc_trials"):
                raise ConfigError(f"experiment.{key}", "unknown field")
        self.seed = int(exp.get("seed", 0))
        env_seed = os.environ.get("STCCSIM_SEED")
        if env_seed is not None:
            try:
                self.seed = int(env_seed)
            except ValueError:
                raise ConfigError("STCCSIM_SEED", f"not an integer: {env_seed!r}")
        self.repetitions = int(exp.get("repetitions", 20))
        if self.repetitions < 1:
            raise ConfigError("experiment.repetitions", "must be at least 1")
        self.mc_trials = int(exp.get("mc_trials", 4000))

        wl = dict(_section(raw, "workload"))
        self.workload_name = str(wl.pop("name", "A"))
        self.rate_per_thread = float(wl.pop("rate_per_thread", 60.0))
        self.workload_kwargs = wl

        self.cluster = _build(ClusterConfig, _section(raw, "cluster"), "cluster")
        self.pricing = _build(PricingScheme, _section(raw, "pricing"), "pricing")

        levels = raw.get("levels", [l.value for l in ConsistencyLevel])
        if not isinstance(levels, list) or not levels:
            raise ConfigError("levels", "expected a non-empty list")
        self.levels: list[ConsistencyLevel] = []
        for name in levels:
            try:
                self.levels.append(ConsistencyLevel(str(name)))
            except ValueError:
                choices = ", ".join(l.value for l in ConsistencyLevel)
                raise ConfigError("levels", f"unknown level {name!r} (choose from {choices})")

    def workload_for(self, seed: int) -> WorkloadSpec:
        kwargs = dict(self.workload_kwargs)
        kwargs["seed"] = seed
        name = self.workload_name.upper()
        try:
            if name == "A":
                return WorkloadSpec.workload_a(rate_per_thread=self.rate_per_thread, **kwargs)
            if name == "B":
                return WorkloadSpec.workload_b(rate_per_thread=self.rate_per_thread, **kwargs)
            if name == "CUSTOM":
                fraction = float(kwargs.pop("read_fraction"))
                rate = self.rate_per_thread
                return WorkloadSpec(
                    name="custom",
                    read_fraction=fraction,
                    lambda_read=fraction * rate,
                    lambda_write=(1.0 - fraction) * rate,
                    **kwargs,
                )
        except KeyError as exc:
            raise ConfigError(f"workload.{exc.args[0]}", "required for custom workloads")
        except (TypeError, ValueError) as exc:
            raise ConfigError("workload", str(exc)) from exc
        raise ConfigError("workload.name", f"unknown workload {self.workload_name!r}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}")
    return ExperimentConfig(raw if raw is not None else {})


def _run_reports(config: ExperimentConfig) -> list[MetricsReport]:
    reports = []
    for level in config.levels:
        for rep in range(config.repetitions):
            seed = config.seed + rep
            spec = config.workload_for(seed)
            trace = simulate(spec, level, config.cluster, seed)
            reports.append(measured_metrics(trace, config.pricing, mc_trials=config.mc_trials))
    return reports


def _summaries(reports: list[MetricsReport]) -> dict:
    grouped: dict[str, list[MetricsReport]] = {}
    for r in reports:
        grouped.setdefault(r.level, []).append(r)
    out = {}
    for level in sorted(grouped):
        rows = grouped[level]
        def stats(values):
            mean = statistics.fmean(values)
            sd = statistics.stdev(values) if len(values) > 1 else 0.0
            return {"mean": round(mean, 9), "stdev": round(sd, 9)}
        out[level] = {
            "runs": len(rows),
            "throughput_ops_s": stats([r.throughput_ops_s for r in rows]),
            "staleness_rate": stats([r.staleness_rate for r in rows]),
            "violation_rate": stats([r.violations["rate"] for r in rows]),
            "total_usd": stats([r.cost["total_usd"] for r in rows]),
        }
    return out


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    reports = _run_reports(config)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "seed": config.seed,
        "repetitions": config.repetitions,
        "runs": [r.as_dict() for r in reports],
        "summary": _summaries(reports),
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "report.json"
    out_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out_path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        with open(args.grid) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError("grid", f"no such file: {args.grid}")
    except yaml.YAMLError as exc:
        raise ConfigError("grid", f"invalid YAML: {exc}")
    if not isinstance(raw, dict) or "grid" not in raw:
        raise ConfigError("grid", "expected a mapping with a 'grid' list")
    defaults = raw.get("defaults") or {}
    trials = int(defaults.get("trials", 10_000))
    seed = int(defaults.get("seed", 0))
    points = raw["grid"]
    if not isinstance(points, list) or not points:
        raise ConfigError("grid.grid", "expected a non-empty list of points")
    for i, point in enumerate(points):
        params = _build(StaleModelParams, point, f"grid[{i}]")
        closed = staleness_closed_form(params)
        mc = staleness_monte_carlo(params, trials=trials, seed=seed)
        row = {
            "replicas": params.replicas,
            "read_rate": params.read_rate,
            "write_rate": params.write_rate,
            "prop_delay_s": params.prop_delay_s,
            "closed_form": round(closed.value, 9),
            "clamped": closed.clamped,
            "monte_carlo": round(mc.value, 9),
            "stderr": round(mc.stderr, 9),
            "abs_gap": round(abs(closed.value - mc.value), 9),
        }
        print(json.dumps(row, sort_keys=True))
    return 0


_STALENESS_CHAIN = ["ALL", "XSTCC", "QUORUM", "CAUSAL", "ONE"]
_VIOLATION_CHAIN = ["ALL", "XSTCC", "QUORUM", "CAUSAL", "ONE"]
_COST_CHAIN = ["XSTCC", "ONE", "QUORUM", "CAUSAL", "ALL"]


def _median_by_level(reports: list[MetricsReport], pick) -> dict[str, float]:
    grouped: dict[str, list[float]] = {}
    for r in reports:
        grouped.setdefault(r.level, []).append(pick(r))
    return {level: statistics.median(vals) for level, vals in grouped.items()}


def _check_chain(medians: dict[str, float], chain: list[str], strict: bool) -> tuple[bool, str]:
    present = [name for name in chain if name in medians]
    if len(present) < 2:
        return True, "vacuous (fewer than two levels configured)"
    ok = True
    parts = []
    for a, b in zip(present, present[1:]):
        good = medians[a] < medians[b] if strict else medians[a] <= medians[b]
        ok = ok and good
        op = "<" if strict else "<="
        parts.append(f"{a}({medians[a]:.6g}) {op} {b}({medians[b]:.6g})")
    return ok, ", ".join(parts)


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    reports = _run_reports(config)
    if len(config.levels) < 2:
        print("warning: only one level configured; orderings are vacuous", file=sys.stderr)
    checks = [
        ("staleness", _STALENESS_CHAIN, False, lambda r: r.staleness_rate),
        ("violations", _VIOLATION_CHAIN, False, lambda r: float(r.violations["total"])
         if "total" in r.violations else float(sum(
             r.violations[k] for k in ("mr", "mw", "ryw", "wfr", "timed_causal")))),
        ("cost", _COST_CHAIN, True, lambda r: r.cost["total_usd"]),
    ]
    failures = 0
    for name, chain, strict, pick in checks:
        medians = _median_by_level(reports, pick)
        ok, detail = _check_chain(medians, chain, strict)
        verdict = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"{name}: {verdict}  {detail}")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stccsim",
        description="replicated key-value consistency simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True, help="experiment YAML")
    p_run.add_argument("--out", default="stccsim-out", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="staleness model sweep over a grid")
    p_val.add_argument("--grid", required=True, help="grid YAML")
    p_val.set_defaults(func=cmd_validate)

    p_cmp = sub.add_parser("compare", help="run levels and judge orderings")
    p_cmp.add_argument("--config", required=True, help="experiment YAML")
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
