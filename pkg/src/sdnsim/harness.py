"""Experiment orchestration: runs, sweeps, metrics and report files.

A run is one kernel execution of a scenario under one mechanism variant and
one seed.  An experiment fans a scenario out over variants, seeds and an
optional swept parameter (flow count or event count), then aggregates the
three headline metrics: success rate, throughput and path restoration
delay.  Metrics are computed from the structured run log alone, so they
can be recomputed byte-identically from a serialized log.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import os
from dataclasses import dataclass, field, replace

from .core import ControlChannel, SECOND, build_topology
from .kernel import Kernel
from .resilience import MechanismVariant, variant_by_name
from .runlog import RunLog, record_to_dict
from .scenario import Scenario, materialize_injections

PACKAGE_VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# metric computation (operates on plain dict records)


def _ped_timeline(ped_changes: list[dict]) -> dict[tuple[str, str], list]:
    """Per contract endpoints: parallel arrays of change times and bounds."""
    timeline: dict[tuple[str, str], list] = {}
    for change in sorted(ped_changes, key=lambda c: c["at"]):
        key = (change["src"], change["dst"])
        entry = timeline.setdefault(key, ([], [], []))
        entry[0].append(change["at"])
        entry[1].append(change["active_ped"])
        entry[2].append(change["strong_ped"])
    return timeline


def _bound_at(entry, when: int, which: int) -> int | None:
    times = entry[0]
    index = bisect.bisect_right(times, when) - 1
    if index < 0:
        return None
    return entry[which][index]


def compute_success_rate(packets: list[dict], ped_changes: list[dict],
                         mode: str = "per_packet",
                         check_window: int = 10 * SECOND,
                         ) -> tuple[float, float]:
    """Fraction of contract-covered traffic meeting the active requirement.

    Returns (rate vs active bound, rate vs strong bound).  Dropped packets
    count as unsatisfied.  mode="per_packet" scores each packet;
    mode="per_check" scores each (pair, check_window) group as a whole,
    for comparison with coarser accounting.
    """
    timeline = _ped_timeline(ped_changes)
    covered = [p for p in packets if p["covered"]]
    if not covered:
        return 1.0, 1.0
    if mode == "per_packet":
        hits = strong_hits = 0
        for packet in covered:
            ok, ok_strong = _packet_satisfied(packet, timeline)
            hits += ok
            strong_hits += ok_strong
        return hits / len(covered), strong_hits / len(covered)
    if mode == "per_check":
        return _per_check_rate(covered, timeline, check_window)
    raise ValueError(f"unknown success accounting mode {mode!r}")


def _packet_satisfied(packet: dict, timeline) -> tuple[bool, bool]:
    if packet["delivered_at"] is None:
        return False, False
    key = (packet["pair"][0], packet["pair"][1])
    entry = timeline.get(key)
    if entry is None:
        return False, False
    when = packet["delivered_at"]
    active = _bound_at(entry, when, 1)
    strong = _bound_at(entry, when, 2)
    if active is None:
        return False, False
    delay = packet["actual_delay"]
    return delay <= active, delay <= strong


def _per_check_rate(covered: list[dict], timeline,
                    window: int) -> tuple[float, float]:
    groups: dict[tuple, list[dict]] = {}
    for packet in covered:
        key = (packet["pair"][0], packet["pair"][1], packet["sent_at"] // window)
        groups.setdefault(key, []).append(packet)
    checks = ok = ok_strong = 0
    for _, group in sorted(groups.items()):
        checks += 1
        results = [_packet_satisfied(p, timeline) for p in group]
        ok += all(r[0] for r in results)
        ok_strong += all(r[1] for r in results)
    return ok / checks, ok_strong / checks


def compute_throughput(packets: list[dict], emulation_time: int) -> float:
    """Delivered bits across all flows divided by the emulation time."""
    if emulation_time <= 0:
        raise ValueError("emulation time must be positive")
    bits = sum(p["length"] for p in packets if p["delivered_at"] is not None)
    return bits * SECOND / emulation_time


def compute_restoration_stats(restorations: list[dict],
                              ) -> tuple[float | None, list[int]]:
    """Arithmetic mean and full list of restoration totals; None if empty."""
    totals = [r["total"] for r in restorations]
    if not totals:
        return None, []
    return sum(totals) / len(totals), totals


# ---------------------------------------------------------------------------
# run results


@dataclass(frozen=True)
class MetricsReport:
    variant: str
    seed: int
    packets_sent: int
    packets_delivered: int
    packets_dropped: int
    success_rate: float
    success_rate_strong: float
    throughput_bps: float
    restoration_mean: float | None
    restoration_totals: tuple[int, ...]
    warning_count: int


@dataclass
class RunResult:
    scenario_name: str
    variant: str
    seed: int
    metrics: MetricsReport
    log: RunLog | None = None


def metrics_from_streams(streams: dict[str, list[dict]], variant: str,
                         seed: int, emulation_time: int,
                         mode: str = "per_packet") -> MetricsReport:
    packets = streams["packets"]
    delivered = sum(1 for p in packets if p["delivered_at"] is not None)
    success, success_strong = compute_success_rate(
        packets, streams["ped_changes"], mode=mode)
    mean, totals = compute_restoration_stats(streams["restorations"])
    return MetricsReport(
        variant=variant, seed=seed,
        packets_sent=len(packets),
        packets_delivered=delivered,
        packets_dropped=len(packets) - delivered,
        success_rate=success,
        success_rate_strong=success_strong,
        throughput_bps=compute_throughput(packets, emulation_time),
        restoration_mean=mean,
        restoration_totals=tuple(totals),
        warning_count=len(streams["warnings"]),
    )


def log_streams(log: RunLog) -> dict[str, list[dict]]:
    return {stream: [record_to_dict(r) for r in getattr(log, stream)]
            for stream in RunLog.STREAMS}


def verify_conservation(log: RunLog) -> None:
    """Re-derive cost sums from logged components; raise on any mismatch.

    Every cost-matrix entry must equal its transmission plus link delay,
    and every logged route's delay must equal the sum of its link costs.
    Runs call this unconditionally, keeping the arithmetic honest.
    """
    for record in log.estimation:
        if record.cost != record.transmission_delay + record.link_delay:
            raise AssertionError(f"cost entry violates additivity: {record}")
    for route in log.routes:
        if route.ed != sum(route.link_costs):
            raise AssertionError(f"route delay is not the cost sum: {route}")
    for record in log.restorations:
        expected = (record.detection_delay + record.recalculation_delay
                    + record.reassignment_delay)
        if record.total != expected:
            raise AssertionError(f"restoration total mismatch: {record}")
    for packet in log.packets:
        delivered = packet.delivered_at is not None
        if delivered == (packet.drop_reason is not None):
            raise AssertionError(f"packet neither delivered nor dropped: {packet}")


# ---------------------------------------------------------------------------
# runs and experiments


def run_single(scenario: Scenario, variant_name: str | None = None,
               seed: int | None = None, eq1_raw: bool = False,
               keep_log: bool = True,
               success_mode: str = "per_packet") -> RunResult:
    """Execute one scenario under one variant and seed."""
    variant: MechanismVariant = variant_by_name(variant_name or scenario.variant)
    run_seed = scenario.seed if seed is None else seed
    topology = build_topology(scenario.topology_spec)
    control = ControlChannel(
        default_c2s=scenario.control.default_c2s,
        default_s2c=scenario.control.default_s2c,
        per_switch=dict(scenario.control.per_switch))
    config = scenario.config
    if eq1_raw:
        config = replace(config, eq1_raw_mode=True)
    kernel = Kernel(
        topology=topology,
        flows=list(scenario.flows),
        contract_pairs=scenario.contract_pairs(),
        variant=variant,
        config=config,
        control=control)
    injections = materialize_injections(scenario, run_seed)
    kernel.setup(scenario.emulation_time, injections)
    kernel.run_until(scenario.emulation_time)
    verify_conservation(kernel.log)
    metrics = metrics_from_streams(
        log_streams(kernel.log), variant.name, run_seed,
        scenario.emulation_time, mode=success_mode)
    return RunResult(scenario_name=scenario.name, variant=variant.name,
                     seed=run_seed, metrics=metrics,
                     log=kernel.log if keep_log else None)


@dataclass
class ExperimentResult:
    scenario_name: str
    scenario_sha256: str
    sweep_param: str | None
    sweep_values: tuple
    variants: tuple[str, ...]
    seeds: tuple[int, ...]
    eq1_raw: bool
    cells: dict = field(default_factory=dict)  # (variant, value) -> [MetricsReport]
    sample_log: RunLog | None = None  # first run's full log, for artifacts

    def reports(self, variant: str, value=None) -> list[MetricsReport]:
        return self.cells[(variant, value)]

    def mean(self, variant: str, value=None, metric: str = "success_rate",
             ) -> float | None:
        reports = self.reports(variant, value)
        values = [getattr(r, metric) for r in reports]
        values = [v for v in values if v is not None]
        if not values:
            return None
        return sum(values) / len(values)

    def sweep_mean(self, variant: str, metric: str = "success_rate",
                   ) -> float | None:
        """Mean of the per-value means across the sweep."""
        means = [self.mean(variant, value, metric)
                 for value in self.sweep_values]
        means = [m for m in means if m is not None]
        if not means:
            return None
        return sum(means) / len(means)

    def pooled_restorations(self, variant: str) -> list[int]:
        totals: list[int] = []
        for value in self.sweep_values:
            for report in self.reports(variant, value):
                totals.extend(report.restoration_totals)
        return totals


def _scenario_digest(scenario: Scenario) -> str:
    text = scenario.source_text or repr(scenario)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _swept_scenario(scenario: Scenario, sweep_param: str | None, value):
    if sweep_param is None:
        return scenario
    if sweep_param == "flows":
        return scenario.with_flow_count(value)
    if sweep_param == "events":
        return scenario.with_event_count(value)
    raise ValueError(f"unknown sweep parameter {sweep_param!r}")


def run_experiment(scenario: Scenario, variants: list[str], seeds: list[int],
                   sweep: tuple[str, list] | None = None,
                   eq1_raw: bool = False,
                   success_mode: str = "per_packet") -> ExperimentResult:
    """One kernel run per (variant, seed, sweep value); aggregated reports."""
    sweep_param, sweep_values = (None, (None,)) if sweep is None else (
        sweep[0], tuple(sweep[1]))
    full_names = tuple(variant_by_name(v).name for v in variants)
    result = ExperimentResult(
        scenario_name=scenario.name,
        scenario_sha256=_scenario_digest(scenario),
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        variants=full_names,
        seeds=tuple(seeds),
        eq1_raw=eq1_raw)
    for value in sweep_values:
        swept = _swept_scenario(scenario, sweep_param, value)
        for variant in full_names:
            reports = []
            for seed in seeds:
                keep = result.sample_log is None
                run = run_single(swept, variant, seed, eq1_raw=eq1_raw,
                                 keep_log=keep, success_mode=success_mode)
                if keep:
                    result.sample_log = run.log
                reports.append(run.metrics)
            result.cells[(variant, value)] = reports
    return result


# ---------------------------------------------------------------------------
# report emission


def _format_cell(value: float | None, pattern: str) -> str:
    return "-" if value is None else pattern % value


def _metric_csv(result: ExperimentResult, metric: str, pattern: str,
                scale: float = 1.0) -> str:
    if result.sweep_param is None:
        header = ["variant", "value"]
    else:
        header = ["variant"] + [f"{result.sweep_param}={v}"
                                for v in result.sweep_values]
    lines = [",".join(header)]
    for variant in result.variants:
        cells = []
        for value in result.sweep_values:
            mean = result.mean(variant, value, metric)
            cells.append(_format_cell(
                None if mean is None else mean * scale, pattern))
        lines.append(",".join([variant] + cells))
    return "\n".join(lines) + "\n"


def emit_reports(result: ExperimentResult, out_dir: str) -> list[str]:
    """Write one CSV per metric plus a summary and a run manifest.

    Output is byte-stable for identical results: fixed column order, fixed
    float formatting, sorted JSON keys.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    files = {
        "success_rate.csv": ("success_rate", "%.6f", 1.0),
        "success_rate_strong.csv": ("success_rate_strong", "%.6f", 1.0),
        "throughput_mbps.csv": ("throughput_bps", "%.3f", 1e-6),
        "restoration_ms.csv": ("restoration_mean", "%.6f", 1e-6),
        "warnings.csv": ("warning_count", "%.2f", 1.0),
    }
    for filename, (metric, pattern, scale) in files.items():
        path = os.path.join(out_dir, filename)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(_metric_csv(result, metric, pattern, scale))
        written.append(path)

    summary = {
        "scenario": result.scenario_name,
        "sweep": {"param": result.sweep_param,
                  "values": list(result.sweep_values)},
        "variants": {},
    }
    for variant in result.variants:
        per_value = {}
        for value in result.sweep_values:
            reports = result.reports(variant, value)
            per_value[str(value)] = {
                "per_seed": [record_to_dict(r) for r in reports],
                "mean_success_rate": result.mean(variant, value, "success_rate"),
                "mean_throughput_bps": result.mean(variant, value,
                                                   "throughput_bps"),
                "mean_restoration_ns": result.mean(variant, value,
                                                   "restoration_mean"),
            }
        summary["variants"][variant] = per_value
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, sort_keys=True, indent=2)
        handle.write("\n")
    written.append(summary_path)

    manifest = {
        "scenario": result.scenario_name,
        "scenario_sha256": result.scenario_sha256,
        "variants": list(result.variants),
        "seeds": list(result.seeds),
        "sweep_param": result.sweep_param,
        "sweep_values": list(result.sweep_values),
        "eq1_raw_mode": result.eq1_raw,
        "version": PACKAGE_VERSION,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, sort_keys=True, indent=2)
        handle.write("\n")
    written.append(manifest_path)

    if result.sample_log is not None:
        cycles_path = os.path.join(out_dir, "llde_cycles.csv")
        with open(cycles_path, "w", encoding="utf-8") as handle:
            handle.write("cycle,src,dst,link_delay_ns,transmission_delay_ns,"
                         "cost_ns,at_ns\n")
            for record in result.sample_log.estimation:
                handle.write(f"{record.cycle},{record.src},{record.dst},"
                             f"{record.link_delay},{record.transmission_delay},"
                             f"{record.cost},{record.at}\n")
        written.append(cycles_path)
        events_path = os.path.join(out_dir, "events.jsonl")
        with open(events_path, "w", encoding="utf-8") as handle:
            handle.write(result.sample_log.to_jsonl())
        written.append(events_path)
    return written
