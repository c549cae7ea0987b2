"""Scenario files: topology, flows, contracts, injections, run parameters.

The format is line oriented with named sections, so experiments are data
rather than code::

    # comment
    [topology]
    switches S1 S2 S3
    host H1 S1
    link S1 S2 capacity=1Gbps propagation=1ms
    control S1 c2s=0.3ms s2c=0.3ms

    [flows]
    flow F1 H1 H3 packet=1500B volume=100Mb start=1s gap=250ms

    [contracts]
    contract C1 S1 S3 strong=3.2ms weak=12ms

    [injections]
    at 40s link_down S1 S2
    at 55s link_up S1 S2
    at 60s set_ped C1 2ms
    at 70s scale_ped C1 0.7
    auto_link_failures count=4 window=15s..140s
    auto_ped_changes count=4 window=15s..140s factor=0.45..0.85
    auto_ped_changes count=4 window=15s..140s factor=0.45..0.85 per_pair

    [run]
    emulation_time 150s
    estimation_interval 10s
    control_latency 0.25ms
    queue_limit 5ms
    seed 1
    variant SDN-RM

Times accept ns/us/ms/s suffixes, rates bps/Kbps/Mbps/Gbps, sizes b/Kb/Mb/Gb
(bits) or B/KB/MB (bytes); decimal values are parsed exactly.

Auto-generated injections are seeded and nested: a run asking for k events
uses the chronologically first k of a fixed per-seed master schedule, so
sweeping the event count only ever adds later events.  Generated link
failures follow the path a well-managed controller would be using at that
moment (computed on an idle copy of the topology, independent of any
mechanism variant), which is what makes an injected failure actually
exercise fault handling.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace

from .contracts import ContractPair, create_contract_pair
from .core import (
    ControlChannel,
    Flow,
    LinkSpec,
    LinkState,
    SimConfig,
    TopologySpec,
    build_topology,
)
from .delay_estimation import run_estimation_cycle
from .kernel import (
    Injection,
    LinkDownInjection,
    LinkUpInjection,
    PedChangeInjection,
)
from .routing import NoPathError, find_path

# Master schedules are generated at this length; requested counts take a
# chronological prefix.  Event-count sweeps therefore nest.
MASTER_EVENT_POOL = 8


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


# ---------------------------------------------------------------------------
# unit parsing

_TIME_UNITS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}
_RATE_UNITS = {"bps": 1, "kbps": 1_000, "mbps": 1_000_000, "gbps": 1_000_000_000}
_SIZE_UNITS = {  # to bits
    "b": 1, "kb": 1_000, "mb": 1_000_000, "gb": 1_000_000_000,
    "B": 8, "KB": 8_000, "MB": 8_000_000, "GB": 8_000_000_000,
}

_NUMBER_RE = re.compile(r"^(\d+)(?:\.(\d+))?([a-zA-Z]+)$")


def _scaled_int(whole: str, frac: str | None, unit_value: int) -> int:
    """Exact decimal * unit_value, rounded to the nearest integer."""
    numerator = int(whole + (frac or ""))
    denominator = 10 ** len(frac or "")
    return (numerator * unit_value + denominator // 2) // denominator


def parse_time(text: str) -> int:
    """'1.5ms' -> 1_500_000 ns, exactly."""
    m = _NUMBER_RE.match(text.strip())
    if not m or m.group(3).lower() not in _TIME_UNITS:
        raise ScenarioError(f"bad time value {text!r} (use ns/us/ms/s)")
    return _scaled_int(m.group(1), m.group(2), _TIME_UNITS[m.group(3).lower()])


def parse_rate(text: str) -> int:
    m = _NUMBER_RE.match(text.strip())
    if not m or m.group(3).lower() not in _RATE_UNITS:
        raise ScenarioError(f"bad rate value {text!r} (use bps/Kbps/Mbps/Gbps)")
    return _scaled_int(m.group(1), m.group(2), _RATE_UNITS[m.group(3).lower()])


def parse_size(text: str) -> int:
    m = _NUMBER_RE.match(text.strip())
    if not m:
        raise ScenarioError(f"bad size value {text!r} (use b/Kb/Mb/Gb or B/KB/MB)")
    unit = m.group(3)
    factor = _SIZE_UNITS.get(unit)
    if factor is None:
        factor = _SIZE_UNITS.get(unit.lower())  # lowercase forms mean bits
    if factor is None:
        raise ScenarioError(f"bad size unit in {text!r}")
    return _scaled_int(m.group(1), m.group(2), factor)


def parse_fraction_ppm(text: str) -> int:
    """'0.7' -> 700_000 parts per million, exactly."""
    m = re.match(r"^(\d+)(?:\.(\d+))?$", text.strip())
    if not m:
        raise ScenarioError(f"bad fraction {text!r}")
    return _scaled_int(m.group(1), m.group(2), 1_000_000)


# ---------------------------------------------------------------------------
# scenario model


@dataclass(frozen=True)
class ContractSpec:
    pair_id: str
    src: str
    dst: str
    strong_ped: int
    weak_ped: int | None  # None means the default weak factor applies


@dataclass(frozen=True)
class AutoLinkFailures:
    count: int
    window: tuple[int, int]


@dataclass(frozen=True)
class AutoPedChanges:
    count: int
    window: tuple[int, int]
    factor_ppm: tuple[int, int]  # tightening range, applied to strong peds
    per_pair: bool = False


@dataclass(frozen=True)
class Scenario:
    name: str
    topology_spec: TopologySpec
    control: ControlChannel
    flows: tuple[Flow, ...]
    contracts: tuple[ContractSpec, ...]
    explicit_injections: tuple[Injection, ...]
    auto_link_failures: AutoLinkFailures | None
    auto_ped_changes: AutoPedChanges | None
    emulation_time: int
    config: SimConfig
    seed: int = 1
    variant: str = "SDN-RM"
    source_text: str | None = None

    def with_flow_count(self, count: int) -> "Scenario":
        if not 1 <= count <= len(self.flows):
            raise ScenarioError(
                f"flow count {count} outside 1..{len(self.flows)}")
        return replace(self, flows=self.flows[:count])

    def with_event_count(self, count: int) -> "Scenario":
        """Scale injected events; auto schedules nest chronologically."""
        if count < 0:
            raise ScenarioError("event count must be non-negative")
        auto_e1 = self.auto_link_failures
        auto_e2 = self.auto_ped_changes
        explicit = self.explicit_injections
        if auto_e1 is not None:
            auto_e1 = replace(auto_e1, count=count)
        if auto_e2 is not None:
            auto_e2 = replace(auto_e2, count=count)
        if auto_e1 is None and auto_e2 is None:
            explicit = tuple(explicit[:count])
        return replace(self, auto_link_failures=auto_e1,
                       auto_ped_changes=auto_e2,
                       explicit_injections=explicit)

    def contract_pairs(self) -> list[ContractPair]:
        return [create_contract_pair(c.pair_id, c.src, c.dst, c.strong_ped,
                                     c.weak_ped) for c in self.contracts]


# ---------------------------------------------------------------------------
# parser


def _parse_kv(tokens: list[str], line_no: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for token in tokens:
        if "=" not in token:
            raise ScenarioError(f"line {line_no}: expected key=value, got {token!r}")
        key, value = token.split("=", 1)
        out[key] = value
    return out


def parse_scenario(text: str, name: str = "<string>") -> Scenario:
    switches: list[str] = []
    hosts: list[tuple[str, str]] = []
    links: list[LinkSpec] = []
    control = ControlChannel()
    flows: list[Flow] = []
    contracts: list[ContractSpec] = []
    explicit: list[Injection] = []
    auto_e1: AutoLinkFailures | None = None
    auto_e2: AutoPedChanges | None = None
    run: dict[str, str] = {}
    seen_sections: set[str] = set()

    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("topology", "flows", "contracts",
                               "injections", "run"):
                raise ScenarioError(f"line {line_no}: unknown section {section!r}")
            seen_sections.add(section)
            continue
        if section is None:
            raise ScenarioError(f"line {line_no}: content before any section")
        tokens = line.split()
        word = tokens[0]
        try:
            if section == "topology":
                _parse_topology_line(word, tokens, switches, hosts, links,
                                     control, line_no)
            elif section == "flows":
                flows.append(_parse_flow_line(word, tokens, line_no))
            elif section == "contracts":
                contracts.append(_parse_contract_line(word, tokens, line_no))
            elif section == "injections":
                parsed = _parse_injection_line(word, tokens, line_no)
                if isinstance(parsed, AutoLinkFailures):
                    auto_e1 = parsed
                elif isinstance(parsed, AutoPedChanges):
                    auto_e2 = parsed
                else:
                    explicit.append(parsed)
            elif section == "run":
                if len(tokens) != 2:
                    raise ScenarioError(
                        f"line {line_no}: run entries are 'key value'")
                run[word] = tokens[1]
        except ScenarioError as exc:
            if str(exc).startswith("line "):
                raise
            raise ScenarioError(f"line {line_no}: {exc}") from exc
        except (ValueError, KeyError, IndexError) as exc:
            raise ScenarioError(f"line {line_no}: {exc}") from exc

    for required in ("topology", "flows", "run"):
        if required not in seen_sections:
            raise ScenarioError(f"missing required section [{required}]")

    topology_spec = TopologySpec(tuple(switches), tuple(hosts), tuple(links))
    scenario = _assemble(name, text, topology_spec, control, flows, contracts,
                         explicit, auto_e1, auto_e2, run)
    validate_scenario(scenario)
    return scenario


def _parse_topology_line(word, tokens, switches, hosts, links, control,
                         line_no) -> None:
    if word == "switches":
        switches.extend(tokens[1:])
    elif word == "switch":
        switches.extend(tokens[1:2])
    elif word == "host":
        if len(tokens) != 3:
            raise ScenarioError(f"line {line_no}: host <id> <switch>")
        hosts.append((tokens[1], tokens[2]))
    elif word == "link":
        if len(tokens) < 3:
            raise ScenarioError(f"line {line_no}: link <a> <b> key=value...")
        kv = _parse_kv(tokens[3:], line_no)
        links.append(LinkSpec(
            a=tokens[1], b=tokens[2],
            capacity_bps=parse_rate(kv["capacity"]),
            propagation_delay=parse_time(kv.get("propagation", "0ns"))))
    elif word == "control":
        kv = _parse_kv(tokens[2:], line_no)
        control.per_switch[tokens[1]] = (
            parse_time(kv["c2s"]), parse_time(kv["s2c"]))
    else:
        raise ScenarioError(f"line {line_no}: unknown topology entry {word!r}")


def _parse_flow_line(word, tokens, line_no) -> Flow:
    if word != "flow" or len(tokens) < 4:
        raise ScenarioError(
            f"line {line_no}: flow <id> <src_host> <dst_host> key=value...")
    kv = _parse_kv(tokens[4:], line_no)
    return Flow(
        id=tokens[1], src_host=tokens[2], dst_host=tokens[3],
        packet_length=parse_size(kv.get("packet", "1500B")),
        total_volume=parse_size(kv["volume"]),
        start_time=parse_time(kv.get("start", "0s")),
        inter_packet_gap=parse_time(kv.get("gap", "0s")))


def _parse_contract_line(word, tokens, line_no) -> ContractSpec:
    if word != "contract" or len(tokens) < 4:
        raise ScenarioError(
            f"line {line_no}: contract <id> <src> <dst> strong=... [weak=...]")
    kv = _parse_kv(tokens[4:], line_no)
    weak = kv.get("weak")
    return ContractSpec(
        pair_id=tokens[1], src=tokens[2], dst=tokens[3],
        strong_ped=parse_time(kv["strong"]),
        weak_ped=parse_time(weak) if weak is not None else None)


def _parse_window(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("..")
    window = (parse_time(lo), parse_time(hi))
    if window[0] >= window[1]:
        raise ScenarioError(f"empty window {text!r}")
    return window


def _parse_injection_line(word, tokens, line_no):
    if word == "at":
        at = parse_time(tokens[1])
        action = tokens[2]
        if action == "link_down":
            return LinkDownInjection(at=at, a=tokens[3], b=tokens[4])
        if action == "link_up":
            return LinkUpInjection(at=at, a=tokens[3], b=tokens[4])
        if action == "set_ped":
            return PedChangeInjection(at=at, pair_id=tokens[3],
                                      new_ped=parse_time(tokens[4]))
        if action == "scale_ped":
            return PedChangeInjection(at=at, pair_id=tokens[3],
                                      factor_ppm=parse_fraction_ppm(tokens[4]))
        raise ScenarioError(f"line {line_no}: unknown injection {action!r}")
    if word == "auto_link_failures":
        kv = _parse_kv(tokens[1:], line_no)
        return AutoLinkFailures(count=int(kv["count"]),
                                window=_parse_window(kv["window"]))
    if word == "auto_ped_changes":
        flags = [t for t in tokens[1:] if "=" not in t]
        kv = _parse_kv([t for t in tokens[1:] if "=" in t], line_no)
        lo, _, hi = kv["factor"].partition("..")
        factor = (parse_fraction_ppm(lo), parse_fraction_ppm(hi))
        if factor[0] > factor[1]:
            raise ScenarioError(f"line {line_no}: bad factor range")
        return AutoPedChanges(count=int(kv["count"]),
                              window=_parse_window(kv["window"]),
                              factor_ppm=factor,
                              per_pair="per_pair" in flags)
    raise ScenarioError(f"line {line_no}: unknown injection entry {word!r}")


def _assemble(name, text, topology_spec, control, flows, contracts, explicit,
              auto_e1, auto_e2, run) -> Scenario:
    config = SimConfig(
        estimation_interval=parse_time(run.get("estimation_interval", "10s")),
        probe_length_bits=parse_size(run.get("probe_length", "1500B")),
        recalc_cost=parse_time(run.get("recalc_cost", "0.1ms")),
        queue_limit=parse_time(run.get("queue_limit", "5ms")),
        host_link_delay=parse_time(run.get("host_link_delay", "0ns")),
    )
    latency = run.get("control_latency")
    if latency is not None:
        ns = parse_time(latency)
        control.default_c2s = ns
        control.default_s2c = ns
    return Scenario(
        name=name,
        topology_spec=topology_spec,
        control=control,
        flows=tuple(flows),
        contracts=tuple(contracts),
        explicit_injections=tuple(explicit),
        auto_link_failures=auto_e1,
        auto_ped_changes=auto_e2,
        emulation_time=parse_time(run["emulation_time"]),
        config=config,
        seed=int(run.get("seed", "1")),
        variant=run.get("variant", "SDN-RM"),
        source_text=text,
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, name=str(path))


def validate_scenario(scenario: Scenario) -> None:
    """Cross-reference checks beyond per-line syntax."""
    topology = build_topology(scenario.topology_spec)
    for flow in scenario.flows:
        topology.attachment(flow.src_host)
        topology.attachment(flow.dst_host)
    for contract in scenario.contracts:
        for switch in (contract.src, contract.dst):
            if not topology.has_switch(switch):
                raise ScenarioError(
                    f"contract {contract.pair_id}: unknown switch {switch!r}")
    pair_ids = {c.pair_id for c in scenario.contracts}
    for inj in scenario.explicit_injections:
        if isinstance(inj, (LinkDownInjection, LinkUpInjection)):
            if not topology.has_link(inj.a, inj.b):
                raise ScenarioError(
                    f"injection references unknown link {inj.a}-{inj.b}")
        elif isinstance(inj, PedChangeInjection):
            if inj.pair_id not in pair_ids:
                raise ScenarioError(
                    f"injection references unknown contract {inj.pair_id!r}")
        if not 0 <= inj.at <= scenario.emulation_time:
            raise ScenarioError(
                f"injection at {inj.at} ns outside the emulation window")
    if scenario.emulation_time < scenario.config.estimation_interval:
        raise ScenarioError("emulation_time shorter than estimation_interval")
    if scenario.auto_ped_changes is not None and not scenario.contracts:
        raise ScenarioError("auto_ped_changes requires at least one contract")


# ---------------------------------------------------------------------------
# seeded injection generation


def _idle_matrix(topology, probe_bits: int):
    matrix, _ = run_estimation_cycle(topology, ControlChannel(), 0,
                                     probe_length_bits=probe_bits)
    return matrix


def _sorted_times(rng: random.Random, count: int,
                  window: tuple[int, int]) -> list[int]:
    times: set[int] = set()
    while len(times) < count:
        times.add(rng.randrange(window[0], window[1]))
    return sorted(times)


def _connected(topology, src: str, dst: str) -> bool:
    """Reachability over Up links only."""
    frontier = [src]
    seen = {src}
    while frontier:
        node = frontier.pop()
        if node == dst:
            return True
        for neighbor in topology.neighbors(node):
            if neighbor in seen:
                continue
            if topology.link_between(node, neighbor).is_up:
                seen.add(neighbor)
                frontier.append(neighbor)
    return src == dst


def _severable(topology, pairs, a: str, b: str) -> bool:
    """True when taking link a-b down leaves every pair connected."""
    topology.set_link_state(a, b, LinkState.DOWN)
    try:
        return all(_connected(topology, src, dst) for src, dst in pairs)
    finally:
        topology.set_link_state(a, b, LinkState.UP)


def _expected_path_diary(scenario: Scenario, rng: random.Random,
                         times: list[int]) -> list[LinkDownInjection]:
    """Pick one live link per failure, following expected traffic paths.

    A scratch topology accumulates the failures so the k-th pick lands on
    the path traffic would occupy after the first k-1 failures.  Pair
    choice and link choice are seeded; the result does not depend on any
    mechanism variant.  A pick never severs a measured pair: the tests
    probe fault handling, and a partition leaves nothing to handle.
    """
    topology = build_topology(scenario.topology_spec)
    pairs = [(c.src, c.dst) for c in scenario.contracts]
    if not pairs:
        seen = set()
        for flow in scenario.flows:
            key = (topology.attachment(flow.src_host),
                   topology.attachment(flow.dst_host))
            if key not in seen:
                seen.add(key)
                pairs.append(key)
    injections: list[LinkDownInjection] = []
    for at in times:
        matrix = _idle_matrix(topology, scenario.config.probe_length_bits)
        candidates: list[tuple[str, str]] = []
        order = list(range(len(pairs)))
        rng.shuffle(order)
        for index in order:
            src, dst = pairs[index]
            try:
                route = find_path(topology, matrix, src, dst)
            except NoPathError:
                continue
            hops = [(a, b) for a, b in zip(route.path, route.path[1:])
                    if _severable(topology, pairs, a, b)]
            if hops:
                candidates = hops
                break
        if not candidates:
            candidates = [(link.a, link.b)
                          for link in topology.links() if link.is_up
                          if _severable(topology, pairs, link.a, link.b)]
        if not candidates:
            continue  # nothing can fail without a partition; skip this event
        a, b = candidates[rng.randrange(len(candidates))]
        injections.append(LinkDownInjection(at=at, a=a, b=b))
        topology.set_link_state(a, b, LinkState.DOWN)
    return injections


def materialize_injections(scenario: Scenario, seed: int) -> list[Injection]:
    """Expand auto specs into concrete injections for one seeded run.

    Counts take a chronological prefix of a MASTER_EVENT_POOL-long master
    schedule, so different counts under the same seed share their earliest
    events.
    """
    injections: list[Injection] = list(scenario.explicit_injections)

    spec_e1 = scenario.auto_link_failures
    if spec_e1 is not None and spec_e1.count > 0:
        rng = random.Random(f"{seed}:link-failures")
        master = max(spec_e1.count, MASTER_EVENT_POOL)
        times = _sorted_times(rng, master, spec_e1.window)
        diary = _expected_path_diary(scenario, rng, times)
        injections.extend(diary[:spec_e1.count])

    spec_e2 = scenario.auto_ped_changes
    if spec_e2 is not None and spec_e2.count > 0:
        rng = random.Random(f"{seed}:ped-changes")
        master = max(spec_e2.count, MASTER_EVENT_POOL)
        lo, hi = spec_e2.factor_ppm
        if spec_e2.per_pair:
            for contract in scenario.contracts:
                times = _sorted_times(rng, master, spec_e2.window)
                for at in times[:spec_e2.count]:
                    injections.append(PedChangeInjection(
                        at=at, pair_id=contract.pair_id,
                        factor_ppm=rng.randint(lo, hi)))
        else:
            times = _sorted_times(rng, master, spec_e2.window)
            pair_ids = [c.pair_id for c in scenario.contracts]
            schedule = [(at, pair_ids[rng.randrange(len(pair_ids))],
                         rng.randint(lo, hi)) for at in times]
            for at, pair_id, factor in schedule[:spec_e2.count]:
                injections.append(PedChangeInjection(
                    at=at, pair_id=pair_id, factor_ppm=factor))

    injections.sort(key=lambda inj: inj.at)
    return injections
