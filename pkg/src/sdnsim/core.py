"""Network model shared by the whole simulator.

Time is integer nanoseconds since simulation start; every delay computation
stays in exact integer arithmetic so runs are reproducible across platforms.
The topology is a graph of switches joined by bidirectional links with
symmetric capacity and propagation delay, plus hosts attached to exactly one
switch each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

# Time unit multipliers (nanoseconds).
NANOSECOND = 1
MICROSECOND = 1_000
MILLISECOND = 1_000_000
SECOND = 1_000_000_000

SwitchId = str
HostId = str
FlowId = str

# Placeholder delay used when a path has no finite estimate (dead or missing
# links).  Larger than any real delay so contract checks treat it as a
# violation.
UNBOUNDED_DELAY = 1 << 62


class TopologyError(ValueError):
    """Raised when a topology description fails validation."""


class LinkState(Enum):
    UP = "up"
    DOWN = "down"


def link_key(a: SwitchId, b: SwitchId) -> tuple[SwitchId, SwitchId]:
    """Canonical unordered key for the link between two switches."""
    return (a, b) if a <= b else (b, a)


@dataclass
class Link:
    a: SwitchId
    b: SwitchId
    capacity_bps: int
    propagation_delay: int  # ns per direction
    state: LinkState = LinkState.UP

    def __post_init__(self) -> None:
        if self.capacity_bps <= 0:
            raise TopologyError(f"link {self.a}-{self.b}: capacity must be positive")
        if self.propagation_delay < 0:
            raise TopologyError(f"link {self.a}-{self.b}: negative propagation delay")

    @property
    def key(self) -> tuple[SwitchId, SwitchId]:
        return link_key(self.a, self.b)

    @property
    def is_up(self) -> bool:
        return self.state is LinkState.UP


@dataclass(frozen=True)
class LinkSpec:
    a: SwitchId
    b: SwitchId
    capacity_bps: int
    propagation_delay: int


@dataclass(frozen=True)
class TopologySpec:
    """Declarative description of a topology, validated by build_topology."""

    switches: tuple[SwitchId, ...]
    hosts: tuple[tuple[HostId, SwitchId], ...]
    links: tuple[LinkSpec, ...]


class Topology:
    """Validated switch/host/link graph.

    Mutable only through set_link_state; everything else is fixed at build
    time.  Iteration orders follow the declaring TopologySpec so that
    downstream consumers stay deterministic.
    """

    def __init__(self, switches: list[SwitchId], hosts: dict[HostId, SwitchId],
                 links: list[Link]):
        self.switches: list[SwitchId] = switches
        self.hosts: dict[HostId, SwitchId] = hosts
        self._links: dict[tuple[SwitchId, SwitchId], Link] = {
            link.key: link for link in links
        }
        self._adjacency: dict[SwitchId, list[SwitchId]] = {s: [] for s in switches}
        for link in links:
            self._adjacency[link.a].append(link.b)
            self._adjacency[link.b].append(link.a)
        for neighbors in self._adjacency.values():
            neighbors.sort()

    def links(self) -> list[Link]:
        return list(self._links.values())

    def link_between(self, a: SwitchId, b: SwitchId) -> Link:
        try:
            return self._links[link_key(a, b)]
        except KeyError:
            raise TopologyError(f"no link between {a} and {b}") from None

    def has_link(self, a: SwitchId, b: SwitchId) -> bool:
        return link_key(a, b) in self._links

    def neighbors(self, switch: SwitchId) -> list[SwitchId]:
        return self._adjacency.get(switch, [])

    def has_switch(self, switch: SwitchId) -> bool:
        return switch in self._adjacency

    def attachment(self, host: HostId) -> SwitchId:
        try:
            return self.hosts[host]
        except KeyError:
            raise TopologyError(f"unknown host {host!r}") from None

    def set_link_state(self, a: SwitchId, b: SwitchId, state: LinkState) -> None:
        """Flip a link up or down.  Idempotent when already in that state."""
        link = self.link_between(a, b)
        link.state = state


def build_topology(spec: TopologySpec) -> Topology:
    """Validate a TopologySpec and return the corresponding Topology.

    All links start Up.  Rejects duplicate identifiers, dangling endpoints,
    parallel links, multi-homed hosts and nonpositive capacities.
    """
    switches = list(spec.switches)
    if len(set(switches)) != len(switches):
        raise TopologyError("duplicate switch id in topology spec")

    switch_set = set(switches)
    hosts: dict[HostId, SwitchId] = {}
    for host, attach in spec.hosts:
        if host in hosts:
            raise TopologyError(f"host {host!r} attached more than once")
        if host in switch_set:
            raise TopologyError(f"id {host!r} used for both a host and a switch")
        if attach not in switch_set:
            raise TopologyError(f"host {host!r} attaches to unknown switch {attach!r}")
        hosts[host] = attach

    links: list[Link] = []
    seen: set[tuple[SwitchId, SwitchId]] = set()
    for ls in spec.links:
        if ls.a not in switch_set or ls.b not in switch_set:
            raise TopologyError(f"link {ls.a}-{ls.b} references an unknown switch")
        if ls.a == ls.b:
            raise TopologyError(f"link {ls.a}-{ls.b} is a self loop")
        key = link_key(ls.a, ls.b)
        if key in seen:
            raise TopologyError(f"parallel link {ls.a}-{ls.b}")
        seen.add(key)
        links.append(Link(ls.a, ls.b, ls.capacity_bps, ls.propagation_delay))

    return Topology(switches, hosts, links)


def transmission_delay(packet_length_bits: int, bandwidth_bps: int) -> int:
    """Serialization time of a packet on a link, in ns, rounded to nearest.

    packet_length_bits / bandwidth_bps seconds, computed exactly in integers.
    """
    if bandwidth_bps <= 0:
        raise ValueError("bandwidth must be positive")
    if packet_length_bits < 0:
        raise ValueError("packet length must be non-negative")
    return (packet_length_bits * SECOND + bandwidth_bps // 2) // bandwidth_bps


@dataclass(frozen=True)
class Flow:
    """A unidirectional packet stream between two hosts.

    Packets of packet_length bits leave the source every inter_packet_gap ns
    starting at start_time, until total_volume bits have been sent or the
    emulation ends.
    """

    id: FlowId
    src_host: HostId
    dst_host: HostId
    packet_length: int  # bits
    total_volume: int   # bits
    start_time: int     # ns
    inter_packet_gap: int  # ns

    def __post_init__(self) -> None:
        if self.packet_length <= 0:
            raise ValueError(f"flow {self.id}: packet_length must be positive")
        if self.total_volume < self.packet_length:
            raise ValueError(f"flow {self.id}: total_volume below one packet")
        if self.src_host == self.dst_host:
            raise ValueError(f"flow {self.id}: source equals destination")
        if self.start_time < 0 or self.inter_packet_gap < 0:
            raise ValueError(f"flow {self.id}: negative timing")


def validate_path(topology: Topology, path: list[SwitchId]) -> None:
    """Check that a path is simple and every consecutive hop is an Up link."""
    if len(path) != len(set(path)):
        raise TopologyError(f"path repeats a switch: {path}")
    for a, b in zip(path, path[1:]):
        link = topology.link_between(a, b)
        if not link.is_up:
            raise TopologyError(f"path crosses a down link {a}-{b}")


@dataclass
class SimConfig:
    """Simulation-wide parameters shared by kernel and controller."""

    estimation_interval: int = 10 * SECOND
    probe_length_bits: int = 12_000          # 1500 B reference packet
    recalc_cost: int = 100 * MICROSECOND    # path computation charge
    queue_limit: int = 5 * MILLISECOND      # max backlog wait per egress
    host_link_delay: int = 0                 # per host access hop
    eq1_raw_mode: bool = False               # undivided estimator residual

    def __post_init__(self) -> None:
        if self.estimation_interval <= 0:
            raise ValueError("estimation interval must be positive")


@dataclass
class ControlChannel:
    """Controller-to-switch latency model, per direction and per switch."""

    default_c2s: int = 250 * MICROSECOND
    default_s2c: int = 250 * MICROSECOND
    per_switch: dict[SwitchId, tuple[int, int]] = field(default_factory=dict)

    def c2s(self, switch: SwitchId) -> int:
        return self.per_switch.get(switch, (self.default_c2s, self.default_s2c))[0]

    def s2c(self, switch: SwitchId) -> int:
        return self.per_switch.get(switch, (self.default_c2s, self.default_s2c))[1]

    def echo_rtt(self, switch: SwitchId) -> int:
        return self.c2s(switch) + self.s2c(switch)
