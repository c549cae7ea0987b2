"""Deterministic discrete-event engine for packet transport and injections.

Events execute in (time, sequence) order; the sequence number is assigned
when an event is scheduled, so simultaneous events run in schedule order
and every run is a pure function of its inputs.  Packets experience, per
hop, the sender's serialization delay, FIFO waiting when the egress is
busy, and the link's propagation delay.  A packet in flight on a link at
the moment the link goes down is dropped, as is a packet whose egress
backlog exceeds the configured queue limit.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Callable

from .contracts import ContractKind, ContractPair, ContractStore
from .core import (
    ControlChannel,
    Flow,
    LinkState,
    SimConfig,
    SwitchId,
    Topology,
    transmission_delay,
)
from .resilience import MechanismVariant, ResilienceManager
from .runlog import RunLog


class ScheduleError(ValueError):
    """Attempt to schedule an event into the past."""


class InjectionError(ValueError):
    """An injection references an unknown link or contract."""


# ---------------------------------------------------------------------------
# injections


@dataclass(frozen=True)
class LinkDownInjection:
    at: int
    a: SwitchId
    b: SwitchId
    kind: str = "link_down"


@dataclass(frozen=True)
class LinkUpInjection:
    at: int
    a: SwitchId
    b: SwitchId
    kind: str = "link_up"


@dataclass(frozen=True)
class PedChangeInjection:
    """Runtime change of a delay requirement.

    Either an absolute new bound (new_ped) or a multiplicative factor in
    parts per million (factor_ppm) applied to the current bound.
    """

    at: int
    pair_id: str
    new_ped: int | None = None
    factor_ppm: int | None = None
    contract_kind: ContractKind = ContractKind.STRONG
    kind: str = "ped_change"


Injection = LinkDownInjection | LinkUpInjection | PedChangeInjection


# ---------------------------------------------------------------------------
# packet bookkeeping


@dataclass
class PacketRecord:
    flow_id: str
    seq: int
    pair: tuple[SwitchId, SwitchId]
    covered: bool            # flow is governed by a contract pair
    length: int              # bits
    sent_at: int
    path: tuple[SwitchId, ...] | None
    delivered_at: int | None = None
    drop_reason: str | None = None
    actual_delay: int | None = None
    queue_wait: int = 0

    @property
    def delivered(self) -> bool:
        return self.delivered_at is not None


@dataclass
class _FlowState:
    flow: Flow
    bits_sent: int = 0
    next_seq: int = 0
    started: bool = False


@dataclass
class _Packet:
    record: PacketRecord
    length: int
    hop: int = 0


class Kernel:
    """Single-threaded event loop owning topology and forwarding state."""

    def __init__(self, topology: Topology, flows: list[Flow],
                 contract_pairs: list[ContractPair],
                 variant: MechanismVariant, config: SimConfig,
                 control: ControlChannel, log: RunLog | None = None) -> None:
        self.topology = topology
        self.config = config
        self.control = control
        self.log = log if log is not None else RunLog()
        self.now = 0
        self._queue: list[tuple[int, int, Callable[[int], None]]] = []
        self._seq = itertools.count()
        self._egress_free: dict[tuple[SwitchId, SwitchId], int] = {}
        self._last_down: dict[tuple[SwitchId, SwitchId], int] = {}
        self._forwarding: dict[tuple[SwitchId, SwitchId],
                               list[tuple[int, tuple[SwitchId, ...]]]] = {}
        self._flows = {flow.id: _FlowState(flow) for flow in flows}

        self.store = ContractStore()
        for pair in contract_pairs:
            self.store.add(pair, now=0)
        self.log.ped_changes = self.store.ped_changes

        self._covered_pairs = {(p.src, p.dst) for p in self.store.pairs()}
        self.controller = ResilienceManager(
            variant, topology, control, self.store, self, config, self.log)

    def setup(self, t_end: int, injections: list[Injection]) -> None:
        """Schedule cycle boundaries, flow starts and injections.

        Boundaries go first so an injection landing exactly on a boundary
        is seen by the following cycle, never the coinciding one.
        """
        t = 0
        while t <= t_end:
            self.schedule_call(t, self.controller.on_cycle_boundary)
            t += self.config.estimation_interval
        for state in self._flows.values():
            self.schedule_call(state.flow.start_time,
                               lambda at, s=state: self._flow_tick(s, at))
        self.inject_schedule(injections)

    # ------------------------------------------------------------------
    # scheduling

    def schedule_call(self, at: int, action: Callable[[int], None]) -> None:
        if at < self.now:
            raise ScheduleError(f"cannot schedule at {at} before now {self.now}")
        heapq.heappush(self._queue, (at, next(self._seq), action))

    def inject_schedule(self, injections: list[Injection]) -> None:
        """Validate and enqueue external events (E1 link toggles, E2 changes)."""
        for inj in injections:
            if isinstance(inj, (LinkDownInjection, LinkUpInjection)):
                if not self.topology.has_link(inj.a, inj.b):
                    raise InjectionError(
                        f"injection references unknown link {inj.a}-{inj.b}")
            elif isinstance(inj, PedChangeInjection):
                self.store.pair(inj.pair_id)  # raises for unknown pairs
            self.log.injections.append(inj)
            self.schedule_call(inj.at, lambda at, i=inj: self._apply_injection(i, at))

    # ------------------------------------------------------------------
    # main loop

    def run_until(self, t_end: int) -> None:
        """Process every event with time <= t_end, then settle leftovers.

        Packets that are neither delivered nor dropped when the horizon
        closes count as dropped; the measurement window ended before they
        arrived.
        """
        while self._queue and self._queue[0][0] <= t_end:
            at, _, action = heapq.heappop(self._queue)
            self.now = at
            action(at)
        self.now = t_end
        self._queue.clear()
        for record in self.log.packets:
            if record.delivered_at is None and record.drop_reason is None:
                record.drop_reason = "end_of_run"

    # ------------------------------------------------------------------
    # controller-facing services

    def forwarding_path(self, key: tuple[SwitchId, SwitchId],
                        now: int) -> tuple[SwitchId, ...] | None:
        entries = self._forwarding.get(key)
        if not entries:
            return None
        for active_at, path in reversed(entries):
            if active_at <= now:
                return path
        return None

    def set_forwarding(self, key: tuple[SwitchId, SwitchId],
                       path: tuple[SwitchId, ...], active_at: int) -> None:
        self._forwarding.setdefault(key, []).append((active_at, tuple(path)))

    def egress_wait(self, a: SwitchId, b: SwitchId, now: int) -> int:
        return max(0, self._egress_free.get((a, b), 0) - now)

    # ------------------------------------------------------------------
    # injections

    def _apply_injection(self, inj: Injection, at: int) -> None:
        if isinstance(inj, LinkDownInjection):
            link = self.topology.link_between(inj.a, inj.b)
            if link.is_up:
                self.topology.set_link_state(inj.a, inj.b, LinkState.DOWN)
                self._last_down[link.key] = at
                self.controller.on_link_state_change(inj.a, inj.b, True, at)
        elif isinstance(inj, LinkUpInjection):
            link = self.topology.link_between(inj.a, inj.b)
            if not link.is_up:
                self.topology.set_link_state(inj.a, inj.b, LinkState.UP)
                self.controller.on_link_state_change(inj.a, inj.b, False, at)
        elif isinstance(inj, PedChangeInjection):
            pair = self.store.pair(inj.pair_id)
            target = (pair.strong if inj.contract_kind is ContractKind.STRONG
                      else pair.weak)
            if inj.new_ped is not None:
                new_ped = inj.new_ped
            else:
                new_ped = max(1, (target.ped * inj.factor_ppm + 500_000)
                              // 1_000_000)
            event = self.store.modify(inj.pair_id, inj.contract_kind,
                                      new_ped, at)
            if event is not None:
                self.controller.on_contract_modified(event, at)

    # ------------------------------------------------------------------
    # packet transport

    def _flow_tick(self, state: _FlowState, at: int) -> None:
        flow = state.flow
        if not state.started:
            state.started = True
            self.controller.on_flow_arrival(flow, at)
        if state.bits_sent + flow.packet_length > flow.total_volume:
            return
        state.bits_sent += flow.packet_length
        self._send_packet(state, at)
        state.next_seq += 1
        if (state.bits_sent + flow.packet_length <= flow.total_volume
                and flow.inter_packet_gap > 0):
            self.schedule_call(at + flow.inter_packet_gap,
                               lambda t, s=state: self._flow_tick(s, t))

    def _send_packet(self, state: _FlowState, at: int) -> None:
        flow = state.flow
        src = self.topology.attachment(flow.src_host)
        dst = self.topology.attachment(flow.dst_host)
        key = (src, dst)
        path = self.forwarding_path(key, at)
        record = PacketRecord(
            flow_id=flow.id, seq=state.next_seq, pair=key,
            covered=key in self._covered_pairs, length=flow.packet_length,
            sent_at=at, path=path)
        self.log.packets.append(record)
        if path is None:
            record.drop_reason = "no_route"
            return
        packet = _Packet(record=record, length=flow.packet_length)
        ingress_at = at + self.config.host_link_delay
        self.schedule_call(ingress_at, lambda t, p=packet: self._start_hop(p, t))

    def _start_hop(self, packet: _Packet, at: int) -> None:
        path = packet.record.path
        if packet.hop >= len(path) - 1:
            self._deliver(packet, at)
            return
        a, b = path[packet.hop], path[packet.hop + 1]
        link = self.topology.link_between(a, b)
        if not link.is_up:
            packet.record.drop_reason = "link_down"
            return
        td = transmission_delay(packet.length, link.capacity_bps)
        free = self._egress_free.get((a, b), 0)
        start = max(at, free)
        wait = start - at
        if wait > self.config.queue_limit:
            packet.record.drop_reason = "queue_overflow"
            return
        self._egress_free[(a, b)] = start + td
        packet.record.queue_wait += wait
        arrive = start + td + link.propagation_delay
        self.schedule_call(
            arrive,
            lambda t, p=packet, lk=link.key, e=at: self._hop_arrival(p, lk, e, t))

    def _hop_arrival(self, packet: _Packet,
                     link_key: tuple[SwitchId, SwitchId], entered: int,
                     at: int) -> None:
        went_down = self._last_down.get(link_key)
        if went_down is not None and entered <= went_down < at:
            packet.record.drop_reason = "link_down"
            return
        if not self.topology.link_between(*link_key).is_up:
            packet.record.drop_reason = "link_down"
            return
        packet.hop += 1
        self._start_hop(packet, at)

    def _deliver(self, packet: _Packet, at: int) -> None:
        record = packet.record
        record.delivered_at = at + self.config.host_link_delay
        record.actual_delay = record.delivered_at - record.sent_at
