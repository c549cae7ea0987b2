"""Resilience management: event monitors, control logic and responses.

Four controller configurations differ in which machinery is enabled:

=========== ========= ======== ========= =========
mechanism   proactive reactive strong    weak
=========== ========= ======== ========= =========
SDN-woRM    no        no       no        no
SDN-sRM     yes       yes      yes       no
SDN-pRM     yes       no       yes       yes
SDN-RM      yes       yes      yes       yes
=========== ========= ======== ========= =========

Monitors turn link failures (E1) and runtime requirement changes (E2) into
notifications.  Reactive configurations act on a notification as soon as it
reaches the controller; proactive-only ones act at the next estimation
cycle; without resilience management nothing acts at all.  The control
logic maps a reported fault to a response: reroute (RS1), additionally fall
back to the weak contract (RS2), or issue a warning when even the weak
requirement is out of reach (RS3).  A warning does not touch forwarding
state; rules persist as last installed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .contracts import (
    ContractChangeEvent,
    ContractKind,
    ContractStore,
    FaultCause,
    FaultReport,
    observe,
)
from .core import (
    ControlChannel,
    Flow,
    SwitchId,
    Topology,
    UNBOUNDED_DELAY,
)
from .delay_estimation import (
    CostMatrix,
    MissingCostError,
    estimate_path_delay,
    run_estimation_cycle,
)
from .routing import NoPathError, RouteResult, find_path

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MechanismVariant:
    name: str
    proactive: bool
    reactive: bool
    strong_contracts: bool
    weak_contracts: bool


VARIANTS: dict[str, MechanismVariant] = {
    "SDN-woRM": MechanismVariant("SDN-woRM", False, False, False, False),
    "SDN-sRM": MechanismVariant("SDN-sRM", True, True, True, False),
    "SDN-pRM": MechanismVariant("SDN-pRM", True, False, True, True),
    "SDN-RM": MechanismVariant("SDN-RM", True, True, True, True),
}

VARIANT_ALIASES = {
    "woRM": "SDN-woRM", "sRM": "SDN-sRM", "pRM": "SDN-pRM", "RM": "SDN-RM",
}


def variant_by_name(name: str) -> MechanismVariant:
    full = VARIANT_ALIASES.get(name, name)
    try:
        return VARIANTS[full]
    except KeyError:
        raise ValueError(f"unknown mechanism variant {name!r}") from None


class EventKind(Enum):
    E1_LINK_FAILURE = "E1"
    E2_CONTRACT_CHANGE = "E2"


@dataclass(frozen=True)
class EventNotification:
    kind: EventKind
    subject: str  # "a-b" for links, pair id for contracts
    occurred_at: int
    delivered_at: int

    def __post_init__(self) -> None:
        if self.delivered_at < self.occurred_at:
            raise ValueError("notification delivered before it occurred")


class ResponseAction(Enum):
    RS1 = "rs1"            # path recalculation and reassignment
    RS1_RS2 = "rs1+rs2"    # reroute and switch to the weak contract
    RS3 = "rs3"            # warning only


class RestorationOutcome(Enum):
    RS1_APPLIED = "rs1_applied"
    RS2_APPLIED = "rs2_applied"
    RS3_WARNED = "rs3_warned"


@dataclass(frozen=True)
class Decision:
    fault: FaultReport
    action: ResponseAction
    route: RouteResult | None  # best available path, None when unreachable


@dataclass(frozen=True)
class RestorationRecord:
    pair_id: str
    cause: FaultCause
    at: int
    detection_delay: int
    recalculation_delay: int
    reassignment_delay: int
    total: int
    outcome: RestorationOutcome

    def __post_init__(self) -> None:
        expected = (self.detection_delay + self.recalculation_delay
                    + self.reassignment_delay)
        if self.total != expected:
            raise ValueError("restoration total does not equal its phases")


@dataclass(frozen=True)
class WarningRecord:
    pair_id: str
    at: int
    best_ed: int | None  # None when no path exists at all
    required_ped: int


@dataclass(frozen=True)
class RouteRecord:
    """One path computation, with the per-link costs it summed."""

    at: int
    src: SwitchId
    dst: SwitchId
    path: tuple[SwitchId, ...]
    ed: int
    link_costs: tuple[int, ...]
    purpose: str


@dataclass(frozen=True)
class AssumptionNote:
    """Window in which a contract assumption was violated by an event."""

    kind: EventKind
    subject: str
    occurred_at: int
    window_end: int


@dataclass(frozen=True)
class DecisionRecord:
    at: int
    pair_id: str
    action: ResponseAction
    cause: FaultCause
    best_ed: int | None


class ResilienceManager:
    """Controller-resident fault handling around the delay estimator.

    The kernel drives this object: it reports link state changes and
    contract modifications as they are injected, invokes the estimation
    cycle at every interval boundary, and asks it to place arriving flows.
    The manager decides, the kernel owns the forwarding state.
    """

    def __init__(self, variant: MechanismVariant, topology: Topology,
                 control: ControlChannel, store: ContractStore,
                 kernel, config, log) -> None:
        self.variant = variant
        self.topology = topology
        self.control = control
        self.store = store
        self.kernel = kernel
        self.config = config
        self.log = log
        self.matrix = CostMatrix()
        self.cycle_index = -1
        self.routed_pairs: set[tuple[SwitchId, SwitchId]] = set()
        # Events since the last cycle boundary, for detection-delay
        # attribution when a proactive-only configuration finds the fault.
        self._pending: list[tuple[int, EventKind, tuple]] = []

    # ------------------------------------------------------------------
    # estimation cycle

    def on_cycle_boundary(self, now: int) -> None:
        self.cycle_index += 1
        self.matrix, records = run_estimation_cycle(
            self.topology, self.control, now,
            probe_length_bits=self.config.probe_length_bits,
            egress_wait=self.kernel.egress_wait,
            raw_mode=self.config.eq1_raw_mode,
            cycle_index=self.cycle_index,
        )
        self.log.estimation.extend(records)
        if self.variant.proactive:
            self._proactive_cycle(now)
        self._pending.clear()

    def _proactive_cycle(self, now: int) -> None:
        """Evaluate each placed pair's contract, then re-optimize.

        Contract pairs that have no flows yet carry no traffic to defend
        and are left alone until a flow arrives.
        """
        for key in sorted(self.routed_pairs):
            pair = self.store.pair_for(*key)
            ed = self._current_ed(key, now)
            if pair is None:
                self._maybe_adopt(key, now, required_ped=None)
                continue
            if (self.variant.weak_contracts
                    and pair.active_kind is ContractKind.WEAK
                    and ed <= pair.strong.ped):
                # The strong guarantee holds again: reinstate it.
                self.store.switch_active(pair.id, ContractKind.STRONG, now)
            fault = observe(pair.active, ed, now, FaultCause.ESTIMATION_CYCLE)
            if fault is not None:
                self.log.faults.append(fault)
                occurred = self._attribute(key, now)
                self._respond(fault, occurred_at=occurred, now=now)
            else:
                self._maybe_adopt(key, now, required_ped=pair.active.ped)

    def _current_ed(self, key: tuple[SwitchId, SwitchId], now: int) -> int:
        path = self.kernel.forwarding_path(key, now)
        if path is None:
            return UNBOUNDED_DELAY
        for a, b in zip(path, path[1:]):
            if not self.topology.link_between(a, b).is_up:
                return UNBOUNDED_DELAY
        try:
            return estimate_path_delay(list(path), self.matrix)
        except MissingCostError:
            return UNBOUNDED_DELAY

    def _maybe_adopt(self, key: tuple[SwitchId, SwitchId], now: int,
                     required_ped: int | None) -> None:
        """Adopt a better path for on-going flows, outside fault handling.

        A replacement is only adopted when it improves on the current path
        and, for contract-covered pairs, satisfies the active requirement;
        installing a still-violating path would churn rules for nothing.
        """
        current_ed = self._current_ed(key, now)
        route = self._compute_route(key, now, purpose="reoptimize")
        if route is None:
            return
        if required_ped is not None and route.ed > required_ped:
            return
        current = self.kernel.forwarding_path(key, now)
        if current is not None and tuple(current) == route.path:
            return
        if route.ed >= current_ed:
            return
        reassignment = self._reassignment_delay(route.path)
        self.kernel.set_forwarding(key, route.path, active_at=now + reassignment)

    # ------------------------------------------------------------------
    # monitors

    def on_link_state_change(self, a: SwitchId, b: SwitchId, is_down: bool,
                             now: int) -> None:
        """Link failure monitor (E1), fed by switch port status."""
        if not is_down:
            return  # recoveries surface through the next estimation cycle
        subject = f"{min(a, b)}-{max(a, b)}"
        latency = min(self.control.s2c(a), self.control.s2c(b))
        notification = EventNotification(
            kind=EventKind.E1_LINK_FAILURE, subject=subject,
            occurred_at=now, delivered_at=now + latency)
        self.log.notifications.append(notification)
        self._note_assumption_window(notification)
        if self.variant.reactive:
            self.kernel.schedule_call(
                notification.delivered_at,
                lambda at: self._on_e1_delivered(a, b, now, at))
        elif self.variant.proactive:
            # Deferred to the next cycle; remembered for detection-delay
            # attribution there.
            self._pending.append((now, EventKind.E1_LINK_FAILURE, (a, b)))

    def _on_e1_delivered(self, a: SwitchId, b: SwitchId, occurred_at: int,
                         now: int) -> None:
        link = self.topology.link_between(a, b)
        if link.is_up:
            return  # already recovered; topology is healthy
        for key in sorted(self.routed_pairs):
            if not self._path_uses_link(key, a, b, now):
                continue
            pair = self.store.pair_for(*key)
            if pair is None:
                continue  # no guarantee to defend; next cycle re-optimizes
            fault = FaultReport(
                pair_id=pair.id, observed_ed=UNBOUNDED_DELAY,
                ped=pair.active.ped, detected_at=now,
                cause=FaultCause.LINK_FAILURE)
            self.log.faults.append(fault)
            self._respond(fault, occurred_at=occurred_at, now=now)

    def on_contract_modified(self, event: ContractChangeEvent, now: int) -> None:
        """Contract modification monitor (E2); in-controller, zero latency."""
        notification = EventNotification(
            kind=EventKind.E2_CONTRACT_CHANGE, subject=event.pair_id,
            occurred_at=now, delivered_at=now)
        self.log.notifications.append(notification)
        self._note_assumption_window(notification)
        pair = self.store.pair(event.pair_id)
        key = (pair.src, pair.dst)
        if not self.variant.reactive:
            if self.variant.proactive:
                self._pending.append((now, EventKind.E2_CONTRACT_CHANGE, key))
            return
        if key not in self.routed_pairs:
            return
        ed = self._current_ed(key, now)
        fault = observe(pair.active, ed, now, FaultCause.CONTRACT_CHANGE)
        if fault is not None:
            self.log.faults.append(fault)
            self._respond(fault, occurred_at=now, now=now)

    def _note_assumption_window(self, notification: EventNotification) -> None:
        interval = self.config.estimation_interval
        next_boundary = ((notification.occurred_at // interval) + 1) * interval
        self.log.assumption_notes.append(AssumptionNote(
            kind=notification.kind, subject=notification.subject,
            occurred_at=notification.occurred_at, window_end=next_boundary))

    # ------------------------------------------------------------------
    # flow placement

    def on_flow_arrival(self, flow: Flow, now: int) -> None:
        src = self.topology.attachment(flow.src_host)
        dst = self.topology.attachment(flow.dst_host)
        key = (src, dst)
        self.routed_pairs.add(key)
        route = self._compute_route(key, now, purpose="flow_arrival")
        if route is None:
            logger.info("flow %s: no path from %s to %s", flow.id, src, dst)
            return
        current = self.kernel.forwarding_path(key, now)
        if current is not None and tuple(current) == route.path:
            return
        self.kernel.set_forwarding(key, route.path, active_at=now)

    # ------------------------------------------------------------------
    # control logic and response strategies

    def control_logic(self, fault: FaultReport, now: int) -> Decision:
        """Map a fault to a response: reroute, weaken, or warn."""
        pair = self.store.pair(fault.pair_id)
        route = self._compute_route((pair.src, pair.dst), now,
                                    purpose="fault_response")
        if route is not None and route.ed <= pair.strong.ped:
            action = ResponseAction.RS1
        elif (route is not None and self.variant.weak_contracts
                and route.ed <= pair.weak.ped):
            action = ResponseAction.RS1_RS2
        else:
            action = ResponseAction.RS3
        return Decision(fault=fault, action=action, route=route)

    def _respond(self, fault: FaultReport, occurred_at: int, now: int) -> None:
        decision = self.control_logic(fault, now)
        self.log.decisions.append(DecisionRecord(
            at=now, pair_id=fault.pair_id, action=decision.action,
            cause=fault.cause,
            best_ed=decision.route.ed if decision.route else None))
        pair = self.store.pair(fault.pair_id)
        key = (pair.src, pair.dst)
        detection = now - occurred_at
        recalculation = self.config.recalc_cost
        reassignment = 0

        if decision.action is ResponseAction.RS3:
            self.execute_rs3(fault, decision, now)
            outcome = RestorationOutcome.RS3_WARNED
        else:
            reassignment = self.execute_rs1(key, decision.route.path, now)
            outcome = RestorationOutcome.RS1_APPLIED
            if decision.action is ResponseAction.RS1_RS2:
                self.execute_rs2(pair.id, now)
                outcome = RestorationOutcome.RS2_APPLIED

        self.log.restorations.append(RestorationRecord(
            pair_id=fault.pair_id, cause=fault.cause, at=now,
            detection_delay=detection, recalculation_delay=recalculation,
            reassignment_delay=reassignment,
            total=detection + recalculation + reassignment,
            outcome=outcome))

    def execute_rs1(self, key: tuple[SwitchId, SwitchId],
                    path: tuple[SwitchId, ...], now: int) -> int:
        """Install a recalculated path; returns the reassignment delay.

        Rules are pushed to all path switches in parallel, so reassignment
        is the slowest single installation.  Re-installing the already
        active path is free.
        """
        current = self.kernel.forwarding_path(key, now)
        if current is not None and tuple(current) == tuple(path):
            return 0
        reassignment = self._reassignment_delay(path)
        self.kernel.set_forwarding(key, tuple(path), active_at=now + reassignment)
        return reassignment

    def execute_rs2(self, pair_id: str, now: int) -> None:
        """Switch a pair to its weak contract; no-op when already weak."""
        self.store.switch_active(pair_id, ContractKind.WEAK, now)

    def execute_rs3(self, fault: FaultReport, decision: Decision,
                    now: int) -> WarningRecord:
        """Issue a warning; forwarding state is deliberately left alone."""
        pair = self.store.pair(fault.pair_id)
        warning = WarningRecord(
            pair_id=fault.pair_id, at=now,
            best_ed=decision.route.ed if decision.route else None,
            required_ped=pair.active.ped)
        self.log.warnings.append(warning)
        return warning

    # ------------------------------------------------------------------
    # helpers

    def _compute_route(self, key: tuple[SwitchId, SwitchId], now: int,
                       purpose: str) -> RouteResult | None:
        try:
            route = find_path(self.topology, self.matrix, key[0], key[1])
        except NoPathError:
            return None
        costs = tuple(self.matrix.cost(a, b)
                      for a, b in zip(route.path, route.path[1:]))
        self.log.routes.append(RouteRecord(
            at=now, src=key[0], dst=key[1], path=route.path, ed=route.ed,
            link_costs=costs, purpose=purpose))
        return route

    def _reassignment_delay(self, path: tuple[SwitchId, ...]) -> int:
        return max(self.control.c2s(s) for s in path)

    def _path_uses_link(self, key: tuple[SwitchId, SwitchId], a: SwitchId,
                        b: SwitchId, now: int) -> bool:
        path = self.kernel.forwarding_path(key, now)
        if path is None:
            return False
        hops = set(zip(path, path[1:]))
        return (a, b) in hops or (b, a) in hops

    def _attribute(self, key: tuple[SwitchId, SwitchId], now: int) -> int:
        """Earliest un-consumed event that plausibly caused a pair's fault.

        Used for the detection-delay phase when a proactive evaluation is
        what finds the fault; with no matching pending event the fault is
        considered detected the moment it arose (zero detection delay).
        """
        for occurred_at, kind, detail in self._pending:
            if kind is EventKind.E2_CONTRACT_CHANGE and tuple(detail) == key:
                return occurred_at
            if (kind is EventKind.E1_LINK_FAILURE
                    and self._path_uses_link(key, detail[0], detail[1], now)):
                return occurred_at
        return now
