import pytest

from sdnsim.contracts import ContractKind, FaultCause, create_contract_pair
from sdnsim.core import (
    ControlChannel,
    Flow,
    MICROSECOND,
    MILLISECOND,
    SECOND,
    SimConfig,
    build_topology,
)
from sdnsim.kernel import Kernel, LinkDownInjection, LinkUpInjection, PedChangeInjection
from sdnsim.resilience import (
    EventKind,
    ResponseAction,
    RestorationOutcome,
    VARIANTS,
    variant_by_name,
)

from conftest import ring_with_chords_spec

MS = MILLISECOND
US = MICROSECOND

# Three edge-disjoint 3-hop routes join S1 and S8 on the ring-with-chords
# topology; the lexicographic tie-break picks them in this order.
ROUTE_0 = ("S1", "S10", "S9", "S8")
ROUTE_1 = ("S1", "S2", "S3", "S8")
ROUTE_2 = ("S1", "S6", "S7", "S8")
BASE_ED = 3 * (MS + 12 * US)  # 3.036 ms over three 1 Gbps hops

KILLER_BREAKS = [  # one link from each 3-hop route, in route order
    ("S9", "S10"), ("S2", "S3"), ("S6", "S7"),
]


def ring_kernel(variant, strong=3_200_000, weak=12 * MS, injections=(),
                t_end=60 * SECOND, gap=100 * MS, control_latency=250 * US):
    topology = build_topology(ring_with_chords_spec())
    flow = Flow(id="F1", src_host="H1", dst_host="H8", packet_length=12_000,
                total_volume=10**12, start_time=SECOND, inter_packet_gap=gap)
    pair = create_contract_pair("C1", "S1", "S8", strong, weak)
    kernel = Kernel(
        topology=topology, flows=[flow], contract_pairs=[pair],
        variant=variant_by_name(variant), config=SimConfig(),
        control=ControlChannel(default_c2s=control_latency,
                               default_s2c=control_latency))
    kernel.setup(t_end, list(injections))
    kernel.run_until(t_end)
    return kernel


class TestVariantTable:
    def test_flag_rows(self):
        rows = {name: (v.proactive, v.reactive, v.strong_contracts,
                       v.weak_contracts) for name, v in VARIANTS.items()}
        assert rows == {
            "SDN-woRM": (False, False, False, False),
            "SDN-sRM": (True, True, True, False),
            "SDN-pRM": (True, False, True, True),
            "SDN-RM": (True, True, True, True),
        }

    def test_aliases(self):
        assert variant_by_name("RM").name == "SDN-RM"
        assert variant_by_name("SDN-pRM").name == "SDN-pRM"
        with pytest.raises(ValueError):
            variant_by_name("nope")


class TestReactiveLinkFailure:
    def test_notification_delivered_after_one_way_latency(self):
        kernel = ring_kernel("SDN-RM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        [notification] = [n for n in kernel.log.notifications
                          if n.kind is EventKind.E1_LINK_FAILURE]
        assert notification.occurred_at == 23 * SECOND
        assert notification.delivered_at == 23 * SECOND + 250 * US

    def test_restoration_record_phases(self):
        kernel = ring_kernel("SDN-RM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        [record] = kernel.log.restorations
        assert record.cause is FaultCause.LINK_FAILURE
        assert record.detection_delay == 250 * US
        assert record.recalculation_delay == 100 * US
        assert record.reassignment_delay == 250 * US
        assert record.total == 600 * US
        assert record.outcome is RestorationOutcome.RS1_APPLIED

    def test_reroute_adopts_next_disjoint_route(self):
        kernel = ring_kernel("SDN-RM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        installed = kernel.forwarding_path(("S1", "S8"), 60 * SECOND)
        assert installed == ROUTE_1
        # Only the packet launched at the failure instant is lost (plus the
        # final packet still in flight when the measurement window closes).
        dropped = [p for p in kernel.log.packets
                   if p.drop_reason not in (None, "end_of_run")]
        assert len(dropped) <= 1

    def test_down_and_up_within_latency_takes_no_action(self):
        kernel = ring_kernel(
            "SDN-RM",
            injections=[LinkDownInjection(23 * SECOND, "S9", "S10"),
                        LinkUpInjection(23 * SECOND + 100 * US, "S9", "S10")])
        assert kernel.log.restorations == []
        assert kernel.log.faults == []

    def test_break_off_path_causes_no_fault(self):
        kernel = ring_kernel("SDN-RM",
                             injections=[LinkDownInjection(23 * SECOND, "S4", "S5")])
        [notification] = [n for n in kernel.log.notifications
                          if n.kind is EventKind.E1_LINK_FAILURE]
        assert notification.delivered_at > notification.occurred_at
        assert kernel.log.faults == []


class TestProactiveOnly:
    def test_fault_detected_at_next_cycle_boundary(self):
        kernel = ring_kernel("SDN-pRM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        [record] = kernel.log.restorations
        assert record.at == 30 * SECOND
        assert record.cause is FaultCause.ESTIMATION_CYCLE
        assert record.detection_delay == 7 * SECOND

    def test_no_decisions_between_boundaries(self):
        kernel = ring_kernel("SDN-pRM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        interval = kernel.config.estimation_interval
        for decision in kernel.log.decisions:
            assert decision.at % interval == 0

    def test_detection_never_exceeds_interval(self):
        for t_break in (21 * SECOND, 29 * SECOND + 999_900_000):
            kernel = ring_kernel(
                "SDN-pRM", injections=[LinkDownInjection(t_break, "S9", "S10")])
            assert kernel.log.restorations
            for record in kernel.log.restorations:
                assert 0 <= record.detection_delay <= kernel.config.estimation_interval

    def test_reactive_dominance_over_proactive(self):
        injections = [LinkDownInjection(23 * SECOND, "S9", "S10")]
        reactive = ring_kernel("SDN-RM", injections=injections)
        proactive = ring_kernel("SDN-pRM", injections=injections)
        d_reactive = reactive.log.restorations[0].detection_delay
        d_proactive = proactive.log.restorations[0].detection_delay
        assert d_reactive <= d_proactive


class TestWithoutResilience:
    def test_no_records_and_no_recovery(self):
        kernel = ring_kernel("SDN-woRM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        assert kernel.log.restorations == []
        assert kernel.log.faults == []
        assert kernel.log.decisions == []
        late = [p for p in kernel.log.packets if p.sent_at > 24 * SECOND]
        assert late and all(p.drop_reason is not None for p in late)


class TestControlLogicDecisions:
    def test_strong_satisfiable_gives_rs1(self):
        kernel = ring_kernel("SDN-RM",
                             injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        [decision] = kernel.log.decisions
        assert decision.action is ResponseAction.RS1

    def test_only_weak_satisfiable_gives_rs1_rs2(self):
        injections = [LinkDownInjection((21 + i) * SECOND, a, b)
                      for i, (a, b) in enumerate(KILLER_BREAKS)]
        kernel = ring_kernel("SDN-RM", injections=injections)
        last = kernel.log.decisions[-1]
        assert last.action is ResponseAction.RS1_RS2
        assert last.best_ed == 5 * (MS + 12 * US)  # forced onto a 5-hop detour
        assert kernel.store.pair("C1").active_kind is ContractKind.WEAK
        # Traffic keeps flowing under the weak contract.
        late = [p for p in kernel.log.packets
                if 24 * SECOND < p.sent_at < 59 * SECOND]
        assert late and all(p.delivered for p in late)

    def test_nothing_satisfiable_gives_rs3_and_keeps_rules(self):
        injections = [LinkDownInjection((21 + i) * SECOND, a, b)
                      for i, (a, b) in enumerate(KILLER_BREAKS)]
        kernel = ring_kernel("SDN-RM", weak=4 * MS, injections=injections)
        last = kernel.log.decisions[-1]
        assert last.action is ResponseAction.RS3
        [warning] = kernel.log.warnings[:1]
        assert warning.best_ed == 5 * (MS + 12 * US)
        # Forwarding still points at the broken route, so traffic dies.
        installed = kernel.forwarding_path(("S1", "S8"), 60 * SECOND)
        assert installed == ROUTE_2
        late = [p for p in kernel.log.packets if p.sent_at > 24 * SECOND]
        assert late and all(p.drop_reason is not None for p in late)

    def test_partition_warns_with_no_path(self):
        # All three links into S8 go down: no path can exist at any cost.
        injections = [LinkDownInjection(21 * SECOND, "S9", "S8"),
                      LinkDownInjection(22 * SECOND, "S3", "S8"),
                      LinkDownInjection(23 * SECOND, "S7", "S8")]
        kernel = ring_kernel("SDN-RM", injections=injections,
                             t_end=40 * SECOND)
        assert kernel.log.warnings
        assert kernel.log.warnings[0].best_ed is None
        assert kernel.log.decisions[-1].action is ResponseAction.RS3

    def test_warning_repeats_each_cycle_while_unsatisfied(self):
        injections = [LinkDownInjection((21 + i) * SECOND, a, b)
                      for i, (a, b) in enumerate(KILLER_BREAKS)]
        kernel = ring_kernel("SDN-RM", weak=4 * MS, injections=injections,
                             t_end=60 * SECOND)
        # One reactive warning at the third break, then one per boundary
        # (30, 40, 50, 60 s) while the condition persists.
        assert len(kernel.log.warnings) == 5

    def test_strong_only_variant_never_emits_rs2(self):
        injections = [LinkDownInjection((21 + i) * SECOND, a, b)
                      for i, (a, b) in enumerate(KILLER_BREAKS)]
        kernel = ring_kernel("SDN-sRM", injections=injections)
        assert all(d.action is not ResponseAction.RS1_RS2
                   for d in kernel.log.decisions)
        assert kernel.store.pair("C1").active_kind is ContractKind.STRONG
        # The third break leaves only strong-violating detours: warn-only.
        late = [p for p in kernel.log.packets if p.sent_at > 24 * SECOND]
        assert late and all(p.drop_reason is not None for p in late)


class TestContractChangeMonitor:
    def test_tightening_handled_immediately_by_reactive(self):
        kernel = ring_kernel(
            "SDN-RM",
            injections=[PedChangeInjection(35 * SECOND, "C1", new_ped=2 * MS)])
        [notification] = [n for n in kernel.log.notifications
                          if n.kind is EventKind.E2_CONTRACT_CHANGE]
        assert notification.delivered_at == notification.occurred_at == 35 * SECOND
        [record] = kernel.log.restorations
        assert record.at == 35 * SECOND
        assert record.cause is FaultCause.CONTRACT_CHANGE
        assert record.detection_delay == 0
        assert record.reassignment_delay == 0  # same path, weak fallback
        assert record.total == 100 * US
        assert record.outcome is RestorationOutcome.RS2_APPLIED
        assert kernel.store.pair("C1").active_kind is ContractKind.WEAK

    def test_tightening_deferred_by_proactive_only(self):
        kernel = ring_kernel(
            "SDN-pRM",
            injections=[PedChangeInjection(35 * SECOND, "C1", new_ped=2 * MS)])
        [record] = kernel.log.restorations
        assert record.at == 40 * SECOND
        assert record.detection_delay == 5 * SECOND

    def test_relaxation_causes_no_fault(self):
        kernel = ring_kernel(
            "SDN-RM",
            injections=[PedChangeInjection(35 * SECOND, "C1", new_ped=8 * MS)])
        assert [n.kind for n in kernel.log.notifications] == [
            EventKind.E2_CONTRACT_CHANGE]
        assert kernel.log.faults == []

    def test_change_on_inactive_weak_not_evaluated(self):
        kernel = ring_kernel(
            "SDN-RM",
            injections=[PedChangeInjection(35 * SECOND, "C1", new_ped=13 * MS,
                                           contract_kind=ContractKind.WEAK)])
        assert kernel.log.faults == []
        assert kernel.store.pair("C1").weak.ped == 13 * MS

    def test_scaling_factor_applies_to_current_ped(self):
        kernel = ring_kernel(
            "SDN-RM",
            injections=[PedChangeInjection(35 * SECOND, "C1", factor_ppm=500_000),
                        PedChangeInjection(45 * SECOND, "C1", factor_ppm=500_000)])
        assert kernel.store.pair("C1").strong.ped == 800_000  # 3.2 ms / 4


class TestRecoveryAndReinstatement:
    def test_weak_pair_reinstates_strong_after_repair(self):
        injections = [LinkDownInjection((21 + i) * SECOND, a, b)
                      for i, (a, b) in enumerate(KILLER_BREAKS)]
        injections.append(LinkUpInjection(31 * SECOND, "S9", "S10"))
        kernel = ring_kernel("SDN-RM", injections=injections,
                             t_end=60 * SECOND)
        pair = kernel.store.pair("C1")
        assert pair.active_kind is ContractKind.STRONG
        assert kernel.forwarding_path(("S1", "S8"), 60 * SECOND) == ROUTE_0
        # Reinstatement trails re-adoption by one cycle: weak was still
        # active at 40 s, strong again from 50 s.
        assert kernel.store.active_ped_at("C1", 40 * SECOND + 1) == 12 * MS
        assert kernel.store.active_ped_at("C1", 50 * SECOND + 1) == 3_200_000

    def test_parallel_reassignment_uses_slowest_switch(self):
        kernel = ring_kernel(
            "SDN-RM", control_latency=500 * US,
            injections=[LinkDownInjection(23 * SECOND, "S9", "S10")])
        [record] = kernel.log.restorations
        assert record.detection_delay == 500 * US
        assert record.recalculation_delay == 100 * US
        assert record.reassignment_delay == 500 * US
        assert record.total == 1_100 * US  # 1.1 ms


class TestAssumptionAudit:
    def test_events_annotate_assumption_windows(self):
        kernel = ring_kernel(
            "SDN-RM",
            injections=[LinkDownInjection(23 * SECOND, "S9", "S10"),
                        PedChangeInjection(35 * SECOND, "C1", new_ped=2 * MS)])
        notes = kernel.log.assumption_notes
        assert [n.kind for n in notes] == [EventKind.E1_LINK_FAILURE,
                                           EventKind.E2_CONTRACT_CHANGE]
        # Each window closes at the next estimation-cycle boundary.
        assert notes[0].occurred_at == 23 * SECOND
        assert notes[0].window_end == 30 * SECOND
        assert notes[1].window_end == 40 * SECOND


class TestPhaseSum:
    def test_every_record_decomposes_exactly(self):
        injections = [LinkDownInjection((21 + i) * SECOND, a, b)
                      for i, (a, b) in enumerate(KILLER_BREAKS)]
        injections.append(PedChangeInjection(45 * SECOND, "C1", new_ped=MS))
        for variant in VARIANTS:
            kernel = ring_kernel(variant, injections=list(injections))
            for record in kernel.log.restorations:
                assert record.total == (record.detection_delay
                                        + record.recalculation_delay
                                        + record.reassignment_delay)
