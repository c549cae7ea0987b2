"""Link-layer delay estimation from discovery-probe timestamps.

The controller stamps a discovery frame when it leaves for the first switch
and again when the far switch reports it back, does the same in the reverse
direction, and measures the echo round-trip to each switch.  Subtracting the
two echo RTTs from the two probe traversals leaves twice the one-way link
delay, so halving the residual recovers it without any clock on the switches.

Per-link cost adds the sending switch's serialization delay for a reference
packet, and a path's estimated end-to-end delay is the sum of its directed
link costs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from .core import (
    ControlChannel,
    SwitchId,
    Topology,
    transmission_delay,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeObservation:
    """Timestamps collected while probing one link in both directions.

    Times are controller-local; the forward probe travels controller ->
    near switch -> far switch -> controller, the reverse probe the other
    way around, and the two RTTs are echo round trips to each switch.
    """

    near: SwitchId
    far: SwitchId
    lldp_send_time: int
    lldp_return_time: int
    reverse_lldp_send_time: int
    reverse_lldp_return_time: int
    rtt_near: int
    rtt_far: int

    def __post_init__(self) -> None:
        if self.lldp_return_time < self.lldp_send_time:
            raise ValueError("forward probe returned before it was sent")
        if self.reverse_lldp_return_time < self.reverse_lldp_send_time:
            raise ValueError("reverse probe returned before it was sent")
        if self.rtt_near < 0 or self.rtt_far < 0:
            raise ValueError("negative echo round-trip time")


def estimate_link_delay(obs: ProbeObservation, raw_mode: bool = False) -> int:
    """One-way link delay from a probe observation, clamped at zero.

    The residual after removing both echo RTTs covers the link twice, so the
    default returns half of it.  raw_mode returns the undivided residual for
    fidelity experiments.  Negative residuals (measurement noise) clamp to
    zero with a logged warning.
    """
    forward = obs.lldp_return_time - obs.lldp_send_time
    reverse = obs.reverse_lldp_return_time - obs.reverse_lldp_send_time
    residual = forward + reverse - obs.rtt_near - obs.rtt_far
    if residual < 0:
        logger.warning(
            "probe %s-%s produced negative delay residual %d ns; clamping to 0",
            obs.near, obs.far, residual,
        )
        return 0
    if raw_mode:
        return residual
    return residual // 2


def link_cost(td_sender: int, link_delay: int) -> int:
    """Cost of a directed link: sender transmission delay plus link delay."""
    if td_sender < 0 or link_delay < 0:
        raise ValueError("delays must be non-negative")
    return td_sender + link_delay


class MissingCostError(LookupError):
    """A path references a directed link absent from the cost matrix."""


@dataclass(frozen=True)
class CostEntry:
    link_delay: int
    transmission_delay: int
    cost: int
    last_updated: int


class CostMatrix:
    """Directed link costs as last refreshed by the estimation cycle.

    Entries exist only for links that were Up when the cycle ran; a missing
    entry therefore means "do not route here with this matrix".
    """

    def __init__(self) -> None:
        self._entries: dict[tuple[SwitchId, SwitchId], CostEntry] = {}

    def set_entry(self, src: SwitchId, dst: SwitchId, link_delay: int,
                  td: int, now: int) -> CostEntry:
        entry = CostEntry(link_delay, td, link_cost(td, link_delay), now)
        self._entries[(src, dst)] = entry
        return entry

    def entry(self, src: SwitchId, dst: SwitchId) -> CostEntry:
        try:
            return self._entries[(src, dst)]
        except KeyError:
            raise MissingCostError(f"no cost entry for {src}->{dst}") from None

    def has(self, src: SwitchId, dst: SwitchId) -> bool:
        return (src, dst) in self._entries

    def cost(self, src: SwitchId, dst: SwitchId) -> int:
        return self.entry(src, dst).cost

    def items(self):
        return self._entries.items()

    def __len__(self) -> int:
        return len(self._entries)


def estimate_path_delay(path: list[SwitchId], costs: CostMatrix) -> int:
    """Sum of directed link costs along a path; 0 for a single-switch path.

    Raises MissingCostError when the matrix has no entry for a hop, which
    happens after a topology change that the matrix has not caught up with.
    """
    total = 0
    for a, b in zip(path, path[1:]):
        total += costs.entry(a, b).cost
    return total


@dataclass(frozen=True)
class EstimationRecord:
    """One refreshed directed-link entry, for the structured run log."""

    cycle: int
    src: SwitchId
    dst: SwitchId
    link_delay: int
    transmission_delay: int
    cost: int
    at: int
    noise_clamped: bool = False


def run_estimation_cycle(
    topology: Topology,
    control: ControlChannel,
    now: int,
    *,
    probe_length_bits: int = 12_000,
    egress_wait: Callable[[SwitchId, SwitchId, int], int] | None = None,
    raw_mode: bool = False,
    cycle_index: int = 0,
) -> tuple[CostMatrix, list[EstimationRecord]]:
    """Probe every Up link and return a freshly built cost matrix.

    Probes ride the links as zero-size control frames: they wait behind any
    queued data traffic on the egress (egress_wait, in ns) and then cross in
    one propagation delay, so on an idle network the estimate equals the
    configured link delay exactly.  Down links get no entry.  The sender
    transmission delay uses the probe reference length over the egress link
    capacity.
    """
    matrix = CostMatrix()
    records: list[EstimationRecord] = []
    wait = egress_wait or (lambda a, b, t: 0)

    for link in topology.links():
        if not link.is_up:
            continue
        near, far = link.key
        forward_travel = wait(near, far, now) + link.propagation_delay
        reverse_travel = wait(far, near, now) + link.propagation_delay
        obs = ProbeObservation(
            near=near,
            far=far,
            lldp_send_time=now,
            lldp_return_time=now + control.c2s(near) + forward_travel + control.s2c(far),
            reverse_lldp_send_time=now,
            reverse_lldp_return_time=now + control.c2s(far) + reverse_travel + control.s2c(near),
            rtt_near=control.echo_rtt(near),
            rtt_far=control.echo_rtt(far),
        )
        residual = forward_travel + reverse_travel  # echo RTTs cancel exactly
        clamped = residual < 0
        estimated = estimate_link_delay(obs, raw_mode=raw_mode)
        td = transmission_delay(probe_length_bits, link.capacity_bps)
        for src, dst in ((near, far), (far, near)):
            entry = matrix.set_entry(src, dst, estimated, td, now)
            records.append(EstimationRecord(
                cycle=cycle_index, src=src, dst=dst,
                link_delay=entry.link_delay,
                transmission_delay=entry.transmission_delay,
                cost=entry.cost, at=now, noise_clamped=clamped,
            ))
    return matrix, records
