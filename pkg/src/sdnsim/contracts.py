"""Delay contracts, their strong/weak pairing and the observers over them.

A contract guarantees that the estimated end-to-end delay between two
switches stays at or below a required bound (the ped).  Contracts come in
pairs: the strong contract carries the nominal requirement, the weak one a
relaxed fallback used to keep traffic flowing when the strong bound cannot
be met.  Exactly one member of a pair is active at any instant, and
observers are stateless checks of an estimated delay against the active
bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import SwitchId

DEFAULT_ASSUMPTIONS = (
    "stable-path-between-estimation-cycles",
    "no-events-between-estimation-cycles",
)

# Weak requirement when a scenario states only the strong one.
DEFAULT_WEAK_FACTOR = 2


class ContractKind(Enum):
    STRONG = "strong"
    WEAK = "weak"


class FaultCause(Enum):
    ESTIMATION_CYCLE = "estimation_cycle"
    LINK_FAILURE = "link_failure"
    CONTRACT_CHANGE = "contract_change"


class ContractError(ValueError):
    """Invalid contract definition or modification."""


@dataclass
class Contract:
    id: str
    pair_id: str
    src: SwitchId
    dst: SwitchId
    kind: ContractKind
    ped: int  # required end-to-end delay bound, ns
    assumptions: tuple[str, ...] = DEFAULT_ASSUMPTIONS
    active: bool = False

    def __post_init__(self) -> None:
        if self.ped <= 0:
            raise ContractError(f"contract {self.id}: ped must be positive")


@dataclass(frozen=True)
class FaultReport:
    """A violated guarantee: the observed delay exceeded the active bound."""

    pair_id: str
    observed_ed: int
    ped: int
    detected_at: int
    cause: FaultCause

    def __post_init__(self) -> None:
        if self.observed_ed <= self.ped:
            raise ContractError("fault report without a violation")


@dataclass(frozen=True)
class ContractChangeEvent:
    pair_id: str
    kind: ContractKind
    old_ped: int
    new_ped: int
    at: int


@dataclass(frozen=True)
class PedChange:
    """Active-bound transition, kept as a timeline for packet scoring."""

    pair_id: str
    src: SwitchId
    dst: SwitchId
    at: int
    active_kind: ContractKind
    active_ped: int
    strong_ped: int
    weak_ped: int


@dataclass
class ContractPair:
    id: str
    strong: Contract
    weak: Contract

    @property
    def src(self) -> SwitchId:
        return self.strong.src

    @property
    def dst(self) -> SwitchId:
        return self.strong.dst

    @property
    def active(self) -> Contract:
        return self.strong if self.strong.active else self.weak

    @property
    def active_kind(self) -> ContractKind:
        return self.active.kind


def create_contract_pair(pair_id: str, src: SwitchId, dst: SwitchId,
                         strong_ped: int, weak_ped: int | None = None,
                         assumptions: tuple[str, ...] = DEFAULT_ASSUMPTIONS,
                         ) -> ContractPair:
    """Build a linked strong/weak pair with the strong contract active.

    When weak_ped is omitted it defaults to DEFAULT_WEAK_FACTOR times the
    strong requirement.  weak_ped below strong_ped is rejected.
    """
    if strong_ped <= 0:
        raise ContractError("strong ped must be positive")
    if weak_ped is None:
        weak_ped = strong_ped * DEFAULT_WEAK_FACTOR
    if weak_ped < strong_ped:
        raise ContractError(
            f"weak ped {weak_ped} below strong ped {strong_ped}")
    strong = Contract(id=f"{pair_id}-strong", pair_id=pair_id, src=src,
                      dst=dst, kind=ContractKind.STRONG, ped=strong_ped,
                      assumptions=assumptions, active=True)
    weak = Contract(id=f"{pair_id}-weak", pair_id=pair_id, src=src, dst=dst,
                    kind=ContractKind.WEAK, ped=weak_ped,
                    assumptions=assumptions, active=False)
    return ContractPair(id=pair_id, strong=strong, weak=weak)


def observe(contract: Contract, ed: int, now: int,
            cause: FaultCause) -> FaultReport | None:
    """Stateless guarantee check: None when ed <= ped, a fault otherwise."""
    if ed <= contract.ped:
        return None
    return FaultReport(pair_id=contract.pair_id, observed_ed=ed,
                       ped=contract.ped, detected_at=now, cause=cause)


class ContractStore:
    """All contract pairs of a run, plus the active-bound timeline.

    Mutations happen only through modify and switch_active so the scoring
    timeline stays complete.
    """

    def __init__(self) -> None:
        self._pairs: dict[str, ContractPair] = {}
        self._by_endpoints: dict[tuple[SwitchId, SwitchId], ContractPair] = {}
        self.ped_changes: list[PedChange] = []

    def add(self, pair: ContractPair, now: int = 0) -> None:
        if pair.id in self._pairs:
            raise ContractError(f"duplicate contract pair {pair.id!r}")
        key = (pair.src, pair.dst)
        if key in self._by_endpoints:
            raise ContractError(f"duplicate contract for endpoints {key}")
        self._pairs[pair.id] = pair
        self._by_endpoints[key] = pair
        self._record(pair, now)

    def pairs(self) -> list[ContractPair]:
        return list(self._pairs.values())

    def pair(self, pair_id: str) -> ContractPair:
        try:
            return self._pairs[pair_id]
        except KeyError:
            raise ContractError(f"unknown contract pair {pair_id!r}") from None

    def pair_for(self, src: SwitchId, dst: SwitchId) -> ContractPair | None:
        return self._by_endpoints.get((src, dst))

    def _record(self, pair: ContractPair, now: int) -> None:
        self.ped_changes.append(PedChange(
            pair_id=pair.id, src=pair.src, dst=pair.dst, at=now,
            active_kind=pair.active_kind, active_ped=pair.active.ped,
            strong_ped=pair.strong.ped, weak_ped=pair.weak.ped))

    def modify(self, pair_id: str, kind: ContractKind, new_ped: int,
               now: int) -> ContractChangeEvent | None:
        """Replace one member's ped; None when the value is unchanged.

        Raising the strong requirement above the weak one pulls the weak
        requirement up by the same factor so the pair invariant holds.
        """
        if new_ped <= 0:
            raise ContractError("ped must be positive")
        pair = self.pair(pair_id)
        target = pair.strong if kind is ContractKind.STRONG else pair.weak
        old = target.ped
        if new_ped == old:
            return None
        if kind is ContractKind.STRONG:
            if new_ped > pair.weak.ped:
                # Proportional adjustment keeps weak/strong ratio intact.
                pair.weak.ped = (new_ped * pair.weak.ped + old // 2) // old
            pair.strong.ped = new_ped
        else:
            if new_ped < pair.strong.ped:
                raise ContractError(
                    f"weak ped {new_ped} below strong ped {pair.strong.ped}")
            pair.weak.ped = new_ped
        self._record(pair, now)
        return ContractChangeEvent(pair_id=pair_id, kind=kind,
                                   old_ped=old, new_ped=new_ped, at=now)

    def switch_active(self, pair_id: str, to: ContractKind, now: int) -> bool:
        """Flip the active member of a pair; no-op when already active."""
        pair = self.pair(pair_id)
        if pair.active_kind is to:
            return False
        pair.strong.active = to is ContractKind.STRONG
        pair.weak.active = to is ContractKind.WEAK
        self._record(pair, now)
        return True

    def active_ped_at(self, pair_id: str, when: int) -> int:
        """Active requirement for a pair as of a given instant."""
        current: int | None = None
        for change in self.ped_changes:
            if change.pair_id != pair_id:
                continue
            if change.at > when:
                break
            current = change.active_ped
        if current is None:
            raise ContractError(f"no contract state for {pair_id!r} at {when}")
        return current
