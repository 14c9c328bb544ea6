"""Beacon-protection strategies plugged into the beacon simulator.

Timing strategies (distinct intervals, jitter, p-persistent, MBCA) change
when beacons go on air; DSC only raises the STA-side power margin.
"""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

from .layout import ApartmentId
from .propagation import RadioConfig

if TYPE_CHECKING:
    from .beaconsim import ApState


class MitigationKind(Enum):
    NONE = "none"
    DISTINCT_INTERVALS = "distinct_intervals"
    JITTER = "jitter"
    P_PERSISTENT = "p_persistent"
    MBCA = "mbca"
    DSC = "dsc"


TIMING_KINDS = (
    MitigationKind.DISTINCT_INTERVALS,
    MitigationKind.JITTER,
    MitigationKind.P_PERSISTENT,
    MitigationKind.MBCA,
)


@dataclass(frozen=True)
class MitigationSpec:
    kind: MitigationKind = MitigationKind.NONE
    interval_set_us: tuple[float, ...] = ()
    max_delay_us: float = 0.0
    p: float = 1.0
    report_horizon: int = 4
    jitter_us: float = 50_000.0
    slot_granularity_us: float = 1_000.0
    missing_report_threshold: int = 3
    # extra clearance around windows; covers drift while reported timing ages
    guard_us: float = 100.0
    sensitivity_offset_db: float = 0.0

    def validate(self, beacon_duration_us: float, beacon_interval_us: float) -> None:
        k = self.kind
        if k is MitigationKind.P_PERSISTENT and not 0 < self.p <= 1:
            raise ValueError("p-persistent probability must be in (0, 1]")
        if k is MitigationKind.JITTER:
            shortest = min(self.interval_set_us or (beacon_interval_us,))
            if not 0 <= self.max_delay_us < shortest:
                raise ValueError("jitter max delay must be in [0, shortest beacon interval)")
        if k is MitigationKind.DISTINCT_INTERVALS:
            if not self.interval_set_us:
                raise ValueError("distinct_intervals needs a non-empty interval set")
            if min(self.interval_set_us) < beacon_duration_us:
                raise ValueError("every beacon interval must be at least the beacon duration")
        if k is MitigationKind.MBCA:
            if self.report_horizon < 1 or self.missing_report_threshold < 1:
                raise ValueError("MBCA report horizon and missing-report threshold must be >= 1")
            if self.slot_granularity_us <= 0 or self.jitter_us < 0 or self.guard_us < 0:
                raise ValueError("MBCA slot granularity must be positive, jitter and guard non-negative")
        if k is MitigationKind.DSC and self.sensitivity_offset_db < 0:
            raise ValueError("DSC offset must be >= 0")


def split_mitigations(specs: Iterable[MitigationSpec]) -> tuple[MitigationSpec, float]:
    """Return (timing strategy, DSC offset). At most one of each is allowed."""
    timing = [s for s in specs if s.kind in TIMING_KINDS]
    dsc = [s for s in specs if s.kind is MitigationKind.DSC]
    if len(timing) > 1 or len(dsc) > 1:
        raise ValueError("at most one timing strategy plus DSC can be combined")
    return (timing[0] if timing else MitigationSpec()), (dsc[0].sensitivity_offset_db if dsc else 0.0)


class BeaconObservation(NamedTuple):
    channel: int
    tbtt_us: float
    duration_us: float
    interval_us: float


@dataclass(frozen=True)
class NeighborBeaconReport:
    reporter: ApartmentId
    entries: tuple[BeaconObservation, ...] = ()


@dataclass
class MbcaState:
    missing_streak: int = 0
    saturated: bool = False
    relocations: int = 0
    jitters: int = 0
    own_recent_us: list[float] = field(default_factory=list)


def apply_dsc(radio: RadioConfig, offset_db: float) -> RadioConfig:
    if offset_db < 0:
        raise ValueError("DSC offset must be >= 0")
    if offset_db == 0:
        return radio
    return dataclasses.replace(radio, delta_p_db=radio.delta_p_db + offset_db)


def p_persistent_gate(rng: random.Random, p: float) -> bool:
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    return rng.random() < p


def apply_distinct_intervals(
    aps: Sequence[ApState],
    interval_set: Sequence[float],
    conflicts: Iterable[tuple[int, int]] = (),
) -> list[ApState]:
    """Assign beacon intervals round-robin by AP index.

    With ``conflicts`` (index pairs that share a channel and a hostile
    relation) the round-robin choice is skipped over intervals already used
    by a conflicting lower-index AP, when the set leaves any alternative.
    """
    if not interval_set:
        raise ValueError("interval set must be non-empty")
    neighbours: dict[int, set[int]] = {}
    for a, b in conflicts:
        neighbours.setdefault(a, set()).add(b)
        neighbours.setdefault(b, set()).add(a)
    chosen: list[float] = []
    out = []
    n = len(interval_set)
    for i, ap in enumerate(aps):
        taken = {chosen[j] for j in neighbours.get(i, ()) if j < i}
        pick = interval_set[i % n]
        for step in range(n):
            cand = interval_set[(i + step) % n]
            if cand not in taken:
                pick = cand
                break
        chosen.append(pick)
        offset = ap.tbtt_offset_us % pick
        out.append(dataclasses.replace(ap, beacon_interval_us=pick, tbtt_offset_us=offset))
    return out


def _circular_overlap(a: float, da: float, b: float, db: float, period: float) -> bool:
    return (b - a) % period < da or (a - b) % period < db


def _contains_own(report: NeighborBeaconReport, channel: int, own_recent_us: Sequence[float], tol_us: float) -> bool:
    return any(
        e.channel == channel and any(abs(e.tbtt_us - s) < tol_us for s in own_recent_us) for e in report.entries
    )


def mbca_step(
    ap: ApState,
    heard_reports: Sequence[NeighborBeaconReport],
    own_heard: Sequence[BeaconObservation],
    spec: MitigationSpec,
    *,
    duration_us: float,
    state: MbcaState,
    rng: random.Random,
    match_tol_us: float = 1.0,
    collided: bool = False,
) -> float:
    """One MBCA decision for ``ap``; returns its new TBTT phase in [0, interval).

    Windows are phases modulo the AP's own beacon interval. ``state`` carries
    the missing-report streak and the AP's own recent beacon start times,
    which are what neighbours' reports are matched against. ``collided``
    means the AP sensed neighbour energy it could not decode since its last
    step; with no report heard that also counts as a missing report.
    """
    period = ap.beacon_interval_us
    phase = ap.tbtt_offset_us % period
    own = state.own_recent_us

    windows = []
    for rep in heard_reports:
        for e in rep.entries:
            if e.channel != ap.primary_channel:
                continue
            if any(abs(e.tbtt_us - s) < match_tol_us for s in own):
                continue
            windows.append((e.tbtt_us % period, e.duration_us))
    windows.extend((o.tbtt_us % period, o.duration_us) for o in own_heard if o.channel == ap.primary_channel)

    if heard_reports:
        if any(_contains_own(r, ap.primary_channel, own, match_tol_us) for r in heard_reports):
            state.missing_streak = 0
        else:
            state.missing_streak += 1
    elif collided:
        state.missing_streak += 1
    if state.missing_streak >= spec.missing_report_threshold:
        phase = (phase + rng.uniform(0.0, spec.jitter_us)) % period
        state.missing_streak = 0
        state.jitters += 1

    g = spec.guard_us

    def clashes(start: float) -> bool:
        return any(_circular_overlap(start - g, duration_us + 2 * g, w, d, period) for w, d in windows)

    state.saturated = False
    if clashes(phase):
        slot = spec.slot_granularity_us
        n_slots = int(period // slot)
        best = None
        for g in range(n_slots):
            cand = g * slot
            if clashes(cand):
                continue
            fwd = (cand - phase) % period
            dist = min(fwd, period - fwd)
            # exact ties go to the later offset
            key = (dist, 0 if fwd <= period - fwd else 1)
            if best is None or key < best[0]:
                best = (key, cand)
        if best is None:
            state.saturated = True
        else:
            phase = best[1]
            state.relocations += 1
    return phase % period


def jitter_delay_us(rng: random.Random, max_delay_us: float) -> float:
    return rng.uniform(0.0, max_delay_us) if max_delay_us > 0 else 0.0


def lcm_interval_us(a: float, b: float) -> float:
    """Least common multiple of two integer-microsecond intervals."""
    ia, ib = int(round(a)), int(round(b))
    return float(ia * ib // math.gcd(ia, ib))
