"""Seeded discrete-event simulation of periodic beaconing with clock drift.

Event times are integer nanoseconds. A STA loses its home beacon when a
hostile alien AP on the same primary channel started a beacon strictly
earlier that is still on air past the end of the home preamble.
"""

from __future__ import annotations

import heapq
import json
import math
import os
import random
import statistics
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .analysis import hostile_matrix
from .conditions import BeaconConfig
from .layout import ApartmentId, ApPlacement, BuildingLayout, Point3, ap_position, sta_grid_array
from .mitigation import (
    BeaconObservation,
    MbcaState,
    MitigationKind,
    MitigationSpec,
    NeighborBeaconReport,
    apply_distinct_intervals,
    apply_dsc,
    jitter_delay_us,
    mbca_step,
    p_persistent_gate,
    split_mitigations,
)
from .propagation import Band, RadioConfig, received_power_matrix

NS_PER_US = 1000


class StaPolicy(Enum):
    WORST_GRID_POINT = "worst_grid_point"
    ALL_GRID_POINTS = "all_grid_points"
    EXPLICIT = "explicit"


@dataclass
class ApState:
    id: ApartmentId
    position: Point3
    primary_channel: int
    tbtt_offset_us: float
    drift_ppm: float
    beacon_interval_us: float

    def validate(self, drift_bound_ppm: float) -> None:
        if not 0 <= self.tbtt_offset_us < self.beacon_interval_us:
            raise ValueError(f"AP {self.id}: TBTT offset outside [0, beacon interval)")
        if abs(self.drift_ppm) > drift_bound_ppm:
            raise ValueError(f"AP {self.id}: |drift| {self.drift_ppm} ppm exceeds bound {drift_bound_ppm}")


@dataclass
class SimConfig:
    layout: BuildingLayout = field(default_factory=BuildingLayout)
    radio: RadioConfig = field(default_factory=RadioConfig)
    beacons: BeaconConfig = field(default_factory=BeaconConfig)
    placement: ApPlacement = field(default_factory=ApPlacement)
    seed: int = 0
    duration_s: float = 60.0
    disassociation_streak: int = 10
    mitigations: tuple[MitigationSpec, ...] = ()
    sta_policy: StaPolicy = StaPolicy.WORST_GRID_POINT
    explicit_stas: tuple[tuple[ApartmentId, Point3], ...] = ()
    # None means every apartment has an AP
    active_apartments: tuple[ApartmentId, ...] | None = None
    # treat every alien AP as satisfying the location condition
    force_hostile: bool = False
    skips_count_toward_streak: bool = False
    # fixed initial TBTT phases, one per active AP; channels and drifts are still drawn
    tbtt_offsets_us: tuple[float, ...] | None = None
    record_events: bool = False

    def validate(self) -> MitigationSpec:
        """Check the configuration and return its timing strategy."""
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.disassociation_streak < 1:
            raise ValueError("disassociation_streak must be >= 1")
        timing, _ = split_mitigations(self.mitigations)
        for spec in self.mitigations:
            spec.validate(self.beacons.beacon_duration_us, self.beacons.beacon_interval_us)
        if self.sta_policy is StaPolicy.EXPLICIT and not self.explicit_stas:
            raise ValueError("explicit STA policy needs at least one STA")
        for apt in self.active_apartments or ():
            self.layout.check_apartment(apt)
        if self.tbtt_offsets_us is not None:
            n_aps = len(self.active_apartments) if self.active_apartments is not None else self.layout.n_apartments
            if len(self.tbtt_offsets_us) != n_aps:
                raise ValueError(f"tbtt_offsets_us needs one value per AP ({n_aps})")
        for apt, pos in self.explicit_stas:
            self.layout.check_apartment(apt)
            if not self.layout.contains(Point3(*pos)):
                raise ValueError(f"STA position {tuple(pos)} outside the building")
        return timing


@dataclass
class StaStats:
    apartment: ApartmentId
    position: Point3
    hostile: list[ApartmentId]
    expected: int = 0
    sent: int = 0
    missed: int = 0
    skipped: int = 0
    miss_streak_max: int = 0
    disassociations: int = 0
    streak: int = field(default=0, repr=False)

    @property
    def delivered(self) -> int:
        return self.sent - self.missed

    def to_dict(self) -> dict:
        return {
            "apartment": list(self.apartment),
            "position": [round(v, 6) for v in self.position],
            "hostile": [list(a) for a in self.hostile],
            "beacons_expected": self.expected,
            "beacons_sent": self.sent,
            "beacons_missed": self.missed,
            "beacons_skipped": self.skipped,
            "miss_streak_max": self.miss_streak_max,
            "disassociations": self.disassociations,
        }


@dataclass
class TimelineStats:
    stas: list[StaStats]
    per_pair_overlap_events: dict[tuple[ApartmentId, ApartmentId], int]
    sim_duration_s: float
    seed: int
    aps: list[ApState] = field(default_factory=list, repr=False)
    mbca_saturations: int = 0
    events: list[dict] | None = field(default=None, repr=False)

    @property
    def beacons_expected(self) -> int:
        return sum(s.expected for s in self.stas)

    @property
    def beacons_missed(self) -> int:
        return sum(s.missed for s in self.stas)

    @property
    def beacons_delivered(self) -> int:
        return sum(s.delivered for s in self.stas)

    @property
    def disassociations(self) -> int:
        return sum(s.disassociations for s in self.stas)

    @property
    def miss_streak_max(self) -> int:
        return max((s.miss_streak_max for s in self.stas), default=0)

    @property
    def miss_rate(self) -> float:
        return self.beacons_missed / self.beacons_expected if self.beacons_expected else 0.0

    @property
    def total_overlaps(self) -> int:
        return sum(self.per_pair_overlap_events.values())

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "sim_duration_s": self.sim_duration_s,
            "beacons_expected": self.beacons_expected,
            "beacons_missed": self.beacons_missed,
            "beacons_delivered": self.beacons_delivered,
            "miss_rate": self.miss_rate,
            "disassociations": self.disassociations,
            "miss_streak_max": self.miss_streak_max,
            "mbca_saturations": self.mbca_saturations,
            "per_pair_overlap_events": {
                f"{a.label()}|{b.label()}": n for (a, b), n in sorted(self.per_pair_overlap_events.items())
            },
            "stas": [s.to_dict() for s in self.stas],
        }


def k_th_beacon_start(ap: ApState, k: int) -> float:
    """Start time (us) of beacon ``k``, closed form under linear drift."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return ap.tbtt_offset_us + k * ap.beacon_interval_us * (1 + ap.drift_ppm * 1e-6)


def _start_ns(anchor_ns: int, anchor_k: int, interval_ns: int, drift_ppm: float, k: int) -> int:
    return anchor_ns + round((k - anchor_k) * interval_ns * (1 + drift_ppm * 1e-6))


def draw_channel(rng: random.Random, radio: RadioConfig) -> int:
    n = radio.n_primary_channels
    if radio.band is Band.GHZ_5 and n % 4 == 0:
        # pick an 80 MHz block, then one of its four primary 20 MHz channels
        block = rng.randrange(n // 4)
        return block * 4 + rng.randrange(4)
    return rng.randrange(n)


@dataclass
class _Prepared:
    """Seed-independent part of a simulation: geometry, hearing and hostility."""

    cfg: SimConfig
    radio: RadioConfig
    timing: MitigationSpec
    ap_ids: list[ApartmentId]
    ap_pos: np.ndarray
    senses: np.ndarray  # senses[i, j]: AP i hears AP j
    stas: list[tuple[int, Point3, list[int]]]  # (home AP index, position, hostile alien indices)


def prepare(cfg: SimConfig) -> _Prepared:
    timing = cfg.validate()
    _, dsc_offset = split_mitigations(cfg.mitigations)
    radio = apply_dsc(cfg.radio, dsc_offset)
    layout = cfg.layout
    ap_ids = list(cfg.active_apartments) if cfg.active_apartments is not None else layout.apartments()
    if len(set(ap_ids)) != len(ap_ids):
        raise ValueError("active apartments must be distinct")
    ap_pos = np.array([ap_position(layout, a, cfg.placement) for a in ap_ids], dtype=float).reshape(-1, 3)
    index = {a: i for i, a in enumerate(ap_ids)}

    n = len(ap_ids)
    off_diag = ~np.eye(n, dtype=bool)
    p_ap = received_power_matrix(ap_pos, ap_pos, layout, radio, mask=off_diag)
    with np.errstate(invalid="ignore"):
        senses = off_diag & (p_ap >= radio.sensitivity_dbm)

    candidates: list[tuple[ApartmentId, np.ndarray]] = []
    if cfg.sta_policy is StaPolicy.EXPLICIT:
        for apt, pos in cfg.explicit_stas:
            if apt not in index:
                raise ValueError(f"STA apartment {tuple(apt)} has no active AP")
            candidates.append((apt, np.asarray(pos, dtype=float).reshape(1, 3)))
    else:
        for apt in ap_ids:
            candidates.append((apt, sta_grid_array(layout, apt).reshape(-1, 3)))

    stas = []
    for apt, pts in candidates:
        home = index[apt]
        aliens = [j for j in range(n) if j != home]
        if cfg.force_hostile:
            hostile = np.ones((len(pts), len(aliens)), dtype=bool)
        else:
            _, hostile = hostile_matrix(layout, radio, cfg.placement, apt, pts, ap_ids, ap_pos)
        if cfg.sta_policy is StaPolicy.WORST_GRID_POINT:
            counts = hostile.sum(axis=1)
            keep = [int(np.argmax(counts))]  # first maximum in grid order
        else:
            keep = range(len(pts))
        for r in keep:
            hostile_idx = [aliens[k] for k in np.flatnonzero(hostile[r])]
            stas.append((home, Point3(*map(float, pts[r])), hostile_idx))
    return _Prepared(cfg, radio, timing, ap_ids, ap_pos, senses, stas)


def draw_aps(prep: _Prepared, rng: random.Random) -> list[ApState]:
    cfg = prep.cfg
    b = cfg.beacons
    channels = [draw_channel(rng, prep.radio) for _ in prep.ap_ids]
    aps = [
        ApState(a, Point3(*map(float, p)), ch, 0.0, 0.0, b.beacon_interval_us)
        for a, p, ch in zip(prep.ap_ids, prep.ap_pos, channels)
    ]
    if prep.timing.kind is MitigationKind.DISTINCT_INTERVALS:
        aps = apply_distinct_intervals(aps, prep.timing.interval_set_us, _conflicts(prep, aps))
    for i, ap in enumerate(aps):
        interval_ns = int(round(ap.beacon_interval_us * NS_PER_US))
        ap.tbtt_offset_us = rng.randrange(interval_ns) / NS_PER_US
        if cfg.tbtt_offsets_us is not None:
            ap.tbtt_offset_us = cfg.tbtt_offsets_us[i] % ap.beacon_interval_us
        ap.drift_ppm = rng.uniform(-b.drift_ppm_bound, b.drift_ppm_bound)
    return aps


def _conflicts(prep: _Prepared, aps: Sequence[ApState]) -> set[tuple[int, int]]:
    out = set()
    for home, _, hostile in prep.stas:
        for j in hostile:
            if aps[j].primary_channel == aps[home].primary_channel:
                out.add((min(home, j), max(home, j)))
    return out


@dataclass
class _Tx:
    src: int
    start: int
    end: int
    channel: int
    report: NeighborBeaconReport | None
    corrupted: set[int] = field(default_factory=set)


def _simulate(prep: _Prepared, seed: int, aps: Sequence[ApState] | None = None) -> TimelineStats:
    cfg = prep.cfg
    b = cfg.beacons
    rng = random.Random(seed)
    if aps is None:
        aps = draw_aps(prep, rng)
    else:
        aps = [replace(ap) for ap in aps]
        if len(aps) != len(prep.ap_ids):
            raise ValueError("explicit AP list must match the active apartments")
        if prep.timing.kind is MitigationKind.DISTINCT_INTERVALS:
            aps = apply_distinct_intervals(aps, prep.timing.interval_set_us, _conflicts(prep, aps))
    for ap in aps:
        ap.validate(b.drift_ppm_bound)

    timing = prep.timing
    kind = timing.kind
    n = len(aps)
    dur_ns = int(round(b.beacon_duration_us * NS_PER_US))
    pre_ns = int(round(b.preamble_us * NS_PER_US))
    end_ns = int(round(cfg.duration_s * 1e9))
    interval_ns = [int(round(ap.beacon_interval_us * NS_PER_US)) for ap in aps]
    anchor_ns = [int(round(ap.tbtt_offset_us * NS_PER_US)) for ap in aps]
    anchor_k = [0] * n
    streams = [random.Random(f"{seed}:ap:{i}") for i in range(n)]

    stas = [StaStats(prep.ap_ids[h], pos, [prep.ap_ids[j] for j in hostile]) for h, pos, hostile in prep.stas]
    # only hostile aliens on the home channel can ever cause a miss
    victims: dict[int, list[tuple[int, list[int]]]] = {}
    for s_idx, (home, _, hostile) in enumerate(prep.stas):
        relevant = [j for j in hostile if aps[j].primary_channel == aps[home].primary_channel]
        victims.setdefault(home, []).append((s_idx, relevant))
    same_channel = [
        [j for j in range(n) if j != i and aps[j].primary_channel == aps[i].primary_channel] for i in range(n)
    ]

    last_tx: list[deque[int]] = [deque(maxlen=2) for _ in range(n)]
    overlaps: dict[tuple[int, int], int] = {}
    events: list[dict] | None = [] if cfg.record_events else None

    use_mbca = kind is MitigationKind.MBCA
    mbca_states = [MbcaState() for _ in range(n)] if use_mbca else []
    heard_obs: list[deque[tuple[int, BeaconObservation]]] = [deque() for _ in range(n)]
    heard_reports: list[dict[int, NeighborBeaconReport]] = [{} for _ in range(n)]
    in_flight: list[_Tx] = []
    garbled = [False] * n
    saturations = 0

    def finalize(now: int) -> None:
        still = []
        for tx in in_flight:
            if tx.end > now:
                still.append(tx)
                continue
            obs = BeaconObservation(tx.channel, tx.start / NS_PER_US, b.beacon_duration_us, aps[tx.src].beacon_interval_us)
            for y in np.flatnonzero(prep.senses[:, tx.src]):
                y = int(y)
                if aps[y].primary_channel != tx.channel:
                    continue
                if y in tx.corrupted:
                    garbled[y] = True
                    continue
                heard_obs[y].append((tx.start, obs))
                if tx.report is not None:
                    heard_reports[y][tx.src] = tx.report
        in_flight[:] = still

    def actual(i: int, nominal: int) -> int:
        if kind is MitigationKind.JITTER:
            return nominal + int(round(jitter_delay_us(streams[i], timing.max_delay_us) * NS_PER_US))
        return nominal

    # heap entries: (actual start, AP index, beacon index, nominal TBTT)
    heap: list[tuple[int, int, int, int]] = []
    for i in range(n):
        # k = -1 is a warm-up beacon so that beacons at t >= 0 see their predecessors
        nominal = _start_ns(anchor_ns[i], 0, interval_ns[i], aps[i].drift_ppm, -1)
        heapq.heappush(heap, (actual(i, nominal), i, -1, nominal))

    while heap:
        t, i, k, _ = heapq.heappop(heap)
        ap = aps[i]
        if t >= end_ns:
            continue
        transmit = True
        if kind is MitigationKind.P_PERSISTENT:
            transmit = p_persistent_gate(streams[i], timing.p)

        if use_mbca:
            finalize(t)

        if transmit:
            for j in same_channel[i]:
                if last_tx[j] and last_tx[j][-1] + dur_ns > t:
                    key = (min(i, j), max(i, j))
                    overlaps[key] = overlaps.get(key, 0) + 1

        if t >= 0:
            for s_idx, relevant in victims.get(i, ()):
                st = stas[s_idx]
                st.expected += 1
                if not transmit:
                    st.skipped += 1
                    if cfg.skips_count_toward_streak:
                        _bump_streak(st, cfg.disassociation_streak)
                    if events is not None:
                        events.append({"type": "skip", "t_ns": t, "ap": i, "k": k, "sta": s_idx})
                    continue
                st.sent += 1
                culprits = [
                    j for j in relevant if any(s < t and s + dur_ns > t + pre_ns for s in last_tx[j])
                ]
                if culprits:
                    st.missed += 1
                    _bump_streak(st, cfg.disassociation_streak)
                    if events is not None:
                        events.append({"type": "miss", "t_ns": t, "ap": i, "k": k, "sta": s_idx, "by": culprits})
                else:
                    st.streak = 0

        if transmit:
            last_tx[i].append(t)
            if events is not None:
                events.append({"type": "tx", "t_ns": t, "ap": i, "k": k, "channel": ap.primary_channel})

        next_nominal = _start_ns(anchor_ns[i], anchor_k[i], interval_ns[i], ap.drift_ppm, k + 1)
        if use_mbca:
            st_m = mbca_states[i]
            horizon_ns = timing.report_horizon * interval_ns[i]
            # own starts outlive the horizon: a neighbour's report can be up to two intervals older
            keep_us = (timing.report_horizon + 2) * interval_ns[i] / NS_PER_US
            if transmit:
                st_m.own_recent_us.append(t / NS_PER_US)
                st_m.own_recent_us[:] = [s for s in st_m.own_recent_us if (t / NS_PER_US) - s < keep_us]
            obs_q = heard_obs[i]
            while obs_q and obs_q[0][0] < t - horizon_ns:
                obs_q.popleft()
            reports = list(heard_reports[i].values())
            heard_reports[i].clear()
            ap.tbtt_offset_us = (next_nominal / NS_PER_US) % ap.beacon_interval_us
            new_phase = mbca_step(
                ap,
                reports,
                [o for _, o in obs_q],
                timing,
                duration_us=b.beacon_duration_us,
                state=st_m,
                rng=streams[i],
                collided=garbled[i],
            )
            garbled[i] = False
            if st_m.saturated:
                saturations += 1
            if new_phase != ap.tbtt_offset_us:
                period = ap.beacon_interval_us
                shift = (new_phase - ap.tbtt_offset_us) % period
                if shift > period / 2:
                    shift -= period
                next_nominal += int(round(shift * NS_PER_US))
                anchor_ns[i], anchor_k[i] = next_nominal, k + 1
                ap.tbtt_offset_us = new_phase
            if transmit:
                report = NeighborBeaconReport(ap.id, tuple(o for _, o in obs_q))
                in_flight.append(_Tx(i, t, t + dur_ns, ap.primary_channel, report))
                for tx in in_flight[:-1]:
                    if tx.end > t:
                        tx.corrupted.add(i)
                        in_flight[-1].corrupted.add(tx.src)
                        for y in np.flatnonzero(prep.senses[:, i] & prep.senses[:, tx.src]):
                            tx.corrupted.add(int(y))
                            in_flight[-1].corrupted.add(int(y))
        heapq.heappush(heap, (actual(i, next_nominal), i, k + 1, next_nominal))

    pair_counts = {(aps[a].id, aps[c].id): v for (a, c), v in overlaps.items()}
    return TimelineStats(
        stas=stas,
        per_pair_overlap_events=pair_counts,
        sim_duration_s=cfg.duration_s,
        seed=seed,
        aps=list(aps),
        mbca_saturations=saturations,
        events=events,
    )


def _bump_streak(st: StaStats, threshold: int) -> None:
    st.streak += 1
    st.miss_streak_max = max(st.miss_streak_max, st.streak)
    if st.streak >= threshold:
        st.disassociations += 1
        st.streak = 0


def run_timeline(cfg: SimConfig, aps: Sequence[ApState] | None = None) -> TimelineStats:
    """Run one seeded simulation. ``aps`` overrides the random channel/phase/drift draws."""
    return _simulate(prepare(cfg), cfg.seed, aps)


@dataclass
class MonteCarloResult:
    n_runs: int
    seed_base: int
    beacons_expected: int
    beacons_missed: int
    per_run_miss_rate: list[float]
    per_run_disassociations: list[int]

    @property
    def miss_rate(self) -> float:
        """Pooled per-interval miss rate over all runs."""
        return self.beacons_missed / self.beacons_expected if self.beacons_expected else 0.0

    @property
    def miss_rate_stderr(self) -> float:
        """Binomial standard error of the pooled rate (intervals treated as independent)."""
        n = self.beacons_expected
        p = self.miss_rate
        return math.sqrt(p * (1 - p) / n) if n else 0.0

    def miss_rate_ci(self, z: float = 3.0) -> tuple[float, float]:
        half = z * self.miss_rate_stderr
        return max(self.miss_rate - half, 0.0), min(self.miss_rate + half, 1.0)

    @property
    def mean_disassociations(self) -> float:
        return statistics.fmean(self.per_run_disassociations) if self.per_run_disassociations else 0.0

    def to_dict(self) -> dict:
        lo, hi = self.miss_rate_ci()
        runs = self.per_run_miss_rate
        return {
            "n_runs": self.n_runs,
            "seed_base": self.seed_base,
            "beacons_expected": self.beacons_expected,
            "beacons_missed": self.beacons_missed,
            "miss_rate": self.miss_rate,
            "miss_rate_stderr": self.miss_rate_stderr,
            "miss_rate_ci_3sigma": [lo, hi],
            "per_run_miss_rate_mean": statistics.fmean(runs) if runs else 0.0,
            "per_run_miss_rate_stdev": statistics.stdev(runs) if len(runs) > 1 else 0.0,
            "disassociations_mean": self.mean_disassociations,
            "disassociations_total": sum(self.per_run_disassociations),
        }


def _run_chunk(prep: _Prepared, seeds: Sequence[int]) -> list[tuple[int, int, int]]:
    out = []
    for s in seeds:
        stats = _simulate(prep, s)
        out.append((stats.beacons_expected, stats.beacons_missed, stats.disassociations))
    return out


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DENSEBEACON_THREADS", "1")))
    except ValueError:
        return 1


def monte_carlo(cfg: SimConfig, n_runs: int, seed_base: int | None = None, workers: int | None = None) -> MonteCarloResult:
    """Independent runs seeded ``seed_base + run_index``; aggregation is order-independent."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base = cfg.seed if seed_base is None else seed_base
    prep = prepare(replace(cfg, record_events=False))
    seeds = [base + r for r in range(n_runs)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and n_runs > 1:
        chunks = [seeds[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [prep] * len(chunks), chunks))
        by_seed = {}
        for chunk, part in zip(chunks, parts):
            by_seed.update(zip(chunk, part))
        rows = [by_seed[s] for s in seeds]
    else:
        rows = _run_chunk(prep, seeds)
    return MonteCarloResult(
        n_runs=n_runs,
        seed_base=base,
        beacons_expected=sum(r[0] for r in rows),
        beacons_missed=sum(r[1] for r in rows),
        per_run_miss_rate=[r[1] / r[0] if r[0] else 0.0 for r in rows],
        per_run_disassociations=[r[2] for r in rows],
    )


def write_event_log(stats: TimelineStats, path) -> None:
    with open(path, "w") as fh:
        for ev in stats.events or ():
            fh.write(json.dumps(ev, sort_keys=True) + "\n")
