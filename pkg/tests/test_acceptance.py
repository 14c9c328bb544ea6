"""Acceptance criteria 1-8, one printed PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are also
repeated in the terminal summary.
"""

from __future__ import annotations

import dataclasses
import math
import time

import numpy as np

from acceptance_log import record
from conftest import oracle_params
from densebeacon.analysis import building_report, hostile_map
from densebeacon.beaconsim import monte_carlo, run_timeline
from densebeacon.conditions import (
    BeaconConfig,
    channel_condition_probability,
    collision_persistence_s,
    collision_recurrence_s,
    time_condition_probability,
)
from densebeacon.config import load_scenario
from densebeacon.layout import ApPlacement, BuildingLayout, MirrorPolicy, PlacementKind
from densebeacon.mitigation import MitigationKind, MitigationSpec
from densebeacon.propagation import Band, RadioConfig
from oracle import brute_force_nlc
from simtools import forced_pair, pair_aps


def test_criterion_1_closed_form_probabilities():
    pt = time_condition_probability(BeaconConfig(beacon_duration_us=500, beacon_interval_ms=500))
    pc = [channel_condition_probability(RadioConfig(n_primary_channels=n)) for n in (3, 12, 20)]
    ok = pt == 0.001 and pc == [1 / 3, 1 / 12, 1 / 20]
    record(1, ok, f"time={pt!r} channel={pc}")
    assert ok


def test_criterion_2_drift_arithmetic():
    b = BeaconConfig()
    got = {
        "persist_20": collision_persistence_s(b, 20),
        "persist_1": collision_persistence_s(b, 1),
        "recur_20": collision_recurrence_s(b, 20),
        "recur_1": collision_recurrence_s(b, 1),
    }
    want = {"persist_20": 25.0, "persist_1": 500.0, "recur_20": 25_000.0, "recur_1": 500_000.0}
    ok = all(math.isclose(got[k], want[k], rel_tol=1e-12) for k in want)
    record(2, ok, " ".join(f"{k}={v:g}s" for k, v in got.items()))
    assert ok


def test_criterion_3_heatmap_maxima():
    cases = [
        ("ref_10x10_2g4", 7, 1),
        ("ref_7x12_2g4", 9, 1),
        ("ref_5x11_5g_n12", 10, 1),
        ("ref_5x11_5g_exact", 10, 0),
    ]
    parts, ok = [], True
    for name, want, tol in cases:
        sc = load_scenario(name)
        t0 = time.perf_counter()
        hm = hostile_map(sc.layout, sc.radio, sc.placement, sc.layout.center_apartment())
        dt = time.perf_counter() - t0
        good = abs(hm.max - want) <= tol and dt < 5
        ok &= good
        parts.append(f"{name}={hm.max} (want {want}±{tol}, {dt:.2f}s)")
    record(3, ok, "; ".join(parts))
    assert ok


def test_criterion_4_margin_monotone():
    t0 = time.perf_counter()
    ok, checked = True, 0
    for name in ("ref_10x10_2g4", "ref_7x12_2g4", "ref_5x11_5g_n12"):
        sc = load_scenario(name)
        for row in range(sc.layout.rows):
            means = [
                building_report(sc.layout, dataclasses.replace(sc.radio, delta_p_db=dp), sc.placement, row).per_apartment_mean
                for dp in (0.0, 3.0, 6.0)
            ]
            ok &= bool(np.all(means[1] <= means[0]) and np.all(means[2] <= means[1]))
            checked += means[0].size
    dt = time.perf_counter() - t0
    ok &= dt < 30
    record(4, ok, f"{checked} apartment means non-increasing over dP 0/3/6 dB in 3 buildings, {dt:.1f}s")
    assert ok


def test_criterion_5_brute_force_oracle():
    toys = [
        (BuildingLayout(3, 2, 2, 12, 7), ApPlacement(PlacementKind.CORNER_NW), RadioConfig(tx_power_dbm=23)),
        (BuildingLayout(1, 2, 6, 10, 10, extra_inter_row_walls=1), ApPlacement(PlacementKind.CENTER), RadioConfig()),
        (
            BuildingLayout(2, 2, 3, 11, 5),
            ApPlacement(PlacementKind.CORNER_SW, mirror_policy=MirrorPolicy.POINT_MIRRORED),
            RadioConfig(carrier_ghz=5.0, band=Band.GHZ_5, n_primary_channels=12, delta_p_db=3),
        ),
    ]
    mismatches = cells = hostile = 0
    slowest = 0.0
    for lay, pl, radio in toys:
        t0 = time.perf_counter()
        params = oracle_params(lay, pl, radio)
        for apt in lay.apartments():
            ours = hostile_map(lay, radio, pl, apt).values
            ref = np.array(brute_force_nlc(params, tuple(apt)))
            mismatches += int((ours != ref).sum())
            cells += ours.size
            hostile += int(ours.sum())
        slowest = max(slowest, time.perf_counter() - t0)
    ok = mismatches == 0 and hostile > 0 and slowest < 1
    record(5, ok, f"{cells} grid cells over {len(toys)} toy buildings, {mismatches} mismatches, {hostile} hostile hits, slowest {slowest:.2f}s")
    assert ok


def _one_interval_mc(n_channels: int, runs: int, seed_base: int):
    # half a beacon interval of simulated time holds exactly one home beacon per run
    cfg = forced_pair(n_channels=n_channels, duration_s=0.5)
    return monte_carlo(cfg, runs, seed_base=seed_base)


def test_criterion_6_simulation_vs_analytics():
    t0 = time.perf_counter()
    b = BeaconConfig()
    ok, parts = True, []
    for n_ch, runs in ((1, 100_000), (3, 150_000)):
        mc = _one_interval_mc(n_ch, runs, seed_base=1000 * n_ch)
        expect = time_condition_probability(b) / n_ch
        sigma = math.sqrt(expect * (1 - expect) / mc.beacons_expected)
        good = mc.beacons_expected >= 100_000 and abs(mc.miss_rate - expect) <= 3 * sigma
        ok &= good
        parts.append(f"N={n_ch}: {mc.beacons_missed}/{mc.beacons_expected}={mc.miss_rate:.6f} vs {expect:.6f}±{3 * sigma:.6f}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    record(6, ok, "; ".join(parts) + f", {dt:.1f}s")
    assert ok


def _eras(miss_times_ns):
    """Group miss times into eras of consecutive beacons (gap under 1.5 intervals)."""
    eras = []
    for t in miss_times_ns:
        if eras and t - eras[-1][-1] < 750_000_000:
            eras[-1].append(t)
        else:
            eras.append([t])
    return eras


def test_criterion_7_drift_eras():
    t0 = time.perf_counter()
    b = BeaconConfig()
    interval_s = b.beacon_interval_ms / 1000
    # relative drift 20 ppm; the alien starts 603 us ahead of the second home beacon and slides later
    cfg = dataclasses.replace(forced_pair(duration_s=25_100.0), record_events=True)
    aps = pair_aps([0.0, b.beacon_interval_us - b.beacon_duration_us - 103.0], drifts=(-10.0, 10.0))
    stats = run_timeline(cfg, aps)
    eras = _eras([e["t_ns"] for e in stats.events if e["type"] == "miss"])
    lengths = [len(e) * interval_s for e in eras]
    spacing = [(eras[i + 1][0] - eras[i][0]) / 1e9 for i in range(len(eras) - 1)]
    want_len, want_gap = collision_persistence_s(b, 20), collision_recurrence_s(b, 20)
    ok = (
        len(eras) >= 2
        and all(abs(x - want_len) <= interval_s for x in lengths)
        and all(abs(x - want_gap) <= interval_s for x in spacing)
    )
    dt = time.perf_counter() - t0
    ok &= dt < 30
    record(7, ok, f"eras={len(eras)} lengths={lengths} s (want {want_len}), spacing={spacing} s (want {want_gap}), {dt:.1f}s")
    assert ok


def _overlap_intervals(stats, interval_ns):
    """Beacon-interval indices in which two same-channel APs were on air together."""
    last: dict[int, int] = {}
    chan = {i: ap.primary_channel for i, ap in enumerate(stats.aps)}
    hits = []
    for e in stats.events:
        if e["type"] != "tx":
            continue
        for j, s in last.items():
            if j != e["ap"] and chan[j] == chan[e["ap"]] and s + 500_000 > e["t_ns"]:
                hits.append(e["t_ns"] // interval_ns)
        last[e["ap"]] = e["t_ns"]
    return hits


def test_criterion_8_mitigations():
    t0 = time.perf_counter()
    parts, ok = [], True

    # (a) DSC(delta) is the native run at dP + delta
    sc = load_scenario("ref_10x10_2g4")
    base = dataclasses.replace(sc.sim_config(seed=3, record_events=True), duration_s=30.0)
    dsc = dataclasses.replace(base, mitigations=(MitigationSpec(MitigationKind.DSC, sensitivity_offset_db=3.0),))
    native = dataclasses.replace(base, radio=dataclasses.replace(base.radio, delta_p_db=base.radio.delta_p_db + 3.0))
    ra, rb = run_timeline(dsc), run_timeline(native)
    same = ra.to_dict() == rb.to_dict() and ra.events == rb.events
    ok &= same
    parts.append(f"(a) DSC identical={same}")

    # (b) 500 vs 501 ms beacon intervals: |dB| = 1 ms >= l caps collision runs at one interval
    di = MitigationSpec(MitigationKind.DISTINCT_INTERVALS, interval_set_us=(500_000.0, 501_000.0))
    worst, misses = 0, 0
    for seed in range(20):
        cfg = dataclasses.replace(forced_pair(duration_s=600.0, mitigations=(di,)), seed=seed)
        st_ = run_timeline(cfg)
        worst = max(worst, st_.miss_streak_max)
        misses += st_.beacons_missed
    ok &= worst <= 1 and misses > 0
    parts.append(f"(b) max streak={worst} over 20 seeds ({misses} isolated misses)")

    # (c) MBCA on the A-B-C chain: A and C start overlapping, B relays their timing
    sc = load_scenario("hidden_pair_abc_mbca")
    bound = 10
    last_seen = []
    steady_clean = True
    for seed in range(10):
        cfg = dataclasses.replace(sc.sim_config(seed=seed, record_events=True), duration_s=300.0)
        st_ = run_timeline(cfg)
        hits = _overlap_intervals(st_, int(sc.beacons.beacon_interval_us * 1000))
        last_seen.append(max(hits) if hits else -1)
        steady_clean &= all(h <= bound for h in hits)
    ok &= steady_clean
    parts.append(f"(c) last overlap interval per seed={last_seen} (bound {bound})")

    # (d) p-persistent on a perpetually colliding pair delivers with probability p(1-p)
    for p in (0.5, 0.3):
        spec = MitigationSpec(MitigationKind.P_PERSISTENT, p=p)
        cfg = dataclasses.replace(forced_pair(duration_s=10_000.0, mitigations=(spec,)), seed=int(p * 100))
        st_ = run_timeline(cfg, pair_aps([200_000.0, 199_800.0]))
        n = st_.beacons_expected
        rate = st_.beacons_delivered / n
        want = p * (1 - p)
        sigma = math.sqrt(want * (1 - want) / n)
        good = abs(rate - want) <= 3 * sigma
        ok &= good
        parts.append(f"(d) p={p}: delivered {rate:.4f} vs {want:.4f}±{3 * sigma:.4f}")

    dt = time.perf_counter() - t0
    ok &= dt < 60
    record(8, ok, "; ".join(parts) + f", {dt:.1f}s")
    assert ok


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))
