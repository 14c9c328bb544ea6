"""densebeacon command line: heatmap, report, drift, simulate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import all_hostile_maps, building_report, neighbor_geometry
from .beaconsim import monte_carlo, run_timeline, write_event_log
from .conditions import BeaconConfig, collision_persistence_s, collision_recurrence_s
from .config import ConfigError, Scenario, load_scenario, parse_apartment_selector, scenario_to_dict

log = logging.getLogger("densebeacon")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_heatmap_csv(path: Path, values: np.ndarray, header: str) -> None:
    lines = ["# " + header]
    lines += [",".join(str(int(v)) for v in row) for row in values]
    path.write_text("\n".join(lines) + "\n")


def write_mean_csv(path: Path, values: np.ndarray, header: str) -> None:
    lines = ["# " + header]
    lines += [",".join(f"{v:.6g}" for v in row) for row in values]
    path.write_text("\n".join(lines) + "\n")


def heatmap_filename(apt) -> str:
    return f"heatmap_f{apt.floor}_r{apt.row}_c{apt.column}.csv"


def cmd_heatmap(args) -> int:
    sc = load_scenario(args.scenario)
    apartments = parse_apartment_selector(args.apartment, sc.layout)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    maps = all_hostile_maps(sc.layout, sc.radio, sc.placement, apartments)
    summary = []
    for hm in maps:
        header = f"scenario={sc.name} apartment={hm.apartment.label()} delta_p_db={sc.radio.delta_p_db:g} rows=x cols=y"
        write_heatmap_csv(out / heatmap_filename(hm.apartment), hm.values, header)
        i, j = hm.argmax
        neighbors = sorted(neighbor_geometry(hm))
        summary.append(
            {
                "apartment": list(hm.apartment),
                "file": heatmap_filename(hm.apartment),
                "max": hm.max,
                "argmax_cell": [i, j],
                "mean": float(f"{hm.mean:.6g}"),
                "hostile_at_argmax": [list(a) for a in hm.hostile_sets[i][j]],
                "hostile_aps": [{"apartment": list(a), "hops": h} for a, h in neighbors],
            }
        )
    _write_json(
        out / "summary.json",
        {"scenario": scenario_to_dict(sc), "max": max(s["max"] for s in summary), "apartments": summary},
    )
    top = max(summary, key=lambda s: s["max"])
    print(f"{sc.name}: {len(summary)} heatmap(s) in {out}; max N_LC = {top['max']} at apartment {top['apartment']}")
    return 0


def cmd_report(args) -> int:
    sc = load_scenario(args.scenario)
    if not 0 <= args.row < sc.layout.rows:
        raise ConfigError(f"--row {args.row} outside building with {sc.layout.rows} rows")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for dp in args.delta_p:
        radio = dataclasses.replace(sc.radio, delta_p_db=dp)
        rep = building_report(sc.layout, radio, sc.placement, args.row)
        reports.append(rep.to_dict())
        write_mean_csv(
            out / f"report_row{args.row}_dp{dp:g}.csv",
            rep.per_apartment_mean,
            f"scenario={sc.name} row={args.row} delta_p_db={dp:g} rows=floor cols=column",
        )
        print(f"delta_p={dp:g} dB: max N_LC {rep.max_nlc}, building mean {rep.per_apartment_mean.mean():.3f}")
    _write_json(out / "report.json", {"scenario": scenario_to_dict(sc), "row": args.row, "reports": reports})
    return 0


def _fmt_duration(seconds: float) -> str:
    if math.isinf(seconds):
        return "never"
    if seconds >= 86400:
        return f"{seconds / 86400:.2f} days"
    if seconds >= 3600:
        return f"{seconds / 3600:.2f} h"
    if seconds >= 60:
        return f"{seconds / 60:.2f} min"
    return f"{seconds:.3g} s"


def drift_table(beacons: BeaconConfig, drifts: list[float]) -> list[dict]:
    rows = []
    for d in drifts:
        p = collision_persistence_s(beacons, d)
        r = collision_recurrence_s(beacons, d)
        rows.append(
            {
                "relative_drift_ppm": d,
                "persistence_s": "infinite" if math.isinf(p) else p,
                "recurrence_s": "never" if math.isinf(r) else r,
                "persistence": "infinite" if math.isinf(p) else _fmt_duration(p),
                "recurrence": _fmt_duration(r),
            }
        )
    return rows


def cmd_drift(args) -> int:
    if args.scenario:
        beacons = load_scenario(args.scenario).beacons
    else:
        beacons = BeaconConfig()
    overrides = {}
    if args.beacon_duration_us is not None:
        overrides["beacon_duration_us"] = args.beacon_duration_us
    if args.beacon_interval_ms is not None:
        overrides["beacon_interval_ms"] = args.beacon_interval_ms
    if args.preamble_us is not None:
        overrides["preamble_us"] = args.preamble_us
    beacons = dataclasses.replace(beacons, **overrides)
    if any(d < 0 for d in args.drift):
        raise ConfigError("drifts must be >= 0 ppm")
    rows = drift_table(beacons, args.drift)
    print(f"{'drift_ppm':>10} {'persistence':>14} {'recurrence':>14}")
    for row in rows:
        print(f"{row['relative_drift_ppm']:>10g} {row['persistence']:>14} {row['recurrence']:>14}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "drift.json", {"beacons": dataclasses.asdict(beacons), "rows": rows})
    return 0


def cmd_simulate(args) -> int:
    sc: Scenario = load_scenario(args.scenario)
    seed = sc.simulation.seed if args.seed is None else args.seed
    runs = sc.simulation.runs if args.runs is None else args.runs
    cfg = sc.sim_config(seed=seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mc = monte_carlo(cfg, runs, seed_base=seed)
    payload = {"scenario": scenario_to_dict(sc), "seed_base": seed, "runs": runs, "aggregate": mc.to_dict()}
    if args.event_log:
        first = run_timeline(dataclasses.replace(cfg, record_events=True))
        write_event_log(first, out / f"events_seed{seed}.ndjson")
        payload["first_run"] = first.to_dict()
    _write_json(out / "simulate.json", payload)
    lo, hi = mc.miss_rate_ci()
    print(
        f"{sc.name}: {runs} run(s), miss rate {mc.miss_rate:.6g} (3-sigma [{lo:.6g}, {hi:.6g}]), "
        f"mean disassociations per run {mc.mean_disassociations:.3g}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="densebeacon", description="Beacon collisions among hidden APs in dense residential Wi-Fi.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("heatmap", help="N_LC heatmap CSVs for selected apartments")
    p.add_argument("--scenario", required=True, help="scenario JSON path or bundled scenario name")
    p.add_argument("--apartment", default="center", help="F,R,C | center | all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="per-apartment mean N_LC for one row, per power margin")
    p.add_argument("--scenario", required=True)
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--delta-p", type=_parse_float_list, default=[0.0, 3.0, 6.0], help="comma-separated dB values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("drift", help="collision persistence and recurrence under clock drift")
    p.add_argument("--scenario", help="take beacon parameters from a scenario")
    p.add_argument("--beacon-duration-us", type=float)
    p.add_argument("--beacon-interval-ms", type=float)
    p.add_argument("--preamble-us", type=float)
    p.add_argument("--drift", type=_parse_float_list, default=[20.0, 1.0], help="relative drifts in ppm")
    p.add_argument("--out")
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("simulate", help="Monte Carlo beacon timeline simulation")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--event-log", action="store_true", help="also write the raw event log of the first run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
