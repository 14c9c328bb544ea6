"""Scenario files: JSON with unit-suffixed keys, strict validation, resolved dumps."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .beaconsim import SimConfig, StaPolicy
from .conditions import BeaconConfig
from .layout import ApartmentId, ApPlacement, BuildingLayout, MirrorPolicy, PlacementKind, Point3
from .mitigation import MitigationKind, MitigationSpec
from .propagation import Band, DistanceMode, RadioConfig

SCHEMA_VERSION = "1"
SCENARIO_DIR = Path(__file__).parent / "scenarios"


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path, self.line = path, line
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass(frozen=True)
class SimSettings:
    seed: int = 0
    duration_s: float = 60.0
    runs: int = 1
    disassociation_streak: int = 10
    sta_policy: StaPolicy = StaPolicy.WORST_GRID_POINT
    explicit_stas: tuple[tuple[ApartmentId, Point3], ...] = ()
    active_apartments: tuple[ApartmentId, ...] | None = None
    force_hostile: bool = False
    skips_count_toward_streak: bool = False
    tbtt_offsets_us: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    layout: BuildingLayout = field(default_factory=BuildingLayout)
    placement: ApPlacement = field(default_factory=ApPlacement)
    radio: RadioConfig = field(default_factory=RadioConfig)
    beacons: BeaconConfig = field(default_factory=BeaconConfig)
    mitigations: tuple[MitigationSpec, ...] = ()
    simulation: SimSettings = field(default_factory=SimSettings)
    description: str = ""

    def sim_config(self, seed: int | None = None, record_events: bool = False) -> SimConfig:
        s = self.simulation
        return SimConfig(
            layout=self.layout,
            radio=self.radio,
            beacons=self.beacons,
            placement=self.placement,
            seed=s.seed if seed is None else seed,
            duration_s=s.duration_s,
            disassociation_streak=s.disassociation_streak,
            mitigations=self.mitigations,
            sta_policy=s.sta_policy,
            explicit_stas=s.explicit_stas,
            active_apartments=s.active_apartments,
            force_hostile=s.force_hostile,
            skips_count_toward_streak=s.skips_count_toward_streak,
            tbtt_offsets_us=s.tbtt_offsets_us,
            record_events=record_events,
        )


class _Ctx:
    def __init__(self, text: str, path: str | None):
        self.text, self.path = text, path
        self.lines = text.splitlines()

    def line_of(self, section: str | None, key: str | None) -> int | None:
        start = 0
        if section:
            start = self._find(f'"{section}"', 0) or 0
        if key is None:
            return start + 1 if section else None
        hit = self._find(f'"{key}"', start)
        return hit + 1 if hit is not None else (start + 1 if section else None)

    def _find(self, needle: str, start: int) -> int | None:
        for i in range(start, len(self.lines)):
            if needle in self.lines[i]:
                return i
        return None

    def fail(self, msg: str, section: str | None = None, key: str | None = None):
        raise ConfigError(msg, self.path, self.line_of(section, key))


_LAYOUT_KEYS = {f.name for f in dataclasses.fields(BuildingLayout)}
_PLACEMENT_KEYS = {f.name for f in dataclasses.fields(ApPlacement)}
_RADIO_KEYS = {f.name for f in dataclasses.fields(RadioConfig)}
_BEACON_KEYS = {f.name for f in dataclasses.fields(BeaconConfig)}
_MITIGATION_KEYS = {f.name for f in dataclasses.fields(MitigationSpec)}
_SIM_KEYS = {f.name for f in dataclasses.fields(SimSettings)}
_TOP_KEYS = {"schema_version", "name", "description", "layout", "placement", "radio", "beacons", "mitigation", "simulation"}

_INT_FIELDS = {
    "floors", "rows", "apartments_per_row", "extra_inter_row_walls", "n_primary_channels",
    "report_horizon", "missing_report_threshold", "seed", "runs", "disassociation_streak",
}
_BOOL_FIELDS = {"force_hostile", "skips_count_toward_streak"}
_ENUM_FIELDS = {
    "kind": None,  # placement or mitigation kind, resolved per section
    "mirror_policy": MirrorPolicy,
    "band": Band,
    "distance_mode": DistanceMode,
    "sta_policy": StaPolicy,
}


def _coerce(ctx: _Ctx, section: str, key: str, value: Any, enum_cls: type[Enum] | None = None):
    if key in _BOOL_FIELDS:
        if not isinstance(value, bool):
            ctx.fail(f"{section}.{key} must be true or false", section, key)
        return value
    if enum_cls is not None:
        try:
            return enum_cls(value)
        except ValueError:
            allowed = ", ".join(e.value for e in enum_cls)
            ctx.fail(f"{section}.{key}: {value!r} is not one of {allowed}", section, key)
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            ctx.fail(f"{section}.{key} must be an integer", section, key)
        return value
    if key in ("interval_set_us", "tbtt_offsets_us"):
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            ctx.fail(f"{section}.{key} must be a list of numbers", section, key)
        return tuple(float(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx.fail(f"{section}.{key} must be a number", section, key)
    return float(value)


def _section(ctx: _Ctx, raw: dict, name: str, allowed: set[str], enums: dict[str, type[Enum]]) -> dict:
    body = raw.get(name, {})
    if not isinstance(body, dict):
        ctx.fail(f"section '{name}' must be an object", name, None)
    out = {}
    for key, value in body.items():
        if key not in allowed:
            ctx.fail(f"unknown key '{key}' in section '{name}'", name, key)
        out[key] = _coerce(ctx, name, key, value, enums.get(key))
    return out


def _build(ctx: _Ctx, section: str, cls, kwargs: dict):
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        ctx.fail(f"invalid {section}: {exc}", section, _blamed_key(str(exc), kwargs))


def _blamed_key(message: str, keys) -> str | None:
    # point at the offending key when the validator names it
    return next((k for k in sorted(keys, key=len, reverse=True) if k in message), None)


def _apartment(ctx: _Ctx, section: str, key: str, value) -> ApartmentId:
    if not (isinstance(value, list) and len(value) == 3 and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
        ctx.fail(f"{section}.{key}: apartment must be [floor, row, column]", section, key)
    return ApartmentId(*value)


def _simulation(ctx: _Ctx, raw: dict) -> SimSettings:
    body = raw.get("simulation", {})
    if not isinstance(body, dict):
        ctx.fail("section 'simulation' must be an object", "simulation", None)
    kw: dict[str, Any] = {}
    for key, value in body.items():
        if key not in _SIM_KEYS:
            ctx.fail(f"unknown key '{key}' in section 'simulation'", "simulation", key)
        if key == "active_apartments":
            if not isinstance(value, list):
                ctx.fail("simulation.active_apartments must be a list", "simulation", key)
            kw[key] = tuple(_apartment(ctx, "simulation", key, v) for v in value)
        elif key == "explicit_stas":
            stas = []
            if not isinstance(value, list):
                ctx.fail("simulation.explicit_stas must be a list", "simulation", key)
            for item in value:
                if not isinstance(item, dict) or set(item) != {"apartment", "position_m"}:
                    ctx.fail("each explicit STA needs exactly 'apartment' and 'position_m'", "simulation", key)
                pos = item["position_m"]
                if not (isinstance(pos, list) and len(pos) == 3 and all(isinstance(v, (int, float)) for v in pos)):
                    ctx.fail("explicit STA position_m must be [x, y, z]", "simulation", key)
                stas.append((_apartment(ctx, "simulation", key, item["apartment"]), Point3(*map(float, pos))))
            kw[key] = tuple(stas)
        else:
            kw[key] = _coerce(ctx, "simulation", key, value, _ENUM_FIELDS.get(key) if key == "sta_policy" else None)
    settings = _build(ctx, "simulation", SimSettings, kw)
    if settings.duration_s <= 0:
        ctx.fail("simulation.duration_s must be positive", "simulation", "duration_s")
    if settings.runs < 1:
        ctx.fail("simulation.runs must be >= 1", "simulation", "runs")
    if settings.disassociation_streak < 1:
        ctx.fail("simulation.disassociation_streak must be >= 1", "simulation", "disassociation_streak")
    return settings


def parse_scenario(text: str, path: str | None = None) -> Scenario:
    ctx = _Ctx(text, path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object", path, 1)
    for key in raw:
        if key not in _TOP_KEYS:
            ctx.fail(f"unknown top-level key '{key}'", None, key)
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        ctx.fail(f"schema_version must be \"{SCHEMA_VERSION}\" (got {version!r})", None, "schema_version")

    layout = _build(ctx, "layout", BuildingLayout, _section(ctx, raw, "layout", _LAYOUT_KEYS, {}))
    for key in ("apartment_width_m", "apartment_depth_m"):
        if float(getattr(layout, key)) != int(getattr(layout, key)):
            ctx.fail(f"layout.{key} must be a whole number of metres for the STA grid", "layout", key)
    placement = _build(
        ctx,
        "placement",
        ApPlacement,
        _section(ctx, raw, "placement", _PLACEMENT_KEYS, {"kind": PlacementKind, "mirror_policy": MirrorPolicy}),
    )
    radio = _build(
        ctx, "radio", RadioConfig, _section(ctx, raw, "radio", _RADIO_KEYS, {"band": Band, "distance_mode": DistanceMode})
    )
    beacons = _build(ctx, "beacons", BeaconConfig, _section(ctx, raw, "beacons", _BEACON_KEYS, {}))

    mitig_raw = raw.get("mitigation", [])
    if isinstance(mitig_raw, dict):
        mitig_raw = [mitig_raw]
    if not isinstance(mitig_raw, list):
        ctx.fail("mitigation must be an object or a list of objects", "mitigation", None)
    mitigations = []
    for item in mitig_raw:
        if not isinstance(item, dict):
            ctx.fail("each mitigation entry must be an object", "mitigation", None)
        wrapped = _section(ctx, {"mitigation": item}, "mitigation", _MITIGATION_KEYS, {"kind": MitigationKind})
        spec = _build(ctx, "mitigation", MitigationSpec, wrapped)
        try:
            spec.validate(beacons.beacon_duration_us, beacons.beacon_interval_us)
        except ValueError as exc:
            ctx.fail(f"invalid mitigation: {exc}", "mitigation", _blamed_key(str(exc), item))
        if spec.kind is not MitigationKind.NONE:
            mitigations.append(spec)

    simulation = _simulation(ctx, raw)
    scenario = Scenario(
        name=str(raw.get("name", Path(path).stem if path else "scenario")),
        layout=layout,
        placement=placement,
        radio=radio,
        beacons=beacons,
        mitigations=tuple(mitigations),
        simulation=simulation,
        description=str(raw.get("description", "")),
    )
    try:
        scenario.sim_config().validate()
    except (ValueError, IndexError) as exc:
        ctx.fail(str(exc), "simulation", None)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    if not p.exists():
        bundled = SCENARIO_DIR / (p.name if p.suffix else p.name + ".json")
        if bundled.exists():
            p = bundled
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse_scenario(text, str(p))


def bundled_scenarios() -> list[Path]:
    return sorted(SCENARIO_DIR.glob("*.json"))


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple) and hasattr(value, "_fields"):
        return list(value)
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def _fields(obj) -> dict:
    return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}


def scenario_to_dict(sc: Scenario) -> dict:
    """Fully resolved scenario (defaults filled in), loadable by :func:`parse_scenario`."""
    sim = _fields(sc.simulation)
    sim["explicit_stas"] = [{"apartment": list(a), "position_m": list(p)} for a, p in sc.simulation.explicit_stas]
    for key in ("active_apartments", "tbtt_offsets_us"):
        if sim[key] is None:
            del sim[key]
    return {
        "schema_version": SCHEMA_VERSION,
        "name": sc.name,
        "description": sc.description,
        "layout": _fields(sc.layout),
        "placement": _fields(sc.placement),
        "radio": _fields(sc.radio),
        "beacons": _fields(sc.beacons),
        "mitigation": [_fields(m) for m in sc.mitigations],
        "simulation": sim,
    }


def parse_apartment_selector(text: str, layout: BuildingLayout) -> list[ApartmentId]:
    text = text.strip().lower()
    if text == "all":
        return layout.apartments()
    if text == "center":
        return [layout.center_apartment()]
    m = re.fullmatch(r"(\d+),(\d+),(\d+)", text)
    if not m:
        raise ValueError(f"apartment selector must be F,R,C, 'center' or 'all' (got {text!r})")
    apt = ApartmentId(*map(int, m.groups()))
    layout.check_apartment(apt)
    return [apt]
