from __future__ import annotations

import json

import pytest

from densebeacon.config import (
    ConfigError,
    bundled_scenarios,
    load_scenario,
    parse_apartment_selector,
    parse_scenario,
    scenario_to_dict,
)
from densebeacon.layout import ApartmentId, BuildingLayout
from densebeacon.mitigation import MitigationKind


def test_all_bundled_scenarios_load_and_roundtrip():
    paths = bundled_scenarios()
    assert len(paths) >= 6
    for p in paths:
        sc = load_scenario(p)
        again = parse_scenario(json.dumps(scenario_to_dict(sc)))
        assert again == sc


def test_bundled_name_lookup():
    assert load_scenario("hidden_pair_abc").simulation.force_hostile


def test_unknown_key_reports_line():
    text = '{\n  "schema_version": "1",\n  "layout": {\n    "floors": 2,\n    "flors": 3\n  }\n}\n'
    with pytest.raises(ConfigError) as exc:
        parse_scenario(text, "x.json")
    assert exc.value.line == 5
    assert "flors" in str(exc.value) and "x.json:5" in str(exc.value)


def test_bad_schema_version():
    with pytest.raises(ConfigError):
        parse_scenario('{"schema_version": "2"}')


def test_malformed_json_line():
    with pytest.raises(ConfigError) as exc:
        parse_scenario('{\n  "schema_version": "1",\n  oops\n}')
    assert exc.value.line == 3


def test_invalid_values_rejected():
    for body in (
        '{"schema_version": "1", "radio": {"delta_p_db": -3}}',
        '{"schema_version": "1", "layout": {"apartment_width_m": 10.5}}',
        '{"schema_version": "1", "mitigation": {"kind": "p_persistent", "p": 1.5}}',
        '{"schema_version": "1", "mitigation": [{"kind": "jitter", "max_delay_us": 10}, {"kind": "mbca"}]}',
        '{"schema_version": "1", "placement": {"kind": "corner_up"}}',
        '{"schema_version": "1", "simulation": {"duration_s": 0}}',
    ):
        with pytest.raises(ConfigError):
            parse_scenario(body)


def test_mitigation_object_or_list():
    one = parse_scenario('{"schema_version": "1", "mitigation": {"kind": "dsc", "sensitivity_offset_db": 3}}')
    assert one.mitigations[0].kind is MitigationKind.DSC
    two = parse_scenario(
        '{"schema_version": "1", "mitigation": [{"kind": "dsc", "sensitivity_offset_db": 3},'
        ' {"kind": "p_persistent", "p": 0.5}]}'
    )
    assert len(two.mitigations) == 2


def test_missing_file():
    with pytest.raises(ConfigError):
        load_scenario("/nonexistent/scenario.json")


def test_apartment_selector():
    lay = BuildingLayout()
    assert parse_apartment_selector("center", lay) == [ApartmentId(2, 0, 4)]
    assert parse_apartment_selector("1,1,3", lay) == [ApartmentId(1, 1, 3)]
    assert len(parse_apartment_selector("all", lay)) == 100
    with pytest.raises(IndexError):
        parse_apartment_selector("9,0,0", lay)
    with pytest.raises(ValueError):
        parse_apartment_selector("middle", lay)
