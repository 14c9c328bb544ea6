from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from densebeacon.layout import ApPlacement, BuildingLayout  # noqa: E402
from densebeacon.propagation import DistanceMode, RadioConfig  # noqa: E402

def oracle_params(layout: BuildingLayout, placement: ApPlacement, radio: RadioConfig) -> dict:
    return {
        "floors": layout.floors,
        "rows": layout.rows,
        "cols": layout.apartments_per_row,
        "width": layout.apartment_width_m,
        "depth": layout.apartment_depth_m,
        "floor_h": layout.floor_height_m,
        "dev_h": layout.device_height_m,
        "local": placement.local_xy(layout.apartment_width_m, layout.apartment_depth_m),
        "policy": placement.mirror_policy.value,
        "tx": radio.tx_power_dbm,
        "sens": radio.sensitivity_dbm,
        "dp": radio.delta_p_db,
        "fc": radio.carrier_ghz,
        "plan": radio.distance_mode is DistanceMode.PLAN,
        "extra": layout.extra_inter_row_walls,
        "eps": layout.corner_epsilon_m,
    }


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
