"""The three beacon-collision conditions and closed-form drift arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .layout import BuildingLayout, Point3
from .propagation import RadioConfig, received_power_dbm

# sentinel for "the overlap never ends / never recurs" at zero relative drift
NEVER = math.inf


@dataclass(frozen=True)
class BeaconConfig:
    beacon_duration_us: float = 500.0
    preamble_us: float = 0.0
    beacon_interval_ms: float = 500.0
    drift_ppm_bound: float = 10.0

    def __post_init__(self):
        if not 0 < self.beacon_duration_us <= self.beacon_interval_us:
            raise ValueError("beacon duration must be positive and not exceed the beacon interval")
        if not 0 <= self.preamble_us < self.beacon_duration_us:
            raise ValueError("preamble must be in [0, beacon duration)")
        if not 0 <= self.drift_ppm_bound <= 100:
            raise ValueError("drift bound must be within [0, 100] ppm")

    @property
    def beacon_interval_us(self) -> float:
        return self.beacon_interval_ms * 1000.0

    @property
    def vulnerable_us(self) -> float:
        """Beacon duration excluding the preamble."""
        return self.beacon_duration_us - self.preamble_us


def location_condition(
    sta: Point3, ap0: Point3, apx: Point3, layout: BuildingLayout, radio: RadioConfig
) -> bool:
    """True if ``apx`` can destroy AP0's beacon at ``sta`` without AP0 sensing it.

    The AP branch is evaluated first; when AP0 senses the alien the STA branch
    is never needed (and its distance is not checked).
    """
    if received_power_dbm(ap0, apx, layout, radio) >= radio.sensitivity_dbm:
        return False
    return received_power_dbm(sta, apx, layout, radio) >= radio.sensitivity_dbm + radio.delta_p_db


def time_condition_probability(beacons: BeaconConfig) -> float:
    return min(max(beacons.vulnerable_us / beacons.beacon_interval_us, 0.0), 1.0)


def channel_condition_probability(radio: RadioConfig) -> float:
    return 1.0 / radio.n_primary_channels


def _check_drift(relative_drift_ppm: float) -> float:
    if relative_drift_ppm < 0:
        raise ValueError("relative drift must be >= 0 (use |drift_a - drift_b|)")
    return relative_drift_ppm


def collision_persistence_s(beacons: BeaconConfig, relative_drift_ppm: float) -> float:
    """How long two overlapping beacons keep colliding before drift separates them."""
    drift = _check_drift(relative_drift_ppm)
    if drift == 0:
        return NEVER
    # microseconds per ppm is seconds
    return beacons.vulnerable_us / drift


def collision_recurrence_s(beacons: BeaconConfig, relative_drift_ppm: float) -> float:
    """Period after which the relative beacon phase wraps round and collisions return."""
    drift = _check_drift(relative_drift_ppm)
    if drift == 0:
        return NEVER
    return beacons.beacon_interval_us / drift
