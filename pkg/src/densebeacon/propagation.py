"""TGax residential path loss and received power.

All powers are dBm and all losses dB. Distances are metres, carrier in GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .layout import BuildingLayout, GeometryError, Point3, wall_counts, wall_crossings

BREAKPOINT_M = 5.0


class PathLossDomainError(ValueError):
    """The path-loss model is only valid for distances above 1 m."""


class Band(Enum):
    GHZ_2_4 = "2.4GHz"
    GHZ_5 = "5GHz"


class DistanceMode(Enum):
    SLANT = "slant"  # 3D straight-line distance
    PLAN = "plan"  # horizontal distance; cross-floor pairs floored at PLAN_MIN_CROSS_FLOOR_M


# plan distance between vertically stacked devices can vanish; floors already
# carry the vertical loss, so such pairs sit at the model's validity edge
PLAN_MIN_CROSS_FLOOR_M = 1.0 + 1e-6


@dataclass(frozen=True)
class RadioConfig:
    tx_power_dbm: float = 18.0
    sensitivity_dbm: float = -86.0
    delta_p_db: float = 0.0
    carrier_ghz: float = 2.4
    band: Band = Band.GHZ_2_4
    n_primary_channels: int = 3
    distance_mode: DistanceMode = DistanceMode.SLANT

    def __post_init__(self):
        if self.delta_p_db < 0:
            raise ValueError("delta_p_db must be >= 0")
        if self.n_primary_channels < 1:
            raise ValueError("n_primary_channels must be >= 1")
        if self.carrier_ghz <= 0:
            raise ValueError("carrier_ghz must be positive")


def floor_loss_db(floors):
    """Floor penetration term 18.3 * F^((F+2)/(F+1) - 0.46); exactly 0 for F = 0."""
    f = np.asarray(floors, dtype=float)
    safe = np.where(f > 0, f, 1.0)
    loss = np.where(f > 0, 18.3 * safe ** ((safe + 2) / (safe + 1) - 0.46), 0.0)
    return float(loss) if loss.ndim == 0 else loss


def path_loss_db_array(d_m, carrier_ghz: float, floors, walls) -> np.ndarray:
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 1.0):
        raise PathLossDomainError(f"path loss undefined for d <= 1 m (min d = {d.min():.4g} m)")
    if np.any(np.asarray(floors) < 0) or np.any(np.asarray(walls) < 0):
        raise ValueError("floors and walls must be >= 0")
    return (
        40.05
        + 20 * math.log10(carrier_ghz / 2.4)
        + 20 * np.log10(np.minimum(d, BREAKPOINT_M))
        + np.where(d > BREAKPOINT_M, 35 * np.log10(np.maximum(d, BREAKPOINT_M) / BREAKPOINT_M), 0.0)
        + floor_loss_db(floors)
        + 5.0 * np.asarray(walls, dtype=float)
    )


def path_loss_db(d_m: float, carrier_ghz: float, floors: int, walls: int) -> float:
    return float(path_loss_db_array(d_m, carrier_ghz, floors, walls))


def distance_m(a, b, mode: DistanceMode = DistanceMode.SLANT):
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if mode is DistanceMode.PLAN:
        diff = diff[..., :2]
    return np.sqrt((diff**2).sum(axis=-1))


def _effective_distance(d, floors, mode: DistanceMode):
    if mode is DistanceMode.PLAN:
        return np.where(np.asarray(floors) > 0, np.maximum(d, PLAN_MIN_CROSS_FLOOR_M), d)
    return d


def received_power_dbm(rx: Point3, tx: Point3, layout: BuildingLayout, radio: RadioConfig) -> float:
    crossing = wall_crossings(layout, rx, tx)
    d = float(_effective_distance(distance_m(rx, tx, radio.distance_mode), crossing.floors, radio.distance_mode))
    return radio.tx_power_dbm - path_loss_db(d, radio.carrier_ghz, crossing.floors, crossing.walls)


def received_power_matrix(
    rx: np.ndarray,
    tx: np.ndarray,
    layout: BuildingLayout,
    radio: RadioConfig,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Received power for every (rx[i], tx[j]) pair, shape (len(rx), len(tx)).

    Pairs where ``mask`` is False are not evaluated and come back as NaN, so
    the distance domain check only applies to pairs that are actually used.
    """
    rx = np.asarray(rx, dtype=float).reshape(-1, 3)
    tx = np.asarray(tx, dtype=float).reshape(-1, 3)
    out = np.full((len(rx), len(tx)), np.nan)
    if mask is None:
        mask = np.ones(out.shape, dtype=bool)
    ii, jj = np.nonzero(mask)
    if len(ii) == 0:
        return out
    a, b = rx[ii], tx[jj]
    if np.any(np.all(a == b, axis=-1)):
        raise GeometryError("degenerate segment: endpoints coincide")
    walls, _ = wall_counts(layout, a, b)
    fh = layout.floor_height_m
    floors = np.abs(np.floor(a[:, 2] / fh) - np.floor(b[:, 2] / fh))
    d = _effective_distance(distance_m(a, b, radio.distance_mode), floors, radio.distance_mode)
    out[ii, jj] = radio.tx_power_dbm - path_loss_db_array(d, radio.carrier_ghz, floors, walls)
    return out
