"""Hostile-AP enumeration: per-apartment N_LC heatmaps and per-building reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import ApartmentId, ApPlacement, BuildingLayout, all_ap_positions, sta_grid_array
from .propagation import Band, RadioConfig, received_power_matrix


@dataclass
class HostileMap:
    """N_LC for every STA grid point of one apartment.

    ``values[i, j]`` is the count at grid point i along x and j along y;
    ``hostile_sets[i][j]`` names the alien apartments behind that count.
    """

    apartment: ApartmentId
    grid_shape: tuple[int, int]
    values: np.ndarray
    hostile_sets: list[list[list[ApartmentId]]] = field(repr=False)

    @property
    def max(self) -> int:
        return int(self.values.max()) if self.values.size else 0

    @property
    def argmax(self) -> tuple[int, int]:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(i), int(j)

    @property
    def mean(self) -> float:
        return float(self.values.mean())


@dataclass
class BuildingReport:
    row: int
    per_apartment_mean: np.ndarray  # floors x columns
    delta_p_db: float
    band: Band
    max_nlc: int

    def to_dict(self) -> dict:
        return {
            "row": self.row,
            "delta_p_db": self.delta_p_db,
            "band": self.band.value,
            "max_nlc": self.max_nlc,
            "per_apartment_mean": [[float(f"{v:.6g}") for v in line] for line in self.per_apartment_mean],
        }


def hostile_matrix(
    layout: BuildingLayout,
    radio: RadioConfig,
    placement: ApPlacement,
    apt: ApartmentId,
    sta_points: np.ndarray,
    ap_ids: list[ApartmentId] | None = None,
    ap_points: np.ndarray | None = None,
) -> tuple[list[ApartmentId], np.ndarray]:
    """Boolean location-condition matrix, shape (len(sta_points), n_aliens).

    Aliens are every AP in ``ap_ids`` except the one in ``apt``.
    """
    if ap_ids is None or ap_points is None:
        ap_ids, ap_points = all_ap_positions(layout, placement)
    home = ap_ids.index(apt)
    alien_idx = [k for k in range(len(ap_ids)) if k != home]
    aliens = [ap_ids[k] for k in alien_idx]
    sta_points = np.asarray(sta_points, dtype=float).reshape(-1, 3)
    if not aliens:
        return aliens, np.zeros((len(sta_points), 0), dtype=bool)
    alien_pts = ap_points[alien_idx]
    p_ap = received_power_matrix(ap_points[home : home + 1], alien_pts, layout, radio)[0]
    hidden = p_ap < radio.sensitivity_dbm
    mask = np.broadcast_to(hidden, (len(sta_points), len(aliens)))
    p_sta = received_power_matrix(sta_points, alien_pts, layout, radio, mask=mask)
    with np.errstate(invalid="ignore"):
        hostile = mask & (p_sta >= radio.sensitivity_dbm + radio.delta_p_db)
    return aliens, hostile


def hostile_map(
    layout: BuildingLayout,
    radio: RadioConfig,
    placement: ApPlacement,
    apt: ApartmentId,
    *,
    _aps: tuple[list[ApartmentId], np.ndarray] | None = None,
) -> HostileMap:
    layout.check_apartment(apt)
    grid = sta_grid_array(layout, apt)
    m, n = grid.shape[:2]
    ap_ids, ap_pts = _aps if _aps is not None else all_ap_positions(layout, placement)
    aliens, hostile = hostile_matrix(layout, radio, placement, apt, grid.reshape(-1, 3), ap_ids, ap_pts)
    values = hostile.sum(axis=1).reshape(m, n).astype(int)
    flat_sets = [[aliens[k] for k in np.flatnonzero(row)] for row in hostile]
    sets = [flat_sets[i * n : (i + 1) * n] for i in range(m)]
    return HostileMap(apt, (m, n), values, sets)


def all_hostile_maps(
    layout: BuildingLayout, radio: RadioConfig, placement: ApPlacement, apartments: list[ApartmentId] | None = None
) -> list[HostileMap]:
    aps = all_ap_positions(layout, placement)
    targets = layout.apartments() if apartments is None else apartments
    return [hostile_map(layout, radio, placement, a, _aps=aps) for a in targets]


def building_report(layout: BuildingLayout, radio: RadioConfig, placement: ApPlacement, row: int) -> BuildingReport:
    if not 0 <= row < layout.rows:
        raise IndexError(f"row {row} outside building with {layout.rows} rows")
    aps = all_ap_positions(layout, placement)
    means = np.zeros((layout.floors, layout.apartments_per_row))
    max_nlc = 0
    for f in range(layout.floors):
        for c in range(layout.apartments_per_row):
            hm = hostile_map(layout, radio, placement, ApartmentId(f, row, c), _aps=aps)
            means[f, c] = hm.mean
            max_nlc = max(max_nlc, hm.max)
    return BuildingReport(row, means, radio.delta_p_db, radio.band, max_nlc)


def hop_distance(a: ApartmentId, b: ApartmentId) -> int:
    return max(abs(a.floor - b.floor), abs(a.row - b.row), abs(a.column - b.column))


def neighbor_geometry(hm: HostileMap) -> set[tuple[ApartmentId, int]]:
    seen = {apt for line in hm.hostile_sets for cell in line for apt in cell}
    return {(apt, hop_distance(hm.apartment, apt)) for apt in seen}
