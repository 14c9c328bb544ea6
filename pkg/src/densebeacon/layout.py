"""Residential building geometry: apartments, wall planes, AP and STA placement.

Coordinates are metres. x runs along a row of apartments, y across rows,
z is height. Apartment ``(floor, row, column)`` occupies
``[column*W, (column+1)*W) x [row*D, (row+1)*D)`` on floor ``floor``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate or out-of-building geometry."""


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class ApartmentId(NamedTuple):
    floor: int
    row: int
    column: int

    def label(self) -> str:
        return f"{self.floor},{self.row},{self.column}"


class WallCrossings(NamedTuple):
    walls: int
    floors: int
    corner_hits: int


class PlacementKind(Enum):
    CENTER = "center"
    WALL_MID_NORTH = "wall_mid_north"
    WALL_MID_SOUTH = "wall_mid_south"
    WALL_MID_EAST = "wall_mid_east"
    WALL_MID_WEST = "wall_mid_west"
    CORNER_NE = "corner_ne"
    CORNER_NW = "corner_nw"
    CORNER_SE = "corner_se"
    CORNER_SW = "corner_sw"


class MirrorPolicy(Enum):
    """How AP placement is transformed in odd-indexed rows.

    ``MIRRORED_ACROSS_ROWS`` reflects in y so that an inner-corner AP stays
    against the wall shared by the two rows. ``POINT_MIRRORED`` also
    reflects in x (the second row is the first rotated by 180 degrees).
    """

    UNIFORM = "uniform"
    MIRRORED_ACROSS_ROWS = "mirrored_across_rows"
    POINT_MIRRORED = "point_mirrored"


@dataclass(frozen=True)
class BuildingLayout:
    floors: int = 5
    rows: int = 2
    apartments_per_row: int = 10
    apartment_width_m: float = 10.0
    apartment_depth_m: float = 10.0
    floor_height_m: float = 3.0
    device_height_m: float = 1.5
    # additional walls counted whenever the boundary between two rows is crossed
    extra_inter_row_walls: int = 0
    corner_epsilon_m: float = 1e-3

    def __post_init__(self):
        if self.floors < 1 or self.rows < 1 or self.apartments_per_row < 1:
            raise ValueError("floors, rows and apartments_per_row must be >= 1")
        if self.apartment_width_m < 2 or self.apartment_depth_m < 2:
            raise ValueError("apartment dimensions must be >= 2 m")
        if not 0 < self.device_height_m < self.floor_height_m:
            raise ValueError("device height must lie strictly inside the floor height")
        if self.extra_inter_row_walls < 0:
            raise ValueError("extra_inter_row_walls must be >= 0")
        if self.corner_epsilon_m <= 0:
            raise ValueError("corner_epsilon_m must be positive")

    @property
    def n_apartments(self) -> int:
        return self.floors * self.rows * self.apartments_per_row

    @property
    def size_m(self) -> tuple[float, float, float]:
        return (
            self.apartments_per_row * self.apartment_width_m,
            self.rows * self.apartment_depth_m,
            self.floors * self.floor_height_m,
        )

    def apartments(self) -> list[ApartmentId]:
        """All apartments in (floor, row, column) lexicographic order."""
        return [
            ApartmentId(f, r, c)
            for f in range(self.floors)
            for r in range(self.rows)
            for c in range(self.apartments_per_row)
        ]

    def center_apartment(self, row: int = 0) -> ApartmentId:
        return ApartmentId(self.floors // 2, row, max(self.apartments_per_row // 2 - 1, 0))

    def check_apartment(self, apt: ApartmentId) -> None:
        f, r, c = apt
        if not (0 <= f < self.floors and 0 <= r < self.rows and 0 <= c < self.apartments_per_row):
            raise IndexError(f"apartment {tuple(apt)} outside building {self.floors}x{self.rows}x{self.apartments_per_row}")

    def floor_index(self, z: float) -> int:
        return int(math.floor(z / self.floor_height_m))

    def apartment_of(self, p: Point3) -> ApartmentId:
        c = min(int(p.x // self.apartment_width_m), self.apartments_per_row - 1)
        r = min(int(p.y // self.apartment_depth_m), self.rows - 1)
        return ApartmentId(min(self.floor_index(p.z), self.floors - 1), r, c)

    def contains(self, p: Point3, tol: float = 1e-9) -> bool:
        sx, sy, sz = self.size_m
        return -tol <= p.x <= sx + tol and -tol <= p.y <= sy + tol and -tol <= p.z <= sz + tol

    def junctions(self) -> np.ndarray:
        """Interior wall junction points in plan view, shape (K, 2)."""
        xs = self.apartment_width_m * np.arange(1, self.apartments_per_row)
        ys = self.apartment_depth_m * np.arange(1, self.rows)
        if len(xs) == 0 or len(ys) == 0:
            return np.zeros((0, 2))
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class ApPlacement:
    kind: PlacementKind = PlacementKind.CORNER_SW
    corner_inset_m: float = 1.0
    wall_inset_m: float = 1.0
    mirror_policy: MirrorPolicy = MirrorPolicy.MIRRORED_ACROSS_ROWS

    def local_xy(self, width: float, depth: float) -> tuple[float, float]:
        """AP position relative to the south-west corner of an unmirrored apartment."""
        k = self.kind
        ci, wi = self.corner_inset_m, self.wall_inset_m
        if k is PlacementKind.CENTER:
            return width / 2, depth / 2
        if k is PlacementKind.WALL_MID_NORTH:
            return width / 2, depth - wi
        if k is PlacementKind.WALL_MID_SOUTH:
            return width / 2, wi
        if k is PlacementKind.WALL_MID_EAST:
            return width - wi, depth / 2
        if k is PlacementKind.WALL_MID_WEST:
            return wi, depth / 2
        x = ci if k in (PlacementKind.CORNER_SW, PlacementKind.CORNER_NW) else width - ci
        y = ci if k in (PlacementKind.CORNER_SW, PlacementKind.CORNER_SE) else depth - ci
        return x, y


def ap_position(
    layout: BuildingLayout,
    apt: ApartmentId,
    placement: ApPlacement,
    mirror_policy: MirrorPolicy | None = None,
) -> Point3:
    layout.check_apartment(apt)
    policy = placement.mirror_policy if mirror_policy is None else mirror_policy
    w, d = layout.apartment_width_m, layout.apartment_depth_m
    lx, ly = placement.local_xy(w, d)
    if apt.row % 2 == 1 and policy is not MirrorPolicy.UNIFORM:
        ly = d - ly
        if policy is MirrorPolicy.POINT_MIRRORED:
            lx = w - lx
    return Point3(
        apt.column * w + lx,
        apt.row * d + ly,
        apt.floor * layout.floor_height_m + layout.device_height_m,
    )


def all_ap_positions(
    layout: BuildingLayout, placement: ApPlacement, apartments: list[ApartmentId] | None = None
) -> tuple[list[ApartmentId], np.ndarray]:
    ids = layout.apartments() if apartments is None else list(apartments)
    pts = np.array([ap_position(layout, a, placement) for a in ids], dtype=float).reshape(-1, 3)
    return ids, pts


def sta_grid_array(layout: BuildingLayout, apt: ApartmentId) -> np.ndarray:
    """STA grid points of ``apt`` as an (m, n, 3) array, m along x and n along y."""
    layout.check_apartment(apt)
    xs = apt.column * layout.apartment_width_m + np.arange(0.5, layout.apartment_width_m, 1.0)
    ys = apt.row * layout.apartment_depth_m + np.arange(0.5, layout.apartment_depth_m, 1.0)
    z = apt.floor * layout.floor_height_m + layout.device_height_m
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx, gy, np.full_like(gx, z)], axis=-1)


def sta_grid(layout: BuildingLayout, apt: ApartmentId) -> list[Point3]:
    grid = sta_grid_array(layout, apt)
    return [Point3(*map(float, p)) for p in grid.reshape(-1, 3)]


def wall_counts(layout: BuildingLayout, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised wall and corner-hit counts for segments a->b.

    ``a`` and ``b`` broadcast against each other with a trailing axis of
    size >= 2 (x, y). Returns integer arrays (walls, corner_hits).
    """
    a = np.asarray(a, dtype=float)[..., :2]
    b = np.asarray(b, dtype=float)[..., :2]
    a, b = np.broadcast_arrays(a, b)
    w, d = layout.apartment_width_m, layout.apartment_depth_m
    row_weight = 1 + layout.extra_inter_row_walls

    xs = w * np.arange(1, layout.apartments_per_row)
    ys = d * np.arange(1, layout.rows)
    ax, ay, bx, by = a[..., 0:1], a[..., 1:2], b[..., 0:1], b[..., 1:2]
    nx = ((ax - xs) * (bx - xs) < 0).sum(axis=-1)
    ny = ((ay - ys) * (by - ys) < 0).sum(axis=-1)
    walls = nx + row_weight * ny

    hits = np.zeros(walls.shape, dtype=int)
    junctions = layout.junctions()
    if len(junctions):
        # perpendicular distance from each junction to each segment (plan view)
        seg = (b - a)[..., None, :]
        rel = junctions - a[..., None, :]
        seg_len2 = (seg**2).sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            t = (rel * seg).sum(axis=-1) / seg_len2
            cross = np.abs(seg[..., 0] * rel[..., 1] - seg[..., 1] * rel[..., 0])
            dist = cross / np.sqrt(seg_len2)
        hit = (t > 0) & (t < 1) & (dist < layout.corner_epsilon_m)
        jx, jy = junctions[:, 0], junctions[:, 1]
        cx = (a[..., 0:1] - jx) * (b[..., 0:1] - jx) < 0
        cy = (a[..., 1:2] - jy) * (b[..., 1:2] - jy) < 0
        counted = cx.astype(int) + row_weight * cy.astype(int)
        # a corner is worth two walls; planes already counted there are not double-counted
        walls = walls + np.where(hit, np.maximum(2 - counted, 0), 0).sum(axis=-1)
        hits = hit.sum(axis=-1)
    return walls.astype(int), hits.astype(int)


def wall_crossings(layout: BuildingLayout, a: Point3, b: Point3) -> WallCrossings:
    if tuple(a) == tuple(b):
        raise GeometryError("degenerate segment: endpoints coincide")
    for p in (a, b):
        if not layout.contains(Point3(*p)):
            raise GeometryError(f"point {tuple(p)} lies outside the building")
    walls, hits = wall_counts(layout, np.array(a), np.array(b))
    floors = abs(layout.floor_index(a[2]) - layout.floor_index(b[2]))
    return WallCrossings(int(walls), floors, int(hits))
