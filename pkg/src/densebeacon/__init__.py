"""Beacon-to-beacon collisions among hidden access points in dense residential Wi-Fi."""

from .analysis import BuildingReport, HostileMap, building_report, hostile_map, neighbor_geometry
from .beaconsim import ApState, SimConfig, TimelineStats, k_th_beacon_start, monte_carlo, run_timeline
from .conditions import (
    BeaconConfig,
    channel_condition_probability,
    collision_persistence_s,
    collision_recurrence_s,
    location_condition,
    time_condition_probability,
)
from .layout import ApartmentId, ApPlacement, BuildingLayout, MirrorPolicy, PlacementKind, Point3, ap_position, sta_grid, wall_crossings
from .mitigation import MitigationKind, MitigationSpec, apply_distinct_intervals, apply_dsc, mbca_step, p_persistent_gate
from .propagation import Band, DistanceMode, RadioConfig, path_loss_db, received_power_dbm

__version__ = "0.1.0"
