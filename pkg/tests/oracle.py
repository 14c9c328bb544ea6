"""Slow, independent reference evaluator used to cross-check the vectorised code.

Walls are found with shapely line intersections against explicit wall
segments, path loss is plain scalar math. Nothing here imports the
package's propagation or analysis code.
"""

from __future__ import annotations

import math

from shapely.geometry import LineString, Point


def building_walls(floors, rows, cols, width, depth):
    sx, sy = cols * width, rows * depth
    vertical = [(i * width, LineString([(i * width, 0), (i * width, sy)])) for i in range(1, cols)]
    horizontal = [(j * depth, LineString([(0, j * depth), (sx, j * depth)])) for j in range(1, rows)]
    junctions = [(i * width, j * depth) for i in range(1, cols) for j in range(1, rows)]
    return vertical, horizontal, junctions


def _strict_side_change(a, b, c):
    return (a - c) * (b - c) < 0


def count_walls(a, b, geom, extra_inter_row=0, eps=1e-3):
    vertical, horizontal, junctions = geom
    seg = LineString([a[:2], b[:2]])
    weight = 1 + extra_inter_row
    crossed_x = set()
    crossed_y = set()
    for x, line in vertical:
        if seg.intersects(line) and _strict_side_change(a[0], b[0], x):
            crossed_x.add(x)
    for y, line in horizontal:
        if seg.intersects(line) and _strict_side_change(a[1], b[1], y):
            crossed_y.add(y)
    total = len(crossed_x) + weight * len(crossed_y)
    ends = (Point(a[:2]), Point(b[:2]))
    for jx, jy in junctions:
        p = Point(jx, jy)
        if seg.distance(p) >= eps:
            continue
        # the closest point must be interior to the segment, not an endpoint
        s = seg.project(p)
        if s <= 0 or s >= seg.length or any(e.distance(p) < 1e-12 for e in ends):
            continue
        already = (jx in crossed_x) + weight * (jy in crossed_y)
        total += max(2 - already, 0)
    return total


def path_loss(d, fc, floors, walls):
    if d <= 1:
        raise ValueError("d <= 1")
    pl = 40.05 + 20 * math.log10(fc / 2.4) + 20 * math.log10(min(d, 5.0))
    if d > 5:
        pl += 35 * math.log10(d / 5)
    if floors > 0:
        pl += 18.3 * floors ** ((floors + 2) / (floors + 1) - 0.46)
    return pl + 5 * walls


def ap_xy(f, r, c, width, depth, floor_h, dev_h, local, policy):
    lx, ly = local
    if r % 2 == 1 and policy != "uniform":
        ly = depth - ly
        if policy == "point_mirrored":
            lx = width - lx
    return (c * width + lx, r * depth + ly, f * floor_h + dev_h)


def rx_power(a, b, geom, p):
    floors = abs(math.floor(a[2] / p["floor_h"]) - math.floor(b[2] / p["floor_h"]))
    if p["plan"]:
        d = math.hypot(a[0] - b[0], a[1] - b[1])
        if floors > 0:
            d = max(d, 1.0 + 1e-6)
    else:
        d = math.dist(a, b)
    w = count_walls(a, b, geom, p["extra"], p["eps"])
    return p["tx"] - path_loss(d, p["fc"], floors, w)


def brute_force_nlc(p, apt):
    """N_LC grid (list of lists, x-major) for apartment ``apt`` = (f, r, c).

    ``p`` is a plain dict: floors, rows, cols, width, depth, floor_h, dev_h,
    local (AP x, y inside an unmirrored apartment), policy, tx, sens, dp, fc,
    plan, extra, eps.
    """
    geom = building_walls(p["floors"], p["rows"], p["cols"], p["width"], p["depth"])
    aps = {
        (f, r, c): ap_xy(f, r, c, p["width"], p["depth"], p["floor_h"], p["dev_h"], p["local"], p["policy"])
        for f in range(p["floors"])
        for r in range(p["rows"])
        for c in range(p["cols"])
    }
    home = aps[apt]
    hidden = [x for k, x in aps.items() if k != apt and rx_power(home, x, geom, p) < p["sens"]]
    f, r, c = apt
    z = f * p["floor_h"] + p["dev_h"]
    grid = []
    for i in range(int(p["width"])):
        col = []
        for j in range(int(p["depth"])):
            sta = (c * p["width"] + i + 0.5, r * p["depth"] + j + 0.5, z)
            col.append(sum(1 for x in hidden if rx_power(sta, x, geom, p) >= p["sens"] + p["dp"]))
        grid.append(col)
    return grid
