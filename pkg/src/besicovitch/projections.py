"""Orthogonal and radial projections of cell unions, and grid scans over them.

Projection convention: the scalar image of ``p`` along direction ``v`` is
``p . rot(-90deg)(v) / |v|``. With ``v = (-1, x)`` this is
``(a x + b) / |(x, 1)|`` for ``p = (a, b)``, which is what makes vertical
sections of dual line families exact rescaled projections.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geom.cells import (
    CellUnion,
    GeometryError,
    _signed_area,
    classify_point,
    point_cell_distance,
    polygon_halfplanes,
    regular_polygon,
    subtract_convex,
)
from .geom.intervals import TOL, ArcUnion, IntervalUnion, _normalize_arc_arrays, arc_measure, measure, normalize_intervals


class InvalidDirectionError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class Direction:
    vx: float
    vy: float

    def __post_init__(self):
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)) or math.hypot(self.vx, self.vy) == 0:
            raise InvalidDirectionError(f"invalid direction ({self.vx}, {self.vy})")

    @classmethod
    def from_angle(cls, phi: float) -> Direction:
        return cls(math.cos(phi), math.sin(phi))

    @property
    def angle(self) -> float:
        return math.atan2(self.vy, self.vx) % math.pi

    def axis(self) -> np.ndarray:
        """Unit vector the points are dotted with: ``rot(-90deg)(v) / |v|``."""
        n = math.hypot(self.vx, self.vy)
        return np.array([self.vy / n, -self.vx / n])


def _as_direction(d) -> Direction:
    if isinstance(d, Direction):
        return d
    vx, vy = d
    return Direction(float(vx), float(vy))


def angle_grid(n: int, start: float = 0.0, stop: float = math.pi) -> list[Direction]:
    """``n`` directions at angles ``start + i (stop - start) / n``."""
    return [Direction.from_angle(start + i * (stop - start) / n) for i in range(n)]


def point_grid(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int) -> np.ndarray:
    """Row-major viewpoint grid including the corners."""
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


@dataclass(frozen=True, eq=False)
class ScanTable:
    """One row per grid parameter, in grid order."""

    params: np.ndarray  # (n,) angles for directions, (n, 2) for viewpoints
    values: np.ndarray
    kind: str  # "direction" or "viewpoint"

    def __len__(self):
        return len(self.values)

    def rows(self):
        return list(zip(self.params.tolist(), self.values.tolist()))


def ortho_project(c: CellUnion, d) -> IntervalUnion:
    u = _as_direction(d).axis()
    if len(c) == 0:
        return IntervalUnion.empty()
    s = c.verts @ u
    return normalize_intervals(s.min(axis=1), s.max(axis=1))


def ortho_measure(c: CellUnion, d) -> float:
    return measure(ortho_project(c, d))


def _fan_out(fn: Callable, items: Sequence, workers: int | None) -> list:
    if workers is None or workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def direction_scan(c: CellUnion, grid: Sequence, workers: int | None = None) -> ScanTable:
    if len(grid) == 0:
        raise InsufficientDataError("empty direction grid")
    dirs = [_as_direction(d) for d in grid]
    vals = _fan_out(lambda d: ortho_measure(c, d), dirs, workers)
    return ScanTable(np.array([d.angle for d in dirs]), np.array(vals, dtype=float), "direction")


def radial_project(c: CellUnion, v) -> ArcUnion:
    """Directions from ``v`` toward the points of ``c`` other than ``v`` itself."""
    v = np.asarray(v, dtype=float)
    if len(c) == 0:
        return ArcUnion.empty()
    verts = c.verts
    cls = classify_point(c, v)
    if (cls == 1).any():
        return ArcUnion.full()
    starts, ends = [], []

    # Exterior cells subtend less than pi, so angles measured from the first
    # vertex's angle, wrapped to [-pi, pi), never straddle the cut.
    ext = cls == -1
    if ext.any():
        r = verts[ext] - v
        ang = np.arctan2(r[..., 1], r[..., 0])
        d = np.mod(ang - ang[:, :1] + math.pi, 2 * math.pi) - math.pi
        starts.append(ang[:, 0] + d.min(axis=1))
        ends.append(ang[:, 0] + d.max(axis=1))

    bnd = np.flatnonzero(cls == 0)
    if len(bnd):
        vb = verts[bnd]
        solid = np.abs(_signed_area(vb)) > TOL * TOL
        rel = vb - v
        if solid.any():
            # Viewpoint on the boundary: measure angles from the centroid direction.
            r = rel[solid]
            ref = r.mean(axis=1)
            alpha = np.arctan2(ref[:, 1], ref[:, 0])
            ca, sa = np.cos(alpha)[:, None], np.sin(alpha)[:, None]
            dx = r[..., 0] * ca + r[..., 1] * sa
            dy = r[..., 1] * ca - r[..., 0] * sa
            zero = (np.abs(r) <= TOL).all(axis=-1)
            d = np.where(zero, 0.0, np.arctan2(dy, dx))
            starts.append(alpha + d.min(axis=1))
            ends.append(alpha + d.max(axis=1))
        # Flat cells through v contribute isolated directions only.
        for cell in rel[~solid]:
            for w in cell:
                if math.hypot(*w) > TOL:
                    a = math.atan2(w[1], w[0])
                    starts.append(np.array([a]))
                    ends.append(np.array([a]))
    if not starts:
        return ArcUnion.empty()
    return _normalize_arc_arrays(np.concatenate(starts), np.concatenate(ends))


def exclude_ball(c: CellUnion, v, radius: float, sides: int = 16) -> CellUnion:
    """Cells with the open ``radius``-ball around ``v`` removed.

    The removed region is the regular ``sides``-gon inscribed in the ball, so
    the retained set contains the true ``c minus B(v, radius)``.
    """
    if radius <= 0 or len(c) == 0:
        return c
    v = np.asarray(v, dtype=float)
    dist = point_cell_distance(np.broadcast_to(v, (len(c), 2)), c.verts)
    far = dist >= radius
    if far.all():
        return c
    poly = regular_polygon(v, radius, sides, circumscribed=False)
    near = subtract_convex(CellUnion(c.verts[~far]), polygon_halfplanes(poly))
    return CellUnion.concat([CellUnion(c.verts[far]), near])


def radial_measure(c: CellUnion, v, exclusion_radius: float = 0.0) -> float:
    """Upper bound on the arc measure of directions from ``v`` to ``c`` outside ``B(v, r)``."""
    if exclusion_radius < 0:
        raise GeometryError("exclusion radius must be nonnegative")
    return arc_measure(radial_project(exclude_ball(c, v, exclusion_radius), v))


def viewpoint_scan(c: CellUnion, grid, exclusion_radius: float = 0.0, workers: int | None = None) -> ScanTable:
    pts = np.asarray(grid, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise InsufficientDataError("empty viewpoint grid")
    vals = _fan_out(lambda p: radial_measure(c, p, exclusion_radius), list(pts), workers)
    return ScanTable(pts, np.array(vals, dtype=float), "viewpoint")


def continuity_probe(table: ScanTable) -> tuple[float, int]:
    """Largest jump between adjacent rows and the index of the first row of that pair."""
    if len(table) < 2:
        raise InsufficientDataError("continuity probe needs at least two rows")
    jumps = np.abs(np.diff(table.values))
    i = int(np.argmax(jumps))
    return float(jumps[i]), i
