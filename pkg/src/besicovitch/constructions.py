"""Builders: four-corner sets, fitted invisible sets, epsilon-nets, one
refinement round, the margin search, and rotated-copy assemblies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .duality import (
    DualFamily,
    ProbeLine,
    Sloped,
    Vertical,
    default_exclusion_side,
    line_section,
    sloped_section_bounds,
    slope_coverage,
    vertical_section,
    vertical_section_bounds,
    _mark,
)
from .geom.cells import AffineMap, CellUnion, GeometryError, Rect, contains_point, dilate
from .geom.intervals import TOL, IntervalUnion, _normalize_arc_arrays, arc_measure, measure, normalize_intervals
from .geom.setexpr import (
    UNIT_SQUARE,
    Attractor,
    BudgetExceededError,
    IfsSystem,
    Image,
    SetExpr,
    cell_budget,
    eval_set,
    expand_attractor,
)
from .metrics import CertifiedDistance, EmptySetError, hausdorff
from .projections import (
    Direction,
    ScanTable,
    direction_scan,
    exclude_ball,
    ortho_project,
    point_grid,
    radial_project,
    viewpoint_scan,
)


class InvalidRatioError(ValueError):
    pass


class InvalidRectangleError(ValueError):
    pass


class NotInOmegaError(ValueError):
    """Input's x-projection does not cover [0, 1]."""


class InsufficientSlopeCoverageError(ValueError):
    pass


SHEAR = AffineMap((1.0, -0.5, 0.0, 1.0))
SHEARED_BOX: Rect = (-0.5, 0.0, 1.0, 1.0)


def four_corner_system(ratio: float = 0.25) -> IfsSystem:
    if not 0 < ratio <= 0.5:
        raise InvalidRatioError(f"ratio must lie in (0, 1/2], got {ratio}")
    t = 1.0 - ratio
    return IfsSystem(
        tuple(AffineMap((ratio, 0.0, 0.0, ratio), off) for off in [(0.0, 0.0), (t, 0.0), (0.0, t), (t, t)])
    )


def _check_rect(target: Rect) -> None:
    a, c, b, d = target
    if not (b > a and d > c):
        raise InvalidRectangleError(f"degenerate rectangle {target}")


def fitting_map(target: Rect) -> AffineMap:
    """Shear the unit square, then send the sheared box onto ``target``."""
    _check_rect(target)
    return AffineMap.rect_to_rect(SHEARED_BOX, target) @ SHEAR


def fitted_invisible_set(target: Rect, level: int) -> SetExpr:
    """Four-corner set (ratio 1/4) sheared so its x-projection is exactly ``[x0, x1]``.

    Under ``(x, y) -> (x - y/2, y)`` the four first-level pieces project onto
    abutting intervals, so the x-projection is a full interval at every level.
    """
    return Image(fitting_map(target), Attractor(four_corner_system(0.25), level, UNIT_SQUARE))


def fitted_union(rects: Sequence[Rect], level: int) -> CellUnion:
    """Evaluate ``fitted_invisible_set`` for many rectangles at once."""
    if len(rects) == 0:
        return CellUnion.empty()
    n = len(rects) * 4**level
    if n > cell_budget():
        raise BudgetExceededError(f"{len(rects)} fitted sets at level {level} need {n} cells, budget is {cell_budget()}")
    base = SHEAR(expand_attractor(four_corner_system(0.25), level, UNIT_SQUARE).verts)
    r = np.asarray(rects, dtype=float)
    for rect in r:
        _check_rect(tuple(rect))
    sx = (r[:, 2] - r[:, 0]) / 1.5
    sy = r[:, 3] - r[:, 1]
    out = np.empty((len(r),) + base.shape)
    out[..., 0] = r[:, 0, None, None] + (base[None, ..., 0] + 0.5) * sx[:, None, None]
    out[..., 1] = r[:, 1, None, None] + base[None, ..., 1] * sy[:, None, None]
    return CellUnion(out.reshape(-1, *base.shape[1:]))


# -- epsilon nets ------------------------------------------------------------


def _grid_points_in_cells(c: CellUnion, s: float):
    """Points of the lattice ``s Z^2`` inside each cell (with owning cell index)."""
    lo = c.verts.min(axis=1)
    hi = c.verts.max(axis=1)
    i0 = np.ceil(lo / s - 1e-9).astype(np.int64)
    i1 = np.floor(hi / s + 1e-9).astype(np.int64)
    nx = np.maximum(i1[:, 0] - i0[:, 0] + 1, 0)
    ny = np.maximum(i1[:, 1] - i0[:, 1] + 1, 0)
    counts = nx * ny
    total = int(counts.sum())
    if total == 0:
        return np.empty((0, 2)), np.empty(0, dtype=np.int64)
    owner = np.repeat(np.arange(len(c)), counts)
    local = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    gx = i0[owner, 0] + local % nx[owner]
    gy = i0[owner, 1] + local // nx[owner]
    pts = np.stack([gx, gy], axis=1) * s
    from .geom.cells import signed_edge_distance, _signed_area

    solid = np.abs(_signed_area(c.verts)) > 0
    inside = solid[owner] & (signed_edge_distance(pts, c.verts[owner]) >= -TOL)
    return pts[inside], owner[inside]


def _boundary_points(c: CellUnion, spacing: float) -> np.ndarray:
    """Vertices plus points along every edge, at most ``spacing`` apart."""
    v = c.verts
    e = np.roll(v, -1, axis=1) - v
    ln = np.linalg.norm(e, axis=-1).ravel()
    starts = v.reshape(-1, 2)
    e = e.reshape(-1, 2)
    n = np.maximum(np.ceil(ln / spacing).astype(np.int64), 1)
    owner = np.repeat(np.arange(len(starts)), n)
    j = np.arange(int(n.sum())) - np.repeat(np.cumsum(n) - n, n)
    t = j / n[owner]
    return starts[owner] + t[:, None] * e[owner]


def _cover_samples(c: CellUnion, s_grid: float, s_edge: float) -> np.ndarray:
    grid, _ = _grid_points_in_cells(c, s_grid)
    return np.concatenate([grid, _boundary_points(c, s_edge)])


def epsilon_net(c: CellUnion, r: float) -> np.ndarray:
    """Finite points of ``c`` within distance ``r`` of every point of ``c``.

    Candidates are lattice points of spacing ``r/sqrt 2`` inside cells plus
    boundary points every ``r/2``: a point farther than ``r/2`` from its
    cell's boundary has a lattice point within ``r/2`` inside the cell, any
    other point is within ``3r/4`` of a boundary sample. Candidates are then
    dropped greedily, in order, while every check sample (spacing ``r/8``,
    hence every cell point within ``3r/16`` of one) stays within ``13r/16``
    of a kept point.
    """
    if len(c) == 0:
        raise EmptySetError("epsilon-net of an empty union")
    if not r > 0:
        raise GeometryError("net radius must be positive")
    cand = _cover_samples(c, r / math.sqrt(2), r / 2)
    _, first = np.unique(np.round(cand, 12), axis=0, return_index=True)
    cand = cand[np.sort(first)]
    checks = _cover_samples(c, r * math.sqrt(2) / 8, r / 8)
    rho = 13 * r / 16
    balls = cKDTree(checks).query_ball_point(cand, rho)
    count = np.zeros(len(checks), dtype=np.int64)
    for b in balls:
        count[b] += 1
    if (count == 0).any():
        raise AssertionError("candidate net fails to cover its own check samples")
    keep = np.ones(len(cand), dtype=bool)
    for j, b in enumerate(balls):
        if not b:
            keep[j] = False
            continue
        if count[b].min() >= 2:
            count[b] -= 1
            keep[j] = False
    return cand[keep]


def net_squares(net, eps: float, clip_to: Rect = (0.0, 0.0, 1.0, 1.0)) -> list[Rect]:
    """Squares of side ``2 eps / 3`` centred on the net points, cut to ``clip_to``."""
    if not eps > 0:
        raise GeometryError("eps must be positive")
    cx0, cy0, cx1, cy1 = clip_to
    out = []
    h = eps / 3
    for x, y in np.asarray(net, dtype=float).reshape(-1, 2):
        r = (max(x - h, cx0), max(y - h, cy0), min(x + h, cx1), min(y + h, cy1))
        if r[0] < r[2] and r[1] < r[3]:
            out.append(tuple(float(t) for t in r))
    return out


# -- refinement round ------------------------------------------------------------


def in_omega(c: CellUnion, tol: float = 1e-9) -> bool:
    return ortho_project(c, (0.0, 1.0)).covers(0.0, 1.0, tol)


@dataclass
class RefinementReport:
    description: str
    eps: float
    level: int
    net: np.ndarray
    rects: list[Rect]
    k_prime: CellUnion
    distance: CertifiedDistance
    x_projection: IntervalUnion
    scan_before: ScanTable
    scan_after: ScanTable

    @property
    def bound_target(self) -> float:
        """Radius closing the containment chain: ``(sqrt 2 + 1) eps / 3``."""
        return (math.sqrt(2) + 1) / 3 * self.eps

    def summary(self) -> dict:
        return {
            "eps": self.eps,
            "level": self.level,
            "net_points": len(self.net),
            "rectangles": len(self.rects),
            "cells": len(self.k_prime),
            "x_projection_measure": measure(self.x_projection),
            "hausdorff_lower": self.distance.lower,
            "hausdorff_upper": self.distance.upper,
            "chain_bound": self.bound_target,
            "max_radial_before": float(self.scan_before.values.max()),
            "max_radial_after": float(self.scan_after.values.max()),
        }


DEFAULT_VIEWPOINTS = point_grid(-2.0, 3.0, -2.0, 3.0, 5, 5)


def refine_round(
    c: CellUnion,
    eps: float,
    level: int,
    h: float | None = None,
    viewpoints=None,
    description: str = "",
    workers: int | None = None,
) -> RefinementReport:
    """Replace ``c`` by fitted invisible sets in squares around an ``eps/3``-net."""
    if not in_omega(c):
        raise NotInOmegaError("x-projection does not cover [0, 1]")
    if not eps > 0:
        raise GeometryError("eps must be positive")
    net = epsilon_net(c, eps / 3)
    rects = net_squares(net, eps, (0.0, 0.0, 1.0, 1.0))
    k_prime = fitted_union(rects, level)
    h = eps / 100 if h is None else h
    dist = hausdorff(c, k_prime, h)
    vp = DEFAULT_VIEWPOINTS if viewpoints is None else viewpoints
    return RefinementReport(
        description=description,
        eps=eps,
        level=level,
        net=net,
        rects=rects,
        k_prime=k_prime,
        distance=dist,
        x_projection=ortho_project(k_prime, (0.0, 1.0)),
        scan_before=viewpoint_scan(c, vp, workers=workers),
        scan_after=viewpoint_scan(k_prime, vp, workers=workers),
    )


# -- margin search ---------------------------------------------------------------


@dataclass
class MarginResult:
    margin: float
    scan: ScanTable
    steps: list[tuple[float, bool]] = field(default_factory=list)
    formula_margin: float | None = None


def _scan(c: CellUnion, grid, exclusion_radius: float, workers) -> ScanTable:
    g = list(grid) if not isinstance(grid, np.ndarray) else grid
    if len(g) and isinstance(g[0], Direction):
        return direction_scan(c, g, workers=workers)
    return viewpoint_scan(c, g, exclusion_radius, workers=workers)


def _nbhd_arc_measure(arcs, delta: float) -> float:
    """Measure of the closed ``delta``-neighbourhood of an arc union."""
    if arcs.full_circle:
        return 2 * math.pi
    if len(arcs) == 0:
        return 0.0
    return arc_measure(_normalize_arc_arrays(arcs.start - delta, arcs.end + delta))


def lipschitz_margin(c: CellUnion, viewpoints, threshold: float, exclusion_radius: float = 0.0) -> float:
    """Margin from the annulus-Lipschitz recipe: ``delta / (5 n)`` with ``n = ceil(1/threshold)``.

    ``delta`` is the largest value in ``2^-j`` (``j = 0..30``) whose
    ``delta``-neighbourhood of the radial projection stays below ``1/n``.
    """
    n = math.ceil(1 / threshold)
    best = math.inf
    for v in np.asarray(viewpoints, dtype=float).reshape(-1, 2):
        arcs = radial_project(exclude_ball(c, v, exclusion_radius), v)
        delta = 0.0
        if _nbhd_arc_measure(arcs, 0.0) < 1 / n:
            for j in range(31):
                d = 2.0**-j
                if _nbhd_arc_measure(arcs, d) < 1 / n:
                    delta = d
                    break
        best = min(best, delta / (5 * n))
        if best == 0.0:
            break
    return best


def find_margin(
    c: CellUnion,
    grid,
    threshold: float,
    r_max: float,
    exclusion_radius: float = 0.0,
    steps: int = 10,
    workers: int | None = None,
) -> MarginResult:
    """Largest tested dilation radius keeping every scan value below ``threshold``."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    log = []

    def ok(r):
        cells = c if r == 0 else dilate(c, r)
        sc = _scan(cells, grid, exclusion_radius, workers)
        passed = bool((sc.values < threshold).all())
        log.append((r, passed))
        return passed, sc

    formula = None
    if not (len(grid) and isinstance(list(grid)[0], Direction)):
        formula = lipschitz_margin(c, grid, threshold, exclusion_radius)

    passed, sc = ok(0.0)
    if not passed:
        return MarginResult(0.0, sc, log, formula)
    passed, sc_max = ok(r_max)
    if passed:
        return MarginResult(r_max, sc_max, log, formula)
    lo, hi = 0.0, r_max
    best_scan = sc
    for _ in range(steps):
        mid = (lo + hi) / 2
        passed, s = ok(mid)
        if passed:
            lo, best_scan = mid, s
        else:
            hi = mid
    return MarginResult(lo, best_scan, log, formula)


# -- assembly -----------------------------------------------------------------------


@dataclass(frozen=True)
class Assembly:
    copies: tuple[tuple[float, DualFamily], ...]

    def __post_init__(self):
        if not 1 <= len(self.copies) <= 8:
            raise ValueError("an assembly has between 1 and 8 copies")
        for ang, _ in self.copies:
            if not 0 <= ang < math.pi:
                raise ValueError(f"copy angle {ang} outside [0, pi)")


def besicovitch_assemble(code, copies: int = 4) -> Assembly:
    """Copies of the dual family rotated by ``k pi/4``."""
    if copies < 1:
        raise ValueError("need at least one copy")
    fam = code if isinstance(code, DualFamily) else DualFamily(code)
    if not slope_coverage(fam).covers(0.0, 1.0, 1e-9):
        raise InsufficientSlopeCoverageError("code does not carry every slope in [0, 1]")
    return Assembly(tuple((k * math.pi / 4, fam) for k in range(copies)))


def covered_directions(a: Assembly) -> IntervalUnion:
    """Directions (angles mod pi) of lines contained in the assembly."""
    lo, hi = [], []
    for ang, fam in a.copies:
        cov = slope_coverage(fam)
        for s0, s1 in cov:
            d0, d1 = math.atan(s0) + ang, math.atan(s1) + ang
            # Directions live on [0, pi); split at the seam.
            for k in range(-2, 3):
                a0, a1 = d0 + k * math.pi, d1 + k * math.pi
                a0c, a1c = max(a0, 0.0), min(a1, math.pi)
                if a0c <= a1c:
                    lo.append(a0c)
                    hi.append(a1c)
    return normalize_intervals(np.array(lo), np.array(hi), tol=1e-12)


def covers_direction(a: Assembly, phi: float) -> bool:
    phi = phi % math.pi
    dirs = covered_directions(a)
    if dirs.covers(phi, phi, 1e-12):
        return True
    # pi and 0 are the same direction.
    return phi == 0.0 and dirs.covers(math.pi, math.pi, 1e-12)


def _line_geometry(e: ProbeLine):
    if isinstance(e, Vertical):
        return np.array([e.x0, 0.0]), np.array([0.0, 1.0])
    d = np.array([1.0, e.a0])
    return np.array([0.0, e.b0]), d / np.linalg.norm(d)


def rotate_probe(e: ProbeLine, theta: float) -> ProbeLine:
    """Image of the probe line under rotation by ``theta`` about the origin."""
    p, d = _line_geometry(e)
    R = AffineMap.rotation(theta).matrix
    p, d = R @ p, R @ d
    if abs(d[0]) <= 1e-12:
        return Vertical(float(p[0]))
    a0 = d[1] / d[0]
    return Sloped(float(a0), float(p[1] - a0 * p[0]))


def _window_x(e: ProbeLine, radius: float):
    """Parameter window of the probe inside the disk of the given radius."""
    if isinstance(e, Vertical):
        if abs(e.x0) > radius:
            return None
        h = math.sqrt(radius**2 - e.x0**2)
        return -h, h
    a, b = e.a0, e.b0
    # x^2 + (a x + b)^2 <= R^2
    qa, qb, qc = 1 + a * a, 2 * a * b, b * b - radius**2
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return None
    s = math.sqrt(disc)
    return (-qb - s) / (2 * qa), (-qb + s) / (2 * qa)


def assembly_section_measure(
    a: Assembly,
    e: ProbeLine,
    window_radius: float = 2.0,
    exclusion_side: float | None = None,
) -> float:
    """Sum over copies of the arclength of ``e`` meeting the copy inside the disk of ``window_radius``."""
    total = 0.0
    for theta, fam in a.copies:
        local = rotate_probe(e, -theta)
        win = _window_x(local, window_radius)
        if win is None or len(fam.cells) == 0:
            continue
        if isinstance(local, Vertical):
            sec = vertical_section(fam, local.x0)
            total += measure(sec.clipped(*win))
        else:
            sec = line_section(fam, local, exclude_coding_point=True, exclusion_side=exclusion_side)
            total += measure(sec.clipped(*win)) * math.hypot(1.0, local.a0)
    return total


def raster_assembly(a: Assembly, viewport: Rect, width: int, height: int):
    """Column-exact occupancy of the union of all copies: ``(grid, fraction)``.

    For a copy rotated by ``theta`` the world column ``x = c`` becomes, in
    the copy's frame, the line of slope ``cot theta`` and intercept
    ``-c / sin theta``; its frame abscissae map back to world
    ``y = X / sin theta - c cot theta``.
    """
    x0, y0, x1, y1 = viewport
    xs = x0 + (np.arange(width) + 0.5) * (x1 - x0) / width
    marks = np.zeros((width, height), dtype=bool)
    for theta, fam in a.copies:
        c = fam.cells
        if len(c) == 0:
            continue
        step = max(1, 2_000_000 // max(1, len(c) * 4))
        s_t = math.sin(theta)
        if abs(s_t) <= 1e-12:
            for s in range(0, width, step):
                lo, hi = vertical_section_bounds(c, xs[s : s + step])
                _mark(marks[s : s + step], lo.T, hi.T, y0, y1, height)
            continue
        a0 = math.cos(theta) / s_t
        kappa = 1.0 / s_t
        for s in range(0, width, step):
            cols = xs[s : s + step]
            b0s = -cols * kappa
            lo, hi, hit = sloped_section_bounds(c, a0, b0s)
            # X -> y is increasing (kappa > 0 for theta in (0, pi)).
            ylo = lo * kappa + b0s * math.cos(theta)
            yhi = hi * kappa + b0s * math.cos(theta)
            ylo = ylo.transpose(2, 0, 1).reshape(len(cols), -1)
            yhi = yhi.transpose(2, 0, 1).reshape(len(cols), -1)
            _mark(marks[s : s + step], ylo, yhi, y0, y1, height)
            marks[s : s + step][hit] = True
    grid = marks.T[::-1].astype(np.uint8)
    return grid, float(grid.mean())
