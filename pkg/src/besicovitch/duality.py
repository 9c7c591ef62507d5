"""Sections of dual line families.

A point ``(a, b)`` of the coding set codes the line ``y = a x + b``. The
union of the family meets a vertical line in a rescaled orthogonal
projection of the code, and any other line in the image of a radial
projection of the code under ``phi -> -tan(phi)``. Both facts are used
here, and for sloped probes the two routes are computed independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom.cells import CellUnion, _signed_area, contains_point, subtract_convex
from .geom.intervals import TOL, IntervalUnion, normalize_intervals
from .geom.setexpr import Cells, SetExpr, eval_set
from .projections import ortho_project, radial_project


class ProbeInFamilyError(ValueError):
    """The probe line is itself coded by a point of the family."""


@dataclass(frozen=True, eq=False)
class DualFamily:
    code: SetExpr | CellUnion
    _cells: list = field(default_factory=list, init=False, repr=False)

    @property
    def cells(self) -> CellUnion:
        if not self._cells:
            code = self.code
            self._cells.append(code if isinstance(code, CellUnion) else eval_set(code))
        return self._cells[0]

    @property
    def expr(self) -> SetExpr:
        return Cells(self.code) if isinstance(self.code, CellUnion) else self.code


@dataclass(frozen=True)
class Vertical:
    x0: float


@dataclass(frozen=True)
class Sloped:
    a0: float
    b0: float


ProbeLine = Vertical | Sloped


def _cells_of(f) -> CellUnion:
    if isinstance(f, DualFamily):
        return f.cells
    if isinstance(f, CellUnion):
        return f
    return eval_set(f)


def vertical_section(f, x: float) -> IntervalUnion:
    """``{a x + b : (a, b) in K}``; extremes per cell sit at vertices."""
    c = _cells_of(f)
    if len(c) == 0:
        return IntervalUnion.empty()
    val = c.verts[..., 0] * x + c.verts[..., 1]
    return normalize_intervals(val.min(axis=1), val.max(axis=1))


def vertical_section_bounds(c: CellUnion, xs: np.ndarray):
    """Per-cell section intervals at many abscissae: arrays of shape ``(m, len(xs))``."""
    a = c.verts[..., 0][..., None]
    b = c.verts[..., 1][..., None]
    val = a * xs + b
    return val.min(axis=1), val.max(axis=1)


def _cut_b_range(A: np.ndarray, B: np.ndarray, a0: float):
    """b-extent of each cell's intersection with the line ``a = a0`` (NaN if none)."""
    An, Bn = np.roll(A, -1, axis=1), np.roll(B, -1, axis=1)
    lo_side, hi_side = A - a0, An - a0
    on = np.abs(lo_side) <= TOL
    cross = (lo_side * hi_side < 0) & ~on
    denom = np.where(cross, An - A, 1.0)
    t = np.where(cross, (a0 - A) / denom, 0.0)
    bc = B + t * (Bn - B)
    vals = np.where(on, B, np.where(cross, bc, np.nan))
    with np.errstate(all="ignore"):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmin(vals, axis=1), np.nanmax(vals, axis=1)


def sloped_section_bounds(c: CellUnion, a0: float, b0s: np.ndarray):
    """Per-cell images ``{(b - b0) / (a0 - a)}`` for a batch of intercepts ``b0s``.

    Returns ``(lo, hi, hit)``: ``lo``/``hi`` have shape ``(2, m, W)`` holding
    up to two intervals per cell (NaN where absent, +-inf for rays), and
    ``hit`` (shape ``(W,)``) flags intercepts whose coding point ``(a0, b0)``
    lies in a cell, in which case that column's intervals are meaningless.
    """
    b0s = np.atleast_1d(np.asarray(b0s, dtype=float))
    A, B = c.verts[..., 0], c.verts[..., 1]
    m, W = len(A), len(b0s)
    lo = np.full((2, m, W), np.nan)
    hi = np.full((2, m, W), np.nan)
    hit = np.zeros(W, dtype=bool)
    if m == 0:
        return lo, hi, hit
    right = A > a0 + TOL
    left = A < a0 - TOL
    straddle = ~(right.all(axis=1) | left.all(axis=1))

    plain = np.flatnonzero(~straddle)
    if len(plain):
        Ap, Bp = A[plain][..., None], B[plain][..., None]
        xs = (Bp - b0s) / (a0 - Ap)
        lo[0, plain] = xs.min(axis=1)
        hi[0, plain] = xs.max(axis=1)

    st = np.flatnonzero(straddle)
    if len(st):
        As, Bs = A[st], B[st]
        cut_lo, cut_hi = _cut_b_range(As, Bs, a0)
        above = cut_lo[:, None] > b0s[None, :] + TOL
        below = cut_hi[:, None] < b0s[None, :] - TOL
        inside = ~(above | below)
        hit = inside.any(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = (Bs[..., None] - b0s) / (a0 - As[..., None])
        r_mask = right[st][..., None]
        l_mask = left[st][..., None]
        r_vals = np.where(r_mask, xs, np.nan)
        l_vals = np.where(l_mask, xs, np.nan)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r_max, r_min = np.nanmax(r_vals, axis=1), np.nanmin(r_vals, axis=1)
            l_max, l_min = np.nanmax(l_vals, axis=1), np.nanmin(l_vals, axis=1)
        has_r = right[st].any(axis=1)[:, None] & ~inside
        has_l = left[st].any(axis=1)[:, None] & ~inside
        # Cut above the coding point: right part runs to -inf, left part to +inf.
        lo[0, st] = np.where(has_r, np.where(above, -np.inf, r_min), np.nan)
        hi[0, st] = np.where(has_r, np.where(above, r_max, np.inf), np.nan)
        lo[1, st] = np.where(has_l, np.where(above, l_min, -np.inf), np.nan)
        hi[1, st] = np.where(has_l, np.where(above, np.inf, l_max), np.nan)
    return lo, hi, hit


def _collect(lo: np.ndarray, hi: np.ndarray) -> IntervalUnion:
    keep = ~np.isnan(lo)
    return normalize_intervals(lo[keep], hi[keep])


def default_exclusion_side(level: int) -> float:
    return 4.0 ** -(level + 2)


def line_section(f, e: Sloped, exclude_coding_point: bool = False, exclusion_side: float | None = None) -> IntervalUnion:
    """x-coordinates of ``e`` meeting the family: ``{(b - b0)/(a0 - a) : (a, b) in K}``.

    If ``(a0, b0)`` lies in the coding set, ``e`` belongs to the family; with
    ``exclude_coding_point`` a square of side ``exclusion_side`` around it is
    cut out of the code first, otherwise :class:`ProbeInFamilyError`.
    """
    if isinstance(e, Vertical):
        raise TypeError("vertical probes go through vertical_section")
    c = _cells_of(f)
    a0, b0 = float(e.a0), float(e.b0)
    if contains_point(c, (a0, b0)):
        if not exclude_coding_point:
            raise ProbeInFamilyError(f"line y = {a0} x + {b0} is coded by the family")
        side = default_exclusion_side(6) if exclusion_side is None else exclusion_side
        c = exclude_square(c, (a0, b0), side)
    lo, hi, _ = sloped_section_bounds(c, a0, np.array([b0]))
    return _collect(lo[..., 0], hi[..., 0])


def exclude_square(c: CellUnion, p, side: float) -> CellUnion:
    h = side / 2
    a0, b0 = p
    planes = [((1.0, 0.0), a0 + h), ((-1.0, 0.0), -(a0 - h)), ((0.0, 1.0), b0 + h), ((0.0, -1.0), -(b0 - h))]
    return subtract_convex(c, planes)


def section_via_radial(f, e: Sloped) -> IntervalUnion:
    """Same set as :func:`line_section`, computed from the radial projection of the code."""
    c = _cells_of(f)
    a0, b0 = float(e.a0), float(e.b0)
    if contains_point(c, (a0, b0)):
        raise ProbeInFamilyError(f"line y = {a0} x + {b0} is coded by the family")
    arcs = radial_project(c, (a0, b0))
    if arcs.full_circle:
        raise ProbeInFamilyError("viewpoint sees the full circle")
    lo, hi = [], []
    half = math.pi / 2
    for s, t in arcs:
        # Branch j is the open angle interval (half + (j-1) pi, half + j pi).
        j = math.floor((s - half) / math.pi) + 1
        while True:
            upper = half + j * math.pi
            lower = upper - math.pi
            p, q = max(s, lower), min(t, upper)
            if p <= q and not (p == q and (p == upper or p == lower)):
                x_hi = math.inf if p <= lower else -math.tan(p)
                x_lo = -math.inf if q >= upper else -math.tan(q)
                lo.append(x_lo)
                hi.append(x_hi)
            if t <= upper:
                break
            j += 1
    return normalize_intervals(np.array(lo), np.array(hi))


def slope_coverage(f) -> IntervalUnion:
    """Slopes of lines in the family: the a-projection of the code."""
    return ortho_project(_cells_of(f), (0.0, 1.0))


def raster_dual(f, viewport, width: int, height: int):
    """Column-exact occupancy raster of the family union.

    Returns ``(grid, fraction)``; ``grid[0]`` is the top row.
    """
    if width < 1 or height < 1:
        raise ValueError("raster needs at least one pixel")
    c = _cells_of(f)
    x0, y0, x1, y1 = viewport
    xs = x0 + (np.arange(width) + 0.5) * (x1 - x0) / width
    marks = np.zeros((width, height), dtype=bool)
    if len(c):
        step = max(1, 4_000_000 // max(1, len(c) * 4))
        for s in range(0, width, step):
            lo, hi = vertical_section_bounds(c, xs[s : s + step])
            _mark(marks[s : s + step], lo.T, hi.T, y0, y1, height)
    grid = marks.T[::-1].astype(np.uint8)
    return grid, float(grid.mean())


def _mark(marks: np.ndarray, lo: np.ndarray, hi: np.ndarray, y0: float, y1: float, height: int) -> None:
    """OR into ``marks[col, row]`` every pixel row met by the intervals ``lo/hi[col, i]``.

    Row ``r`` (from the bottom) spans ``[y0 + r dy, y0 + (r+1) dy]``.
    """
    dy = (y1 - y0) / height
    valid = ~np.isnan(lo) & (hi >= y0) & (lo <= y1)
    cols = np.broadcast_to(np.arange(lo.shape[0])[:, None], lo.shape)[valid]
    with np.errstate(invalid="ignore"):
        r0 = np.clip(np.floor((np.maximum(lo[valid], y0) - y0) / dy), 0, height - 1).astype(int)
        r1 = np.clip(np.floor((np.minimum(hi[valid], y1) - y0) / dy), 0, height - 1).astype(int)
    diff = np.zeros((lo.shape[0], height + 1), dtype=np.int64)
    np.add.at(diff, (cols, r0), 1)
    np.add.at(diff, (cols, r1 + 1), -1)
    marks |= np.cumsum(diff[:, :height], axis=1) > 0
