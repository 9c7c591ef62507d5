"""Finite unions of convex polygonal cells.

A :class:`CellUnion` stores its cells as one ``(m, k, 2)`` float array.
Cells with fewer than ``k`` vertices are padded by repeating their last
vertex; every routine here treats the resulting zero-length edges as
no-ops, so mixed vertex counts cost nothing beyond memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .intervals import TOL

Rect = tuple[float, float, float, float]  # (x0, y0, x1, y1)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class AffineMap:
    """``p -> linear @ p + translation``."""

    linear: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)  # row-major
    translation: tuple[float, float] = (0.0, 0.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.linear, dtype=float).reshape(2, 2)

    @property
    def offset(self) -> np.ndarray:
        return np.array(self.translation, dtype=float)

    @property
    def det(self) -> float:
        m11, m12, m21, m22 = self.linear
        return m11 * m22 - m12 * m21

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.matrix.T + self.offset

    def __matmul__(self, other: AffineMap) -> AffineMap:
        """Composition: ``(self @ other)(p) == self(other(p))``."""
        lin = self.matrix @ other.matrix
        off = self.matrix @ other.offset + self.offset
        return AffineMap(tuple(lin.ravel().tolist()), tuple(off.tolist()))

    def inverse(self) -> AffineMap:
        if abs(self.det) <= TOL:
            raise GeometryError("singular affine map")
        inv = np.linalg.inv(self.matrix)
        return AffineMap(tuple(inv.ravel().tolist()), tuple((-inv @ self.offset).tolist()))

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    @classmethod
    def rotation(cls, theta: float) -> AffineMap:
        c, s = math.cos(theta), math.sin(theta)
        return cls((c, -s, s, c))

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None) -> AffineMap:
        return cls((sx, 0.0, 0.0, sx if sy is None else sy))

    @classmethod
    def translate(cls, tx: float, ty: float) -> AffineMap:
        return cls(translation=(tx, ty))

    @classmethod
    def rect_to_rect(cls, src: Rect, dst: Rect) -> AffineMap:
        sx0, sy0, sx1, sy1 = src
        dx0, dy0, dx1, dy1 = dst
        kx = (dx1 - dx0) / (sx1 - sx0)
        ky = (dy1 - dy0) / (sy1 - sy0)
        return cls((kx, 0.0, 0.0, ky), (dx0 - kx * sx0, dy0 - ky * sy0))


def _signed_area(verts: np.ndarray) -> np.ndarray:
    x, y = verts[..., 0], verts[..., 1]
    xn, yn = np.roll(x, -1, axis=-1), np.roll(y, -1, axis=-1)
    return 0.5 * np.sum(x * yn - xn * y, axis=-1)


def _pad(polys: Sequence[np.ndarray], k: int | None = None) -> np.ndarray:
    if k is None:
        k = max(len(p) for p in polys)
    out = np.empty((len(polys), k, 2))
    for i, p in enumerate(polys):
        n = len(p)
        out[i, :n] = p
        out[i, n:] = p[-1]
    return out


def _repad(verts: np.ndarray, k: int) -> np.ndarray:
    if verts.shape[1] == k:
        return verts
    extra = np.repeat(verts[:, -1:, :], k - verts.shape[1], axis=1)
    return np.concatenate([verts, extra], axis=1)


class CellUnion:
    """Immutable finite union of convex cells (counter-clockwise vertices)."""

    __slots__ = ("verts",)

    def __init__(self, verts, *, validate: bool = False):
        v = np.array(verts, dtype=float)
        if v.size == 0:
            v = np.empty((0, 1, 2))
        if v.ndim != 3 or v.shape[2] != 2 or v.shape[1] < 1:
            raise GeometryError(f"cell array must have shape (m, k, 2), got {v.shape}")
        if not np.isfinite(v).all():
            raise GeometryError("non-finite vertex")
        if validate:
            _check_convex(v)
        v.flags.writeable = False
        self.verts = v

    @classmethod
    def empty(cls) -> CellUnion:
        return cls(np.empty((0, 1, 2)))

    @classmethod
    def from_rects(cls, rects) -> CellUnion:
        r = np.asarray(rects, dtype=float).reshape(-1, 4)
        if (r[:, 0] > r[:, 2]).any() or (r[:, 1] > r[:, 3]).any():
            raise GeometryError("rectangle with x0 > x1 or y0 > y1")
        x0, y0, x1, y1 = r.T
        v = np.stack(
            [np.stack([x0, y0], -1), np.stack([x1, y0], -1),
             np.stack([x1, y1], -1), np.stack([x0, y1], -1)],
            axis=1,
        )
        return cls(v)

    @classmethod
    def from_polygons(cls, polys) -> CellUnion:
        """Cells from vertex lists; clockwise input is reoriented."""
        arrs = []
        for p in polys:
            a = np.asarray(p, dtype=float).reshape(-1, 2)
            if len(a) == 0:
                raise GeometryError("polygon without vertices")
            if len(a) >= 3 and _signed_area(a) < 0:
                a = a[::-1]
            arrs.append(a)
        if not arrs:
            return cls.empty()
        return cls(_pad(arrs), validate=True)

    @classmethod
    def concat(cls, parts: Sequence[CellUnion]) -> CellUnion:
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        k = max(p.verts.shape[1] for p in parts)
        return cls(np.concatenate([_repad(p.verts, k) for p in parts]))

    def __len__(self):
        return self.verts.shape[0]

    def __repr__(self):
        return f"CellUnion({len(self)} cells, k={self.verts.shape[1]})"

    def __eq__(self, other):
        if not isinstance(other, CellUnion):
            return NotImplemented
        return self.verts.shape == other.verts.shape and bool(np.array_equal(self.verts, other.verts))

    def __hash__(self):
        return hash((self.verts.shape, self.verts.tobytes()))

    def polygons(self) -> list[np.ndarray]:
        """Cells with padding removed."""
        out = []
        for v in self.verts:
            keep = np.ones(len(v), dtype=bool)
            keep[1:] = np.any(np.abs(np.diff(v, axis=0)) > 0, axis=1)
            p = v[keep]
            if len(p) > 1 and np.array_equal(p[0], p[-1]):
                p = p[:-1]
            out.append(p)
        return out

    def areas(self) -> np.ndarray:
        return _signed_area(self.verts)

    def centroids(self) -> np.ndarray:
        return self.verts.mean(axis=1)

    def bbox(self) -> Rect:
        if len(self) == 0:
            raise GeometryError("bounding box of an empty union")
        lo = self.verts.min(axis=(0, 1))
        hi = self.verts.max(axis=(0, 1))
        return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    def diameter(self) -> float:
        """Diameter of the union (vertex hull)."""
        if len(self) == 0:
            return 0.0
        pts = np.unique(self.verts.reshape(-1, 2), axis=0)
        if len(pts) > 2000:
            from scipy.spatial import ConvexHull, QhullError

            try:
                pts = pts[ConvexHull(pts).vertices]
            except QhullError:
                pass
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())


def _check_convex(v: np.ndarray) -> None:
    e = np.roll(v, -1, axis=1) - v
    en = np.roll(e, -1, axis=1)
    cross = e[..., 0] * en[..., 1] - e[..., 1] * en[..., 0]
    scale = np.linalg.norm(e, axis=-1) * np.linalg.norm(en, axis=-1)
    bad = cross < -TOL * np.maximum(scale, 1.0)
    if bad.any():
        i = int(np.argmax(bad.any(axis=1)))
        raise GeometryError(f"cell {i} is not convex and counter-clockwise")


def apply_affine(c: CellUnion, m: AffineMap) -> CellUnion:
    """Map vertices; reflections reverse vertex order to stay counter-clockwise."""
    v = m(c.verts)
    if m.det < 0:
        v = v[:, ::-1, :]
    return CellUnion(v)


# -- clipping ---------------------------------------------------------------


def _clip_halfplane(v: np.ndarray, n, c: float, tol: float = TOL):
    """Keep ``{p : n . p <= c}`` of every cell (vectorised Sutherland-Hodgman).

    Returns ``(verts, kept)``; ``kept`` indexes the input cells that survive.
    """
    m, k, _ = v.shape
    if m == 0:
        return v, np.empty(0, dtype=int)
    n = np.asarray(n, dtype=float)
    d = v @ n - c
    inside = d <= tol
    vn = np.roll(v, -1, axis=1)
    dn = np.roll(d, -1, axis=1)
    insn = np.roll(inside, -1, axis=1)
    crossing = inside != insn
    denom = np.where(crossing, d - dn, 1.0)
    t = np.clip(np.where(crossing, d / denom, 0.0), 0.0, 1.0)
    xpt = v + t[..., None] * (vn - v)
    slots = np.empty((m, 2 * k, 2))
    slots[:, 0::2] = v
    slots[:, 1::2] = xpt
    valid = np.empty((m, 2 * k), dtype=bool)
    valid[:, 0::2] = inside
    valid[:, 1::2] = crossing
    counts = valid.sum(axis=1)
    kept = np.flatnonzero(counts > 0)
    if len(kept) == 0:
        return np.empty((0, 1, 2)), kept
    slots, valid, counts = slots[kept], valid[kept], counts[kept]
    order = np.argsort(~valid, axis=1, kind="stable")
    slots = np.take_along_axis(slots, order[..., None], axis=1)
    width = int(counts.max())
    slots = slots[:, :width]
    fill = np.arange(width)[None, :] >= counts[:, None]
    last = slots[np.arange(len(kept)), counts - 1]
    slots = np.where(fill[..., None], last[:, None, :], slots)
    return slots, kept


def clip_halfplane(c: CellUnion, n, offset: float) -> CellUnion:
    v, _ = _clip_halfplane(c.verts, n, offset)
    return CellUnion(v)


def _rect_halfplanes(rect: Rect):
    x0, y0, x1, y1 = rect
    return [((1.0, 0.0), x1), ((-1.0, 0.0), -x0), ((0.0, 1.0), y1), ((0.0, -1.0), -y0)]


def clip_rect(c: CellUnion, rect: Rect) -> CellUnion:
    """Intersect every cell with an axis-aligned rectangle; empty cells vanish."""
    v = c.verts
    for n, off in _rect_halfplanes(rect):
        v, _ = _clip_halfplane(v, n, off)
    return CellUnion(v)


def subtract_convex(c: CellUnion, halfplanes) -> CellUnion:
    """Cells minus the interior of a convex polygon given as ``n . p <= c`` rows.

    Each cell splits into at most ``len(halfplanes)`` convex pieces:
    piece ``j`` lies outside plane ``j`` and inside planes ``0..j-1``.
    """
    work = c.verts
    pieces = []
    for n, off in halfplanes:
        n = np.asarray(n, dtype=float)
        out, _ = _clip_halfplane(work, -n, -off)
        if len(out):
            pieces.append(CellUnion(out))
        work, _ = _clip_halfplane(work, n, off)
        if len(work) == 0:
            break
    return CellUnion.concat(pieces)


def polygon_halfplanes(poly: np.ndarray):
    """Half-plane rows ``(n, c)`` of a counter-clockwise convex polygon."""
    e = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    offs = np.einsum("ij,ij->i", normals, poly)
    return [(normals[i], float(offs[i])) for i in range(len(poly))]


def regular_polygon(center, radius: float, sides: int = 16, *, circumscribed: bool) -> np.ndarray:
    """Regular polygon around a disk.

    ``circumscribed=True`` gives the polygon whose edges touch the disk from
    outside (apothem = radius); otherwise its vertices lie on the circle.
    """
    r = radius / math.cos(math.pi / sides) if circumscribed else radius
    ang = (2 * np.arange(sides) + 1) * math.pi / sides
    return np.asarray(center, dtype=float) + r * np.stack([np.cos(ang), np.sin(ang)], axis=1)


# -- Minkowski dilation -------------------------------------------------------


def _edge_angles(v: np.ndarray) -> np.ndarray:
    e = np.roll(v, -1, axis=-2) - v
    return np.mod(np.arctan2(e[..., 1], e[..., 0]), 2 * math.pi), e


def _lowest_vertex(v: np.ndarray) -> np.ndarray:
    """Index of the minimum-y vertex (ties: minimum x) of each cell."""
    y = v[..., 1]
    ymin = y.min(axis=-1, keepdims=True)
    x = np.where(y == ymin, v[..., 0], np.inf)
    return np.argmin(x, axis=-1)


def minkowski_sum(c: CellUnion, poly: np.ndarray) -> CellUnion:
    """Per-cell Minkowski sum with one convex polygon, by edge-angle merging."""
    if len(c) == 0:
        return c
    poly = np.asarray(poly, dtype=float)
    v = c.verts
    m, k, _ = v.shape
    ang_c, e_c = _edge_angles(v)
    ang_p, e_p = _edge_angles(poly)
    # Rotate each cell so its lowest vertex comes first; edge order follows.
    lo_c = _lowest_vertex(v)
    shift = (np.arange(k)[None, :] + lo_c[:, None]) % k
    ang_c = np.take_along_axis(ang_c, shift, axis=1)
    e_c = np.take_along_axis(e_c, shift[..., None], axis=1)
    start = v[np.arange(m), lo_c] + poly[_lowest_vertex(poly)]
    # Edges leaving the lowest vertex have the smallest angles once the
    # sequence is rotated, except exact-zero-length padding edges.
    ang = np.concatenate([ang_c, np.broadcast_to(ang_p, (m, len(poly)))], axis=1)
    edges = np.concatenate([e_c, np.broadcast_to(e_p, (m, len(poly), 2))], axis=1)
    zero = np.all(edges == 0.0, axis=-1)
    ang = np.where(zero, 4 * math.pi, ang)
    order = np.argsort(ang, axis=1, kind="stable")
    edges = np.take_along_axis(edges, order[..., None], axis=1)
    pts = start[:, None, :] + np.cumsum(edges[:, :-1, :], axis=1)
    out = np.concatenate([start[:, None, :], pts], axis=1)
    # Past the last genuine edge the walk is back at the start up to rounding;
    # turn those slots into exact padding.
    nz = (~zero).sum(axis=1)
    pad = np.arange(out.shape[1])[None, :] >= nz[:, None]
    last = out[np.arange(m), np.maximum(nz - 1, 0)]
    out = np.where(pad[..., None], last[:, None, :], out)
    return CellUnion(out)


def dilate(c: CellUnion, r: float, sides: int = 16) -> CellUnion:
    """Cover of the closed ``r``-neighbourhood: sum with a circumscribed ``sides``-gon."""
    if not r > 0:
        raise GeometryError("dilation radius must be positive")
    return minkowski_sum(c, regular_polygon((0.0, 0.0), r, sides, circumscribed=True))


# -- point/cell predicates ------------------------------------------------------


def _edge_data(v: np.ndarray):
    e = np.roll(v, -1, axis=-2) - v
    l2 = e[..., 0] ** 2 + e[..., 1] ** 2
    return e, l2


def _feet(p: np.ndarray, v: np.ndarray):
    """Per edge: nearest points on the edge segment and the cross sign data."""
    e, l2 = _edge_data(v)
    rel = p[..., None, :] - v
    dot = rel[..., 0] * e[..., 0] + rel[..., 1] * e[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(l2 > 0, dot / l2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    dx = rel[..., 0] - t * e[..., 0]
    dy = rel[..., 1] - t * e[..., 1]
    cross = e[..., 0] * rel[..., 1] - e[..., 1] * rel[..., 0]
    return dx, dy, cross, e, l2, t


def _solid(v: np.ndarray, tol: float = 0.0) -> np.ndarray:
    return np.abs(_signed_area(v)) > tol


def signed_edge_distance(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Minimum over edges of the signed distance to the edge line (positive inside).

    ``p`` has shape ``(..., 2)`` aligned with cells ``v`` of shape ``(..., k, 2)``.
    Zero-length edges are ignored.
    """
    e, l2 = _edge_data(v)
    rel = p[..., None, :] - v
    cross = e[..., 0] * rel[..., 1] - e[..., 1] * rel[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        sd = np.where(l2 > 0, cross / np.sqrt(np.where(l2 > 0, l2, 1.0)), np.inf)
    return sd.min(axis=-1)


def boundary_distance(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unsigned distance from points to cell boundaries (aligned shapes)."""
    dx, dy, *_ = _feet(p, v)
    return np.sqrt(np.min(dx * dx + dy * dy, axis=-1))


def point_cell_distance(p: np.ndarray, v: np.ndarray, solid: np.ndarray | None = None) -> np.ndarray:
    """Exact Euclidean distance from points to convex cells (0 inside)."""
    dx, dy, cross, *_ = _feet(p, v)
    d = np.sqrt(np.min(dx * dx + dy * dy, axis=-1))
    if solid is None:
        solid = _solid(v)
    inside = solid & (cross >= 0).all(axis=-1)
    return np.where(inside, 0.0, d)


def closest_points(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Nearest point of each convex cell to the aligned query point."""
    dx, dy, cross, e, l2, t = _feet(p, v)
    j = np.argmin(dx * dx + dy * dy, axis=-1)[..., None]
    vj = np.take_along_axis(v, j[..., None], axis=-2)[..., 0, :]
    ej = np.take_along_axis(e, j[..., None], axis=-2)[..., 0, :]
    tj = np.take_along_axis(t, j, axis=-1)
    best = vj + tj * ej
    inside = _solid(v) & (cross >= 0).all(axis=-1)
    return np.where(inside[..., None], p, best)


def classify_point(c: CellUnion, p) -> np.ndarray:
    """Per cell: 1 if ``p`` is strictly interior, 0 on the boundary, -1 outside."""
    p = np.asarray(p, dtype=float)
    v = c.verts
    out = np.full(len(v), -1, dtype=int)
    near = np.flatnonzero(
        (v[..., 0].min(axis=1) <= p[0] + TOL) & (v[..., 0].max(axis=1) >= p[0] - TOL)
        & (v[..., 1].min(axis=1) <= p[1] + TOL) & (v[..., 1].max(axis=1) >= p[1] - TOL)
    )
    if len(near) == 0:
        return out
    vn = v[near]
    pp = np.broadcast_to(p, (len(vn), 2))
    sd = signed_edge_distance(pp, vn)
    bd = boundary_distance(pp, vn)
    sub = np.full(len(vn), -1, dtype=int)
    sub[bd <= TOL] = 0
    sub[_solid(vn, TOL * TOL) & (sd > TOL)] = 1
    out[near] = sub
    return out


def contains_point(c: CellUnion, p) -> bool:
    """True when ``p`` lies in some cell (boundary included)."""
    if len(c) == 0:
        return False
    return bool((classify_point(c, p) >= 0).any())
