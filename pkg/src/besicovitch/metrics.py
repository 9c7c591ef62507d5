"""Hausdorff distance between cell unions with certified bounds.

The directed distance ``sup_{p in A} d(p, B)`` is bracketed by a quadtree
branch-and-bound over each cell of ``A``. A square block gets two upper
bounds: ``d(q, B) + |x - q|`` from the 1-Lipschitz property, and the largest
corner distance to the cell of ``B`` nearest ``q`` (distance to a convex cell
is convex). Blocks whose bound cannot beat the best genuine value found so
far are dropped. Blocks stop splitting at side ``h / 2``, which caps
``upper - lower`` at ``h * sqrt(2) / 2``, the same width as sampling every
cell on a grid of spacing ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geom.cells import CellUnion, GeometryError, closest_points, point_cell_distance


class EmptySetError(ValueError):
    pass


@dataclass(frozen=True)
class CertifiedDistance:
    lower: float
    upper: float
    sample_spacing: float

    def __contains__(self, value: float) -> bool:
        return self.lower - 1e-12 <= value <= self.upper + 1e-12

    @property
    def width(self) -> float:
        return self.upper - self.lower


_CORNERS = np.array([[-1, -1], [1, -1], [-1, 1], [1, 1]], dtype=float)


class UnionIndex:
    """Exact distance queries from many points to one cell union."""

    BRUTE_FORCE_CELLS = 32
    MAX_PAIRS = 100_000

    def __init__(self, c: CellUnion):
        if len(c) == 0:
            raise EmptySetError("distance to an empty union")
        self.verts = c.verts
        self.cent = c.centroids()
        self.radius = np.sqrt(((self.verts - self.cent[:, None, :]) ** 2).sum(-1)).max(axis=1)
        self.rmax = float(self.radius.max())
        self.solid = np.abs(c.areas()) > 0
        self.tree = cKDTree(self.cent) if len(c) > self.BRUTE_FORCE_CELLS else None

    def distance(self, pts) -> np.ndarray:
        return self.nearest(pts)[0]

    def nearest(self, pts):
        """Distances from each point to the union and the index of a cell attaining it."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.empty(len(pts))
        arg = np.empty(len(pts), dtype=np.int64)
        m = len(self.verts)
        if self.tree is None:
            chunk = max(1, self.MAX_PAIRS // m)
            for s in range(0, len(pts), chunk):
                p = pts[s : s + chunk]
                d = point_cell_distance(
                    np.repeat(p, m, axis=0), np.tile(self.verts, (len(p), 1, 1)), np.tile(self.solid, len(p))
                ).reshape(len(p), m)
                arg[s : s + chunk] = d.argmin(axis=1)
                out[s : s + chunk] = d[np.arange(len(p)), arg[s : s + chunk]]
            return out, arg
        chunk = 4096
        for s in range(0, len(pts), chunk):
            out[s : s + chunk], arg[s : s + chunk] = self._tree_nearest(pts[s : s + chunk])
        return out, arg

    def _tree_nearest(self, p: np.ndarray):
        _, near = self.tree.query(p)
        upper = point_cell_distance(p, self.verts[near], self.solid[near])
        cand = self.tree.query_ball_point(p, upper + self.rmax)
        lens = np.fromiter((len(x) for x in cand), dtype=np.int64, count=len(cand))
        idx = np.concatenate([np.asarray(x, dtype=np.int64) for x in cand])
        owner = np.repeat(np.arange(len(p)), lens)
        # Centroid filter with per-cell radii before exact distances.
        gap = np.sqrt(((p[owner] - self.cent[idx]) ** 2).sum(-1)) - self.radius[idx]
        keep = gap <= upper[owner]
        owner, idx = owner[keep], idx[keep]
        best = upper.copy()
        arg = near.astype(np.int64)
        for s in range(0, len(idx), self.MAX_PAIRS):
            o, i = owner[s : s + self.MAX_PAIRS], idx[s : s + self.MAX_PAIRS]
            d = point_cell_distance(p[o], self.verts[i], self.solid[i])
            # Per owner, the smallest candidate distance in this batch.
            order = np.lexsort((d, o))
            o, i, d = o[order], i[order], d[order]
            first = np.r_[True, o[1:] != o[:-1]]
            o, i, d = o[first], i[first], d[first]
            better = d < best[o]
            best[o[better]] = d[better]
            arg[o[better]] = i[better]
        return best, arg

    def hull_bound(self, pts: np.ndarray, cell: np.ndarray) -> np.ndarray:
        """Max over each row of ``pts`` (shape ``(n, r, 2)``) of the distance to ``cell[row]``.

        Distance to one convex cell is convex, so this bounds ``d(., union)``
        on the convex hull of each row.
        """
        n, r = pts.shape[:2]
        out = np.empty(n)
        step = max(1, self.MAX_PAIRS // r)
        for s in range(0, n, step):
            c = cell[s : s + step]
            v = np.repeat(self.verts[c], r, axis=0)
            d = point_cell_distance(pts[s : s + step].reshape(-1, 2), v, np.repeat(self.solid[c], r))
            out[s : s + step] = d.reshape(-1, r).max(axis=1)
        return out


def point_to_union_distance(p, c: CellUnion) -> float:
    return float(UnionIndex(c).distance(np.asarray(p, dtype=float))[0])


def directed_hausdorff(a: CellUnion, b: CellUnion | UnionIndex, h: float) -> CertifiedDistance:
    """Certified bounds on ``sup_{p in a} d(p, b)``.

    A region is settled once its bound is within ``h sqrt(2) / 2`` of the
    best genuine value, so the final gap never exceeds that.
    """
    if not h > 0:
        raise GeometryError("sample spacing must be positive")
    if len(a) == 0:
        raise EmptySetError("directed distance from an empty union")
    index = b if isinstance(b, UnionIndex) else UnionIndex(b)
    slack = h * math.sqrt(2) / 2

    lower = float(index.distance(a.verts.reshape(-1, 2)).max())
    upper = lower

    # Whole cells first: centroid value plus circumradius.
    cent = a.centroids()
    rad = np.sqrt(((a.verts - cent[:, None, :]) ** 2).sum(-1)).max(axis=1)
    fc, near = index.nearest(cent)
    lower = max(lower, float(fc.max()))
    bound = np.minimum(fc + rad, index.hull_bound(a.verts, near))
    settled = bound <= lower + slack
    if settled.any():
        upper = max(upper, float(bound[settled].max()))
    owner = np.flatnonzero(~settled & (bound > lower))

    lo = a.verts[owner].min(axis=1)
    hi = a.verts[owner].max(axis=1)
    centers = (lo + hi) / 2
    half = (hi - lo).max(axis=1) / 2
    while len(owner):
        cells = a.verts[owner]
        q = closest_points(centers, cells)
        off = np.sqrt(((centers - q) ** 2).sum(-1))
        halfdiag = half * math.sqrt(2)
        alive = off <= halfdiag * (1 + 1e-12)
        if not alive.all():
            centers, half, owner, q, off, halfdiag = (
                centers[alive], half[alive], owner[alive], q[alive], off[alive], halfdiag[alive],
            )
        if not len(owner):
            break
        fq, near = index.nearest(q)
        lower = max(lower, float(fq.max()))
        bound = fq + halfdiag + off
        # Only blocks the Lipschitz bound leaves undecided pay for the corner bound.
        undecided = (bound > lower + slack) & (4 * half > h)
        if undecided.any():
            sq = centers[undecided, None, :] + _CORNERS[None] * half[undecided, None, None]
            bound[undecided] = np.minimum(bound[undecided], index.hull_bound(sq, near[undecided]))
        open_ = bound > lower
        leaf = open_ & ((bound <= lower + slack) | (4 * half <= h))
        if leaf.any():
            upper = max(upper, float(bound[leaf].max()))
        split = open_ & ~leaf
        if not split.any():
            break
        c, hs, ow = centers[split], half[split] / 2, owner[split]
        centers = (c[:, None, :] + _CORNERS[None] * hs[:, None, None]).reshape(-1, 2)
        half = np.repeat(hs, 4)
        owner = np.repeat(ow, 4)
    return CertifiedDistance(lower, max(upper, lower), h)


def hausdorff(a: CellUnion, b: CellUnion, h: float) -> CertifiedDistance:
    """Certified Hausdorff distance: ``lower <= d_H(a, b) <= upper``."""
    if len(a) == 0 or len(b) == 0:
        raise EmptySetError("Hausdorff distance needs nonempty sets")
    if not h > 0:
        raise GeometryError("sample spacing must be positive")
    ab = directed_hausdorff(a, b, h)
    ba = directed_hausdorff(b, a, h)
    return CertifiedDistance(max(ab.lower, ba.lower), max(ab.upper, ba.upper), h)


@dataclass
class AxiomReport:
    checked: int
    violations: list[str]

    @property
    def passed(self) -> bool:
        return not self.violations


def metric_axiom_suite(triples, h: float) -> AxiomReport:
    """Check identity, symmetry and the triangle inequality on certified intervals."""
    violations = []
    n = 0
    for i, (A, B, C) in enumerate(triples):
        n += 1
        aa = hausdorff(A, A, h)
        if aa.lower != 0.0:
            violations.append(f"triple {i}: d(A,A) lower = {aa.lower}")
        ab, ba = hausdorff(A, B, h), hausdorff(B, A, h)
        if ab.lower > ba.upper + 1e-12 or ba.lower > ab.upper + 1e-12:
            violations.append(f"triple {i}: asymmetric intervals {ab} vs {ba}")
        bc, ac = hausdorff(B, C, h), hausdorff(A, C, h)
        if ac.lower > ab.upper + bc.upper + 1e-12:
            violations.append(f"triple {i}: triangle inequality fails")
    return AxiomReport(n, violations)
