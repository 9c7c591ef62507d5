"""Unions of closed intervals on the line and of arcs on the unit circle.

Both containers hold numpy arrays so that projections of ~10^6 cells can be
merged in one sort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TOL = 1e-12
TWO_PI = 2.0 * math.pi


class InvalidIntervalError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals ``[lo[i], hi[i]]``.

    Endpoints may be infinite. Build through :func:`normalize_intervals`
    unless the arrays are already normalized.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        for arr in (self.lo, self.hi):
            arr.flags.writeable = False

    @classmethod
    def empty(cls) -> IntervalUnion:
        return cls(np.empty(0), np.empty(0))

    def __len__(self):
        return len(self.lo)

    def __iter__(self):
        return iter(zip(self.lo.tolist(), self.hi.tolist()))

    def __repr__(self):
        return f"IntervalUnion({list(self)!r})"

    def as_list(self) -> list[tuple[float, float]]:
        return list(self)

    def measure(self) -> float:
        return measure(self)

    def scaled(self, factor: float) -> IntervalUnion:
        if factor >= 0:
            return IntervalUnion(self.lo * factor, self.hi * factor)
        return IntervalUnion(self.hi[::-1] * factor, self.lo[::-1] * factor)

    def clipped(self, a: float, b: float) -> IntervalUnion:
        """Intersection with the closed window ``[a, b]``."""
        lo = np.maximum(self.lo, a)
        hi = np.minimum(self.hi, b)
        keep = lo <= hi
        return IntervalUnion(lo[keep], hi[keep])

    def union(self, other: IntervalUnion) -> IntervalUnion:
        return normalize_intervals(
            np.concatenate([self.lo, other.lo]), np.concatenate([self.hi, other.hi])
        )

    def contains(self, other: IntervalUnion, tol: float = TOL) -> bool:
        """True when every interval of ``other`` lies inside one of ours."""
        if len(other) == 0:
            return True
        if len(self) == 0:
            return False
        idx = np.searchsorted(self.lo, other.lo + tol, side="right") - 1
        ok = idx >= 0
        idx = np.clip(idx, 0, len(self) - 1)
        ok &= self.lo[idx] <= other.lo + tol
        ok &= self.hi[idx] >= other.hi - tol
        return bool(ok.all())

    def covers(self, a: float, b: float, tol: float = TOL) -> bool:
        return self.contains(IntervalUnion(np.array([a]), np.array([b])), tol)

    def close_to(self, other: IntervalUnion, tol: float = 1e-9) -> bool:
        """Endpoint-wise comparison, relative for large finite endpoints."""
        if len(self) != len(other):
            return False
        return _endpoints_close(self.lo, other.lo, tol) and _endpoints_close(
            self.hi, other.hi, tol
        )


def _endpoints_close(x, y, tol):
    inf_x, inf_y = np.isinf(x), np.isinf(y)
    if not np.array_equal(inf_x, inf_y):
        return False
    if not np.array_equal(x[inf_x], y[inf_y]):
        return False
    fx, fy = x[~inf_x], y[~inf_y]
    scale = np.maximum(1.0, np.maximum(np.abs(fx), np.abs(fy)))
    return bool(np.all(np.abs(fx - fy) <= tol * scale))


def normalize_intervals(lo, hi=None, tol: float = TOL) -> IntervalUnion:
    """Sort and merge closed intervals; touching or overlapping ones fuse.

    Accepts either a sequence of ``(lower, upper)`` pairs or two arrays.

    >>> normalize_intervals([(0, 1), (0.5, 2)])
    IntervalUnion([(0.0, 2.0)])
    >>> normalize_intervals([(2, 3), (0, 1), (1, 2)])
    IntervalUnion([(0.0, 3.0)])
    """
    if hi is None:
        pairs = np.asarray(lo, dtype=float).reshape(-1, 2)
        lo, hi = pairs[:, 0], pairs[:, 1]
    else:
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
    if lo.shape != hi.shape:
        raise InvalidIntervalError("lower and upper endpoint arrays differ in length")
    if len(lo) == 0:
        return IntervalUnion.empty()
    if np.isnan(lo).any() or np.isnan(hi).any():
        raise InvalidIntervalError("NaN endpoint")
    bad = lo > hi
    if bad.any():
        i = int(np.argmax(bad))
        raise InvalidIntervalError(f"interval with lower > upper: [{lo[i]}, {hi[i]}]")
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    starts = np.empty(len(lo), dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] > reach[:-1] + tol
    first = np.flatnonzero(starts)
    last = np.append(first[1:] - 1, len(lo) - 1)
    return IntervalUnion(lo[first].copy(), reach[last].copy())


def measure(u: IntervalUnion) -> float:
    """Lebesgue measure; ``inf`` if any endpoint is infinite."""
    if len(u) == 0:
        return 0.0
    if np.isinf(u.lo).any() or np.isinf(u.hi).any():
        return math.inf
    return float(np.sum(u.hi - u.lo))


@dataclass(frozen=True, eq=False)
class ArcUnion:
    """Disjoint counter-clockwise arcs ``[start, end]`` on the unit circle.

    ``start`` lies in ``[0, 2pi)`` and ``end - start`` in ``[0, 2pi)``, so an
    arc crossing angle 0 keeps ``end > 2pi``. Zero-length arcs (single
    directions) are retained; they carry no measure.
    """

    start: np.ndarray
    end: np.ndarray
    full_circle: bool = False

    def __post_init__(self):
        for arr in (self.start, self.end):
            arr.flags.writeable = False

    @classmethod
    def empty(cls) -> ArcUnion:
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def full(cls) -> ArcUnion:
        return cls(np.empty(0), np.empty(0), True)

    def __len__(self):
        return len(self.start)

    def __iter__(self):
        return iter(zip(self.start.tolist(), self.end.tolist()))

    def __repr__(self):
        if self.full_circle:
            return "ArcUnion(full_circle)"
        return f"ArcUnion({list(self)!r})"

    def measure(self) -> float:
        return arc_measure(self)

    def contains(self, other: ArcUnion, tol: float = TOL) -> bool:
        if self.full_circle:
            return True
        if other.full_circle:
            return False
        if len(other) == 0:
            return True
        if len(self) == 0:
            return False
        # Unroll our arcs over three turns so wrapping arcs are tested linearly.
        lo = np.concatenate([self.start - TWO_PI, self.start, self.start + TWO_PI])
        hi = np.concatenate([self.end - TWO_PI, self.end, self.end + TWO_PI])
        outer = IntervalUnion(lo, hi)
        inner = IntervalUnion(other.start, other.end)
        # lo is sorted because start is sorted and every start < 2pi.
        return outer.contains(inner, tol)


def normalize_arcs(raw, tol: float = TOL) -> ArcUnion:
    """Merge arcs given as ``(start, end)`` pairs, read counter-clockwise.

    An end smaller than its start wraps through angle 0. A pair whose span
    is at least ``2pi`` is the whole circle.

    >>> normalize_arcs([(0, math.pi), (math.pi, 2 * math.pi)])
    ArcUnion(full_circle)
    """
    pairs = np.asarray(raw, dtype=float).reshape(-1, 2)
    return _normalize_arc_arrays(pairs[:, 0], pairs[:, 1], tol)


def _normalize_arc_arrays(start, end, tol=TOL) -> ArcUnion:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    if len(start) == 0:
        return ArcUnion.empty()
    if not (np.isfinite(start).all() and np.isfinite(end).all()):
        raise ValueError("arc angles must be finite")
    length = end - start
    length = np.where(length < 0, length + TWO_PI * np.ceil(-length / TWO_PI), length)
    if (length >= TWO_PI - tol).any():
        return ArcUnion.full()
    s = np.mod(start, TWO_PI)
    s = np.where(s >= TWO_PI, 0.0, s)
    u = normalize_intervals(s, s + length, tol)
    lo, hi = u.lo.tolist(), u.hi.tolist()
    # The last arc may run past 2pi and swallow leading arcs.
    while len(lo) > 1 and hi[-1] - TWO_PI >= lo[0] - tol:
        hi[-1] = max(hi[-1], hi[0] + TWO_PI)
        lo.pop(0)
        hi.pop(0)
    lo_a, hi_a = np.array(lo), np.array(hi)
    if np.sum(hi_a - lo_a) >= TWO_PI - tol:
        return ArcUnion.full()
    return ArcUnion(lo_a, hi_a)


def arc_measure(a: ArcUnion) -> float:
    if a.full_circle:
        return TWO_PI
    return float(min(TWO_PI, np.sum(a.end - a.start)))
