"""Hypothesis strategies for cells and unions."""

import math

import numpy as np
from hypothesis import strategies as st

from besicovitch.geom import CellUnion

coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def rects(draw, lo=-2.0, hi=2.0, min_side=0.01, max_side=1.5):
    x0 = draw(st.floats(lo, hi))
    y0 = draw(st.floats(lo, hi))
    w = draw(st.floats(min_side, max_side))
    h = draw(st.floats(min_side, max_side))
    return (x0, y0, x0 + w, y0 + h)


@st.composite
def convex_polygons(draw):
    """Polygons inscribed in a circle: angles sorted ccw, so convex by construction."""
    n = draw(st.integers(3, 7))
    cx, cy = draw(coord), draw(coord)
    r = draw(st.floats(0.05, 1.5))
    gaps = draw(st.lists(st.floats(0.2, 1.0), min_size=n, max_size=n))
    phase = draw(st.floats(0, 2 * math.pi))
    ang = phase + np.cumsum(gaps) / sum(gaps) * 2 * math.pi
    return [(cx + r * math.cos(a), cy + r * math.sin(a)) for a in ang]


@st.composite
def rect_unions(draw, max_cells=6):
    rs = draw(st.lists(rects(), min_size=1, max_size=max_cells))
    return CellUnion.from_rects(rs)


@st.composite
def polygon_unions(draw, max_cells=5):
    ps = draw(st.lists(convex_polygons(), min_size=1, max_size=max_cells))
    return CellUnion.from_polygons(ps)


angles = st.floats(0, math.pi, allow_nan=False)
