import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besicovitch.geom import UNIT_SQUARE, AffineMap, CellUnion, GeometryError, apply_affine, dilate
from besicovitch.metrics import (
    EmptySetError,
    UnionIndex,
    directed_hausdorff,
    hausdorff,
    metric_axiom_suite,
    point_to_union_distance,
)

from oracles import point_polygon_distance, point_union_distance, sampled_directed_hausdorff
from strategies import convex_polygons, polygon_unions, rect_unions, rects

HALF_DIAG = math.sqrt(2) / 2


def exact_convex_hausdorff(p, q):
    """d(., Q) is convex for convex Q, so sup over P sits at a vertex of P."""
    pq = max(point_polygon_distance(v, q) for v in p)
    qp = max(point_polygon_distance(v, p) for v in q)
    return max(pq, qp)


def polys(c):
    return [[tuple(v) for v in p] for p in c.polygons()]


class TestPointDistance:
    def test_inside(self):
        assert point_to_union_distance((0.3, 0.4), UNIT_SQUARE) == 0.0

    def test_from_point_cell(self):
        assert point_to_union_distance((3.0, 4.0), CellUnion.from_polygons([[(0.0, 0.0)]])) == 5.0

    def test_nearest_edge(self):
        assert point_to_union_distance((2.0, 0.5), UNIT_SQUARE) == 1.0

    def test_empty(self):
        with pytest.raises(EmptySetError):
            point_to_union_distance((0, 0), CellUnion.empty())

    def test_tree_path_matches_brute_force(self):
        rng = np.random.default_rng(11)
        lo = rng.uniform(-3, 3, size=(200, 2))
        c = CellUnion.from_rects(np.concatenate([lo, lo + rng.uniform(0.01, 0.2, size=(200, 2))], axis=1))
        assert len(c) > UnionIndex.BRUTE_FORCE_CELLS
        pts = rng.uniform(-5, 5, size=(50, 2))
        got, cell = UnionIndex(c).nearest(pts)
        want = [point_union_distance(tuple(p), polys(c)) for p in pts]
        assert np.allclose(got, want, atol=1e-12)
        attained = [point_polygon_distance(tuple(p), polys(c)[j]) for p, j in zip(pts, cell)]
        assert np.allclose(attained, want, atol=1e-12)


class TestHausdorff:
    def test_identical(self):
        h = 0.01
        d = hausdorff(UNIT_SQUARE, UNIT_SQUARE, h)
        assert d.lower == 0.0 and d.upper <= h * HALF_DIAG

    def test_nested_squares(self):
        d = hausdorff(UNIT_SQUARE, CellUnion.from_rects([(0, 0, 2, 2)]), 0.01)
        assert math.sqrt(2) in d
        assert d.lower == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_errors(self):
        with pytest.raises(EmptySetError):
            hausdorff(CellUnion.empty(), UNIT_SQUARE, 0.1)
        with pytest.raises(GeometryError):
            hausdorff(UNIT_SQUARE, UNIT_SQUARE, 0.0)

    def test_directed_is_asymmetric(self):
        big = CellUnion.from_rects([(0, 0, 2, 2)])
        assert directed_hausdorff(UNIT_SQUARE, big, 0.01).upper <= 0.01
        assert directed_hausdorff(big, UNIT_SQUARE, 0.01).lower == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("h", [0.1, 0.05, 0.025, 0.0125])
    def test_width_shrinks_with_h(self, h):
        a = CellUnion.from_rects([(0, 0, 1, 1), (2, 0, 3, 1)])
        b = CellUnion.from_rects([(0.2, 0.1, 0.9, 0.8)])
        d = hausdorff(a, b, h)
        assert d.width <= h * HALF_DIAG + 1e-15

    def test_translated_squares_triple(self):
        t = 0.37
        a = UNIT_SQUARE
        b = apply_affine(a, AffineMap.translate(t, 0.0))
        c = apply_affine(a, AffineMap.translate(2 * t, 0.0))
        h = 1e-3
        for (x, y), want in [((a, b), t), ((b, c), t), ((a, c), 2 * t)]:
            assert want in hausdorff(x, y, h)
        rep = metric_axiom_suite([(a, b, c), (a, a, a)], h)
        assert rep.passed and rep.checked == 2

    def test_dilation_bound(self):
        r = 0.2
        c = CellUnion.from_rects([(0, 0, 1, 1), (2, 2, 2.5, 3)])
        h = 1e-3
        d = hausdorff(c, dilate(c, r), h)
        overshoot = r / math.cos(math.pi / 16) - r
        assert d.upper <= r + overshoot + h * HALF_DIAG
        assert d.lower >= r - 1e-12


@given(convex_polygons(), convex_polygons(), st.sampled_from([0.05, 0.01]))
def test_sound_on_convex_pairs(p, q, h):
    a, b = CellUnion.from_polygons([p]), CellUnion.from_polygons([q])
    true = exact_convex_hausdorff(polys(a)[0], polys(b)[0])
    d = hausdorff(a, b, h)
    assert d.lower - 1e-12 <= true <= d.upper + 1e-12
    assert d.width <= h * HALF_DIAG + 1e-12


@given(rects(), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 2.0))
def test_sound_on_moved_rectangles(r, tx, ty, s):
    a = CellUnion.from_rects([r])
    b = apply_affine(a, AffineMap((s, 0.0, 0.0, s), (tx, ty)))
    true = exact_convex_hausdorff(polys(a)[0], polys(b)[0])
    assert true in hausdorff(a, b, 0.01)


@settings(max_examples=30)
@given(polygon_unions(max_cells=3), polygon_unions(max_cells=3))
def test_brackets_sampled_oracle(a, b):
    h = 0.02
    d = directed_hausdorff(a, b, h)
    est = sampled_directed_hausdorff(polys(a), polys(b), n=20)
    assert est <= d.upper + 1e-12
    # Vertices are samples on both sides, so the certified lower bound is never below the vertex maximum.
    vmax = max(point_union_distance(tuple(v), polys(b)) for v in a.verts.reshape(-1, 2))
    assert d.lower >= vmax - 1e-12


@settings(max_examples=20)
@given(st.lists(st.tuples(rect_unions(3), rect_unions(3), rect_unions(3)), min_size=1, max_size=3))
def test_axioms_on_random_triples(triples):
    assert metric_axiom_suite(triples, 1e-2).passed
