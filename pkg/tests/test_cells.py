import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from besicovitch.constructions import four_corner_system
from besicovitch.geom import (
    UNIT_SQUARE,
    AffineMap,
    Attractor,
    BudgetExceededError,
    Cells,
    CellUnion,
    IfsSystem,
    Clip,
    GeometryError,
    Image,
    Union,
    apply_affine,
    cell_count,
    clip_rect,
    contains_point,
    dilate,
    eval_set,
    point_cell_distance,
    subtract_convex,
)
from besicovitch.geom.cells import classify_point, polygon_halfplanes, regular_polygon

from oracles import four_corner_squares, point_polygon_distance
from strategies import convex_polygons, polygon_unions, rect_unions

# 16 * tan(pi / 16): area of the 16-gon circumscribed about the unit disk.
CIRCUMSCRIBED_16GON_AREA = 3.182597878074528


def same_cells(a: CellUnion, b: CellUnion, tol=1e-12):
    return a.verts.shape == b.verts.shape and np.allclose(a.verts, b.verts, atol=tol, rtol=0)


def test_from_polygons_reorients_clockwise():
    c = CellUnion.from_polygons([[(0, 0), (0, 1), (1, 1), (1, 0)]])
    assert c.areas()[0] == pytest.approx(1.0)


def test_nonconvex_polygon_rejected():
    with pytest.raises(GeometryError):
        CellUnion.from_polygons([[(0, 0), (2, 0), (1, 0.2), (1, 2)]])


def test_degenerate_cells_allowed():
    c = CellUnion.from_polygons([[(1, 2)], [(0, 0), (1, 1)]])
    assert len(c) == 2
    assert [len(p) for p in c.polygons()] == [1, 2]


def test_cells_are_immutable():
    with pytest.raises(ValueError):
        UNIT_SQUARE.verts[0, 0, 0] = 5.0


class TestAffine:
    def test_identity(self):
        assert same_cells(apply_affine(UNIT_SQUARE, AffineMap()), UNIT_SQUARE)

    def test_rotation_by_pi(self):
        r = apply_affine(UNIT_SQUARE, AffineMap.rotation(math.pi))
        assert np.allclose(r.bbox(), (-1, -1, 0, 0), atol=1e-15)
        assert r.areas()[0] == pytest.approx(1.0)

    def test_shear(self):
        s = apply_affine(UNIT_SQUARE, AffineMap((1.0, -0.5, 0.0, 1.0)))
        assert np.allclose(s.verts[0], [(0, 0), (1, 0), (0.5, 1), (-0.5, 1)])

    def test_reflection_keeps_ccw(self):
        r = apply_affine(UNIT_SQUARE, AffineMap((-1.0, 0.0, 0.0, 1.0)))
        assert r.areas()[0] == pytest.approx(1.0)

    def test_composition_and_inverse(self):
        m = AffineMap((2.0, 1.0, 0.5, 3.0), (1.0, -2.0))
        p = np.array([[0.3, -0.7]])
        assert np.allclose((m.inverse() @ m)(p), p)
        assert np.allclose((m @ m)(p), m(m(p)))


class TestEval:
    def test_level_zero_is_seed(self):
        c = eval_set(Attractor(four_corner_system(), 0, UNIT_SQUARE))
        assert same_cells(c, UNIT_SQUARE)

    def test_level_two_squares(self):
        c = eval_set(Attractor(four_corner_system(), 2, UNIT_SQUARE))
        assert len(c) == 16
        want = sorted(tuple(float(x) for x in sq[0]) for sq in four_corner_squares(2))
        got = sorted(map(tuple, c.verts[:, 0, :].tolist()))
        assert got == want
        assert np.allclose(c.areas(), 1 / 16**2)

    def test_clip(self):
        c = eval_set(Clip((0.0, 0.0, 1.0, 1.0), Cells(CellUnion.from_rects([(-0.5, 0.0, 0.5, 1.0)]))))
        assert np.allclose(c.bbox(), (0, 0, 0.5, 1))
        assert c.areas().sum() == pytest.approx(0.5)

    def test_clip_drops_outside_cells(self):
        c = clip_rect(CellUnion.from_rects([(2, 2, 3, 3), (0, 0, 1, 1)]), (0.0, 0.0, 1.0, 1.0))
        assert len(c) == 1

    def test_budget(self):
        expr = Attractor(four_corner_system(), 5, UNIT_SQUARE)
        assert cell_count(expr) == 4**5
        with pytest.raises(BudgetExceededError):
            eval_set(expr, budget=1000)

    def test_budget_env(self, monkeypatch):
        monkeypatch.setenv("BESICOVITCH_CELL_BUDGET", "10")
        with pytest.raises(BudgetExceededError):
            eval_set(Attractor(four_corner_system(), 2, UNIT_SQUARE))

    def test_level_cap(self):
        with pytest.raises(BudgetExceededError):
            eval_set(Attractor(four_corner_system(), 13, CellUnion.from_polygons([[(0, 0)]])), budget=10**9)

    def test_non_contraction_rejected(self):
        with pytest.raises(GeometryError):
            IfsSystem((AffineMap((1.0, 0.0, 0.0, 1.0)),))

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_exact_squares_match_oracle(self, n):
        c = eval_set(Attractor(four_corner_system(), n, UNIT_SQUARE))
        want = sorted(
            (float(sq[0][0]), float(sq[0][1]), float(sq[2][0]), float(sq[2][1])) for sq in four_corner_squares(n)
        )
        got = sorted(tuple(x) for x in np.concatenate([c.verts[:, 0], c.verts[:, 2]], axis=1).tolist())
        assert got == want

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_attractor_cells_disjoint(self, n):
        c = eval_set(Attractor(four_corner_system(), n, UNIT_SQUARE))
        side = Fraction(1, 4**n)
        lo = c.verts[:, 0]
        assert np.allclose(c.verts[:, 2] - lo, float(side))
        # Pairwise interiors disjoint: separated along x or y by at least one side.
        dx = np.abs(lo[:, None, 0] - lo[None, :, 0])
        dy = np.abs(lo[:, None, 1] - lo[None, :, 1])
        sep = (dx >= float(side) - 1e-15) | (dy >= float(side) - 1e-15)
        np.fill_diagonal(sep, True)
        assert sep.all()


@given(polygon_unions(), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2), st.floats(-1, 1))
def test_two_evaluation_orders_agree(cells, tx, ty, s, shear):
    m = AffineMap((s, shear, 0.0, s), (tx, ty))
    a = eval_set(Image(m, Cells(cells)))
    b = apply_affine(eval_set(Cells(cells)), m)
    assert same_cells(a, b)


@given(st.floats(0.1, 0.45), st.integers(0, 3), st.floats(-1, 1), st.floats(0.3, 2.0))
def test_image_of_attractor_matches_conjugate_system(ratio, level, t, s):
    # m(A_sys(seed)) is the attractor of the conjugated system seeded with m(seed).
    m = AffineMap((s, 0.0, 0.0, s), (t, -t))
    sys_ = four_corner_system(ratio)
    conj = type(sys_)(tuple(m @ f @ m.inverse() for f in sys_.maps))
    seed = apply_affine(UNIT_SQUARE, m)
    a = eval_set(Image(m, Attractor(sys_, level, UNIT_SQUARE)))
    b = eval_set(Attractor(conj, level, seed))
    assert same_cells(a, b, tol=1e-9)


@given(polygon_unions())
def test_union_concatenates(cells):
    u = eval_set(Union((Cells(cells), Cells(UNIT_SQUARE))))
    assert len(u) == len(cells) + 1


class TestDilate:
    def test_point_gives_circumscribed_16gon(self):
        d = dilate(CellUnion.from_polygons([[(0.0, 0.0)]]), 1.0)
        assert d.polygons()[0].shape == (16, 2)
        area = d.areas()[0]
        assert area == pytest.approx(CIRCUMSCRIBED_16GON_AREA, rel=1e-12)
        assert math.pi < area < 1.02 * math.pi

    def test_small_radius_area(self):
        for r in (1e-2, 1e-4, 1e-6):
            d = dilate(UNIT_SQUARE, r)
            area = d.areas()[0]
            assert 1.0 < area <= 1.0 + 4 * r + CIRCUMSCRIBED_16GON_AREA * r * r + 1e-12

    def test_rejects_nonpositive(self):
        with pytest.raises(GeometryError):
            dilate(UNIT_SQUARE, 0.0)

    @given(polygon_unions(), st.floats(0.01, 0.5))
    def test_contains_original_and_neighbourhood(self, cells, r):
        d = dilate(cells, r)
        assert len(d) == len(cells)
        rng = np.random.default_rng(0)
        for poly, big in zip(cells.polygons(), d.polygons()):
            bigl = [tuple(p) for p in big]
            for p in poly:
                assert point_polygon_distance(tuple(p), bigl) == 0.0
            # Points at distance r from the cell are still covered.
            for _ in range(10):
                a = rng.uniform(0, 2 * math.pi)
                i = rng.integers(len(poly))
                q = poly[i] + 0.999 * r * np.array([math.cos(a), math.sin(a)])
                assert point_polygon_distance(tuple(q), bigl) <= 1e-12

    @given(polygon_unions(), st.floats(0.01, 0.5), st.floats(0.1, 0.99))
    def test_nested_in_radius(self, cells, r, frac):
        big, small = dilate(cells, r), dilate(cells, frac * r)
        for ps, pb in zip(small.polygons(), big.polygons()):
            pbl = [tuple(p) for p in pb]
            for p in ps:
                assert point_polygon_distance(tuple(p), pbl) <= 1e-12


class TestPredicates:
    def test_classify(self):
        assert classify_point(UNIT_SQUARE, (0.5, 0.5))[0] == 1
        assert classify_point(UNIT_SQUARE, (1.0, 0.5))[0] == 0
        assert classify_point(UNIT_SQUARE, (1.5, 0.5))[0] == -1
        assert contains_point(UNIT_SQUARE, (1.0, 1.0))
        assert not contains_point(CellUnion.empty(), (0, 0))

    @given(convex_polygons(), st.floats(-4, 4), st.floats(-4, 4))
    def test_point_distance_matches_oracle(self, poly, x, y):
        c = CellUnion.from_polygons([poly])
        d = point_cell_distance(np.array([x, y]), c.verts[0])
        assert d == pytest.approx(point_polygon_distance((x, y), [tuple(p) for p in c.polygons()[0]]), abs=1e-12)


def test_subtract_convex_removes_hole():
    hole = regular_polygon((0.5, 0.5), 0.25, 8, circumscribed=False)
    out = subtract_convex(UNIT_SQUARE, polygon_halfplanes(hole))
    hole_area = 0.5 * 8 * 0.25**2 * math.sin(2 * math.pi / 8)
    assert out.areas().sum() == pytest.approx(1 - hole_area, abs=1e-12)
    assert not contains_point(out, (0.5, 0.5))
    assert contains_point(out, (0.05, 0.05))


@given(rect_unions())
def test_rect_union_bbox(cells):
    x0, y0, x1, y1 = cells.bbox()
    assert (cells.verts[..., 0] >= x0).all() and (cells.verts[..., 1] <= y1).all()
