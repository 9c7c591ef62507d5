import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from besicovitch.constructions import fitted_invisible_set, four_corner_system
from besicovitch.geom import (
    UNIT_SQUARE,
    AffineMap,
    Attractor,
    CellUnion,
    apply_affine,
    clip_rect,
    contains_point,
    eval_set,
    point_cell_distance,
)
from besicovitch.projections import (
    Direction,
    InsufficientDataError,
    InvalidDirectionError,
    ScanTable,
    angle_grid,
    continuity_probe,
    direction_scan,
    exclude_ball,
    ortho_measure,
    ortho_project,
    point_grid,
    radial_measure,
    radial_project,
    viewpoint_scan,
)

from oracles import affine, four_corner_squares, project, radial_width_by_sampling, total_length
from strategies import angles, convex_polygons, polygon_unions, rect_unions

SQRT2 = math.sqrt(2)
# 2 * atan(1/2): the unit square seen from (2, 0.5).
SQUARE_WIDTH_FROM_2_HALF = 0.9272952180016122


def four_corner(n):
    return eval_set(Attractor(four_corner_system(), n, UNIT_SQUARE))


class TestOrtho:
    def test_unit_square_x_axis(self):
        assert ortho_project(UNIT_SQUARE, (0, 1)).as_list() == [(0.0, 1.0)]

    def test_level_one_corners(self):
        assert ortho_project(four_corner(1), (0, 1)).as_list() == [(0.0, 0.25), (0.75, 1.0)]

    def test_sheared_level_one_tiles(self):
        shear = (Fraction(1), Fraction(-1, 2), Fraction(0), Fraction(1))
        want = project([affine(sq, shear) for sq in four_corner_squares(1)], (1, 0))
        assert want == [(Fraction(-1, 2), Fraction(1))]
        c = apply_affine(four_corner(1), AffineMap((1.0, -0.5, 0.0, 1.0)))
        got = ortho_project(c, (0, 1))
        assert got.as_list() == [(-0.5, 1.0)]
        assert got.measure() == 1.5

    def test_diagonal_width(self):
        assert ortho_measure(UNIT_SQUARE, (1, 1)) == pytest.approx(SQRT2, abs=1e-15)

    def test_empty(self):
        assert ortho_measure(CellUnion.empty(), (0.3, 1)) == 0

    def test_zero_direction(self):
        with pytest.raises(InvalidDirectionError):
            ortho_project(UNIT_SQUARE, (0, 0))

    @pytest.mark.parametrize("n", range(0, 7))
    def test_four_corner_halves(self, n):
        oracle = total_length(project(four_corner_squares(n), (1, 0)))
        assert oracle == Fraction(1, 2**n)
        assert ortho_measure(four_corner(n), (0, 1)) == float(oracle)

    def test_convention(self):
        # Direction (-1, x) sends (a, b) to (a x + b) / |(x, 1)|.
        pt = CellUnion.from_polygons([[(2.0, 3.0)]])
        x = 0.7
        got = ortho_project(pt, (-1.0, x)).lo[0]
        assert got == pytest.approx((2 * x + 3) / math.hypot(x, 1))


class TestScans:
    def test_square_axis_and_diagonals(self):
        t = direction_scan(UNIT_SQUARE, angle_grid(4))
        assert np.allclose(t.values, [1, SQRT2, 1, SQRT2])
        assert np.allclose(t.params, [0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])

    def test_grid_matches_elementwise(self):
        c = four_corner(4)
        grid = angle_grid(180)
        t = direction_scan(c, grid, workers=3)
        assert t.values.tolist() == [ortho_measure(c, d) for d in grid]

    def test_empty_scans(self):
        assert (direction_scan(CellUnion.empty(), angle_grid(5)).values == 0).all()
        assert (viewpoint_scan(CellUnion.empty(), point_grid(0, 1, 0, 1, 2, 2)).values == 0).all()

    def test_empty_grid(self):
        with pytest.raises(InsufficientDataError):
            direction_scan(UNIT_SQUARE, [])

    def test_distant_viewpoints(self):
        tiny = CellUnion.from_rects([(0, 0, 0.01, 0.01)])
        pts = [(10, 0), (0, 10), (-10, 0), (0, -10)]
        t = viewpoint_scan(tiny, pts, workers=2)
        assert t.values.tolist() == [radial_measure(tiny, p) for p in pts]
        assert ((t.values > 0) & (t.values < 0.002)).all()

    def test_viewpoint_inside(self):
        t = viewpoint_scan(UNIT_SQUARE, [(0.5, 0.5), (3, 3)])
        assert t.values[0] == 2 * math.pi
        assert t.values[1] < 1

    def test_worker_count_does_not_change_rows(self):
        c = four_corner(3)
        grid = point_grid(-2, 3, -2, 3, 4, 4)
        assert viewpoint_scan(c, grid, workers=1).values.tolist() == viewpoint_scan(c, grid, workers=4).values.tolist()


class TestRadial:
    def test_square_from_side(self):
        arcs = radial_project(UNIT_SQUARE, (2, 0.5))
        assert len(arcs) == 1
        width = arcs.measure()
        assert width == pytest.approx(SQUARE_WIDTH_FROM_2_HALF, abs=1e-15)
        assert (arcs.start[0] + arcs.end[0]) / 2 == pytest.approx(math.pi)
        oracle = radial_width_by_sampling([(0, 0), (1, 0), (1, 1), (0, 1)], (2, 0.5))
        assert oracle == pytest.approx(width, abs=1e-12)

    def test_interior_viewpoint(self):
        a = radial_project(UNIT_SQUARE, (0.5, 0.5))
        assert a.full_circle and a.measure() == 2 * math.pi

    def test_far_viewpoint(self):
        assert radial_measure(UNIT_SQUARE, (1e6, 0)) < 3e-6

    def test_boundary_viewpoint_is_half_plane(self):
        assert radial_measure(UNIT_SQUARE, (1.0, 0.5)) == pytest.approx(math.pi)
        assert radial_measure(UNIT_SQUARE, (1.0, 1.0)) == pytest.approx(math.pi / 2)

    def test_wrapping_arc(self):
        # Seen from the left, the square straddles angle 0.
        a = radial_project(UNIT_SQUARE, (-1.0, 0.5))
        assert len(a) == 1 and a.end[0] > 2 * math.pi
        assert a.measure() == pytest.approx(2 * math.atan(0.5))

    def test_exclusion_zero(self):
        c = four_corner(2)
        assert radial_measure(c, (-1, -1), 0.0) == radial_project(c, (-1, -1)).measure()

    def test_point_beyond_exclusion(self):
        pt = CellUnion.from_polygons([[(5.0, 0.0)]])
        assert radial_measure(pt, (0, 0), 1.0) == 0.0

    def test_exclusion_removes_near_part(self):
        c = CellUnion.from_rects([(0.5, -0.1, 0.9, 0.1)])
        assert radial_measure(c, (0, 0), 1.0) == 0.0
        kept = exclude_ball(c, (0, 0), 0.7)
        assert radial_measure(c, (0, 0), 0.7) <= radial_measure(c, (0, 0))
        assert len(kept) >= 1

    def test_fitted_level_decay(self):
        v = (-1, -1)
        m6 = radial_measure(eval_set(fitted_invisible_set((0, 0, 1, 1), 6)), v)
        m3 = radial_measure(eval_set(fitted_invisible_set((0, 0, 1, 1), 3)), v)
        assert m6 < m3

    @given(convex_polygons(), st.floats(-4, 4), st.floats(-4, 4))
    def test_single_cell_matches_sampling(self, poly, x, y):
        c = CellUnion.from_polygons([poly])
        assume(not contains_point(c, (x, y)))
        assume(point_cell_distance(np.array([x, y]), c.verts[0]) > 1e-3)
        got = radial_measure(c, (x, y))
        oracle = radial_width_by_sampling([tuple(p) for p in c.polygons()[0]], (x, y), n=50)
        assert got == pytest.approx(oracle, abs=1e-9)


class TestContinuityProbe:
    def test_constant(self):
        t = ScanTable(np.arange(3.0), np.ones(3), "direction")
        assert continuity_probe(t) == (0.0, 0)

    def test_example(self):
        t = ScanTable(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.5, 0.75]), "direction")
        assert continuity_probe(t) == (0.5, 0)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            continuity_probe(ScanTable(np.zeros(1), np.zeros(1), "direction"))

    def test_lipschitz_bound(self):
        rng = np.random.default_rng(3)
        corner = rng.uniform(-2, 2, size=(10, 2))
        c = CellUnion.from_rects(np.concatenate([corner, corner + rng.uniform(0.05, 1, size=(10, 2))], axis=1))
        step = 1e-3
        n = math.ceil(math.pi / step)
        jump, _ = continuity_probe(direction_scan(c, angle_grid(n, 0, n * step)))
        assert jump <= 2 * len(c) * c.diameter() * step + 1e-9


@given(rect_unions(), angles)
def test_monotone_under_containment(b, phi):
    # A is B cut down to a window, so A's cells lie inside B's union.
    a = clip_rect(b, (-1.0, -1.0, 1.0, 1.0))
    d = Direction.from_angle(phi)
    assert ortho_measure(a, d) <= ortho_measure(b, d) + 1e-12
    assert ortho_project(b, d).contains(ortho_project(a, d), 1e-12)


@given(rect_unions(), st.floats(-4, 4), st.floats(-4, 4))
def test_radial_nested_under_containment(b, x, y):
    a = clip_rect(b, (-1.0, -1.0, 1.0, 1.0))
    ra, rb = radial_project(a, (x, y)), radial_project(b, (x, y))
    assert rb.contains(ra, 1e-9)
    assert ra.measure() <= rb.measure() + 1e-12


@given(polygon_unions(), angles, st.floats(0, 2 * math.pi))
def test_rotation_equivariance(c, phi, theta):
    rot = apply_affine(c, AffineMap.rotation(theta))
    d = Direction.from_angle(phi)
    d_rot = Direction.from_angle(phi + theta)
    assert ortho_measure(rot, d_rot) == pytest.approx(ortho_measure(c, d), abs=1e-9)


@given(st.integers(0, 4), st.floats(-2, 3), st.floats(-2, 3))
def test_four_corner_radial_decay(n, x, y):
    a, b = four_corner(n), four_corner(n + 1)
    assume(not contains_point(a, (x, y)))
    assert radial_measure(b, (x, y)) <= radial_measure(a, (x, y)) + 1e-12
