import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import rotate_points, sample_boundary
from roofvec.geom import (
    BoundingBox,
    OrientedBox,
    Point,
    Segment,
    fill_polygon,
    joint_bbox_diagonal,
    line_intersection,
    obb_to_segment,
    point_in_polygon,
    point_to_polyline_distance,
    segment_to_obb,
    signed_area,
)

coord = st.floats(-500, 500, allow_nan=False, allow_infinity=False)


def seg(x0, y0, x1, y1, i=0):
    return Segment.from_coords(i, x0, y0, x1, y1)


def same_segment(a, b, tol=1e-9):
    p, q = a.as_array(), b.as_array()
    return np.allclose(p, q, atol=tol) or np.allclose(p, q[::-1], atol=tol)


class TestTypes:
    def test_point_rejects_nan(self):
        with pytest.raises(ValueError):
            Point(math.nan, 0)

    def test_zero_length_segment(self):
        with pytest.raises(ValueError):
            seg(1, 1, 1, 1)

    def test_negative_id(self):
        with pytest.raises(ValueError):
            seg(0, 0, 1, 0, i=-1)

    def test_box_swaps_axes(self):
        b = OrientedBox(0, 0, 2, 10, 0.0)
        assert (b.w, b.h) == (10, 2)
        assert b.theta == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize("theta", [-3.0, -math.pi, 0.0, math.pi, 4.0, 7 * math.pi])
    def test_theta_folded(self, theta):
        b = OrientedBox(0, 0, 4, 1, theta)
        assert 0 <= b.theta < math.pi
        assert math.isclose(math.sin(2 * b.theta), math.sin(2 * theta), abs_tol=1e-9)

    def test_bbox(self):
        bb = BoundingBox.of(np.array([[1, 5], [4, 1]]))
        assert bb.diagonal == 5
        with pytest.raises(ValueError):
            BoundingBox(Point(1, 0), Point(0, 0))


class TestObb:
    def test_axis_aligned(self):
        assert same_segment(obb_to_segment(OrientedBox(0, 0, 10, 2, 0)), seg(-5, 0, 5, 0))

    def test_quarter_turn(self):
        assert same_segment(obb_to_segment(OrientedBox(0, 0, 10, 2, math.pi / 2)), seg(0, -5, 0, 5))

    def test_diagonal_matches_rotated_oracle(self):
        # rotate the axis-aligned segment of length 2*sqrt(2) by pi/4, then translate
        base = np.array([[-math.sqrt(2), 0.0], [math.sqrt(2), 0.0]])
        expect = rotate_points(base, math.pi / 4) + [3, 4]
        assert np.allclose(expect, [[2, 3], [4, 5]])
        got = obb_to_segment(OrientedBox(3, 4, 2 * math.sqrt(2), 1, math.pi / 4))
        assert same_segment(got, seg(*expect.ravel()))

    def test_segment_to_obb(self):
        b = segment_to_obb(seg(-5, 0, 5, 0), 2)
        assert (b.cx, b.cy, b.w, b.h, b.theta) == pytest.approx((0, 0, 10, 2, 0))
        b = segment_to_obb(seg(2, 3, 4, 5), 1)
        assert (b.cx, b.cy, b.w, b.h, b.theta) == pytest.approx((3, 4, 2 * math.sqrt(2), 1, math.pi / 4))

    def test_bad_thickness(self):
        with pytest.raises(ValueError):
            segment_to_obb(seg(0, 0, 1, 0), 0)

    def test_degenerate_segment_rejected(self):
        with pytest.raises(ValueError):
            segment_to_obb(seg(0, 0, 0, 0), 1)

    @given(coord, coord, coord, coord, st.floats(0.01, 5))
    def test_round_trip(self, x0, y0, x1, y1, t):
        assume(math.hypot(x1 - x0, y1 - y0) > 6)
        s = seg(x0, y0, x1, y1)
        assert same_segment(obb_to_segment(segment_to_obb(s, t)), s, tol=1e-9 * max(1, abs(x0), abs(x1), abs(y0), abs(y1)))

    @given(coord, coord, st.floats(1, 100), st.floats(0.1, 0.9), st.floats(-10, 10))
    def test_corners_form_rectangle(self, cx, cy, w, frac, theta):
        b = OrientedBox(cx, cy, w, w * frac, theta)
        c = b.corners()
        assert abs(signed_area(c)) == pytest.approx(b.w * b.h, rel=1e-9)
        assert c.mean(axis=0) == pytest.approx([cx, cy], abs=1e-9)


class TestLineIntersection:
    def test_perpendicular(self):
        p = line_intersection(seg(0, 0, 1, 0), seg(0, -1, 0, 1))
        assert (p.x, p.y) == pytest.approx((0, 0))

    def test_parallel(self):
        assert line_intersection(seg(0, 0, 1, 0), seg(0, 1, 1, 1, 1)) is None

    def test_collinear(self):
        assert line_intersection(seg(0, 0, 1, 0), seg(2, 0, 3, 0)) is None

    def test_diagonals(self):
        p = line_intersection(seg(0, 0, 2, 2), seg(0, 4, 4, 0))
        # 2x2 solve: t*(2,2) = (0,4) + s*(4,-4)
        t, _ = np.linalg.solve(np.array([[2, -4], [2, 4]], float), [0, 4])
        assert (p.x, p.y) == pytest.approx((2 * t, 2 * t))
        assert (p.x, p.y) == pytest.approx((2, 2))

    def test_beyond_segments(self):
        # supporting lines, not the finite segments
        p = line_intersection(seg(0, 0, 1, 0), seg(5, 3, 5, 4))
        assert (p.x, p.y) == pytest.approx((5, 0))

    @given(st.tuples(*[coord] * 8))
    def test_symmetric(self, c):
        assume(math.hypot(c[2] - c[0], c[3] - c[1]) > 1e-3 and math.hypot(c[6] - c[4], c[7] - c[5]) > 1e-3)
        a, b = seg(*c[:4]), seg(*c[4:], i=1)
        p, q = line_intersection(a, b), line_intersection(b, a)
        assert (p is None) == (q is None)
        if p is not None:
            scale = 1 + abs(p.x) + abs(p.y)
            assert math.hypot(p.x - q.x, p.y - q.y) <= 1e-6 * scale


SQUARE = [seg(0, 0, 4, 0, 0), seg(4, 0, 4, 4, 1), seg(4, 4, 0, 4, 2), seg(0, 4, 0, 0, 3)]


class TestDistance:
    def test_foot_inside(self):
        assert point_to_polyline_distance(Point(0, 1), [seg(-1, 0, 1, 0)]) == 1

    def test_endpoint(self):
        assert point_to_polyline_distance(Point(3, 0), [seg(-1, 0, 1, 0)]) == 2

    def test_square_center_dense_oracle(self):
        samples = sample_boundary([np.array([[0, 0], [4, 0], [4, 4], [0, 4]], float)], 10_000)
        oracle = np.sqrt(((samples - [2, 2]) ** 2).sum(1)).min()
        got = point_to_polyline_distance(Point(2, 2), SQUARE)
        assert got == pytest.approx(2)
        assert abs(got - oracle) <= 1e-3

    def test_empty(self):
        with pytest.raises(ValueError):
            point_to_polyline_distance(Point(0, 0), [])

    @given(st.floats(-20, 20), st.floats(-20, 20), st.floats(-20, 20), st.floats(-20, 20))
    def test_lipschitz(self, px, py, qx, qy):
        dp = point_to_polyline_distance(Point(px, py), SQUARE)
        dq = point_to_polyline_distance(Point(qx, qy), SQUARE)
        assert dp >= 0
        assert abs(dp - dq) <= math.hypot(px - qx, py - qy) + 1e-9

    @given(st.integers(0, 3), st.floats(0, 1))
    def test_zero_on_polyline(self, k, t):
        a, b = SQUARE[k].as_array()
        p = a + t * (b - a)
        assert point_to_polyline_distance(Point(*p), SQUARE) <= 1e-9


class TestJointDiagonal:
    def test_identical_unit_squares(self):
        sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
        assert joint_bbox_diagonal(sq, sq) == pytest.approx(math.sqrt(2))

    def test_shifted(self):
        sq = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], float)
        assert joint_bbox_diagonal(sq, sq + [3, 0]) == pytest.approx(math.sqrt(17))

    def test_degenerate(self):
        with pytest.raises(ValueError):
            joint_bbox_diagonal([(0, 0)], [(0, 0)])

    def test_empty(self):
        with pytest.raises(ValueError):
            joint_bbox_diagonal([], [(0, 0)])

    @given(st.lists(st.tuples(coord, coord), min_size=1, max_size=8), st.lists(st.tuples(coord, coord), min_size=1, max_size=8))
    def test_symmetric_and_dominates(self, p, r):
        allp = np.array(p + r)
        assume(np.ptp(allp, axis=0).max() > 0)
        d = joint_bbox_diagonal(p, r)
        assert d == joint_bbox_diagonal(r, p)
        for s in (p, r):
            assert d >= BoundingBox.of(np.array(s)).diagonal - 1e-9


class TestPolygonRaster:
    def test_signed_area_orientation(self):
        ccw = np.array([[0, 0], [4, 0], [4, 4], [0, 4]], float)  # y-down frame
        assert signed_area(ccw) == 16
        assert signed_area(ccw[::-1]) == -16

    def test_half_open_fill(self):
        m = fill_polygon(np.array([[2, 2], [6, 2], [6, 5], [2, 5]], float), 10, 10)
        # left/top inclusive, right/bottom exclusive: columns 2..5, rows 2..4
        assert m.sum() == 12
        assert m[2:5, 2:6].all()

    def test_shared_edge_partitions(self):
        a = np.array([[0, 0], [5, 0], [5, 8], [0, 8]], float)
        b = np.array([[5, 0], [9, 0], [9, 8], [5, 8]], float)
        big = np.array([[0, 0], [9, 0], [9, 8], [0, 8]], float)
        ma, mb, mbig = (fill_polygon(r, 12, 12) for r in (a, b, big))
        assert not (ma & mb).any()
        assert ((ma | mb) == mbig).all()

    def test_point_in_polygon_agrees_with_fill(self):
        rng = np.random.default_rng(1)
        ring = rng.uniform(0, 20, (7, 2))
        m = fill_polygon(ring, 20, 20)
        for y in range(20):
            for x in range(20):
                assert m[y, x] == point_in_polygon((x, y), ring)

    def test_clipped_to_grid(self):
        m = fill_polygon(np.array([[-5, -5], [3, -5], [3, 3], [-5, 3]], float), 4, 4)
        assert m.shape == (4, 4) and m.sum() == 9
