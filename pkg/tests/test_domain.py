"""
曲面模块测试 - 成员判定、向内锥、收缩映射、欧拉示性数
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commonzero.core.domain import (
    AnnulusSurface,
    Curve,
    DiskSurface,
    HalfplaneWindowSurface,
    PolygonSurface,
    RectangleSurface,
    Region,
    contains,
    euler_characteristic,
    inward_cone_test,
    retract,
    surface_from_spec,
    surface_grid,
)
from commonzero.core.errors import CurveError, NotOnBoundaryError, OutsideMarginError, SurfaceSpecError

SQUARE_WITH_HOLE = {
    "kind": "polygon_with_holes",
    "outer": [[-2, -2], [2, -2], [2, 2], [-2, 2]],
    "holes": [[[-0.5, -0.5], [-0.5, 0.5], [0.5, 0.5], [0.5, -0.5]]],
}


def square_points(lo, hi):
    """[lo, hi]² 的四个顶点（逆时针）"""
    return [[lo, lo], [hi, lo], [hi, hi], [lo, hi]]


class TestCurve:
    """折线曲线测试"""

    def test_orientation(self):
        """测试定向由有向面积决定"""
        ccw = Curve([[0, 0], [1, 0], [1, 1], [0, 1]])
        assert ccw.orientation == 1
        assert ccw.reversed().orientation == -1
        assert ccw.signed_area() == pytest.approx(1.0)

    def test_repeated_first_vertex_is_dropped(self):
        """测试首尾重复的顶点被去掉"""
        curve = Curve([[0, 0], [1, 0], [0, 1], [0, 0]])
        assert len(curve.vertices) == 3

    def test_self_intersection(self):
        """测试自相交曲线"""
        with pytest.raises(CurveError):
            Curve([[0, 0], [1, 1], [1, 0], [0, 1]])

    def test_degenerate_curves(self):
        """测试顶点不足与重合顶点"""
        with pytest.raises(CurveError):
            Curve([[0, 0], [1, 0]])
        with pytest.raises(CurveError):
            Curve([[0, 0], [1, 0], [1, 0], [0, 1]])

    def test_circle(self):
        """测试圆的折线近似"""
        circle = Curve.circle((1.0, 2.0), 0.5, n=64)
        assert circle.orientation == 1
        assert Curve.circle((0, 0), 1.0, orientation=-1).orientation == -1
        np.testing.assert_allclose(np.linalg.norm(circle.vertices - [1.0, 2.0], axis=1), 0.5)


class TestSurfaces:
    """曲面种类测试"""

    @pytest.mark.parametrize(
        "surface, chi",
        [
            (DiskSurface(), 1),
            (AnnulusSurface(), 0),
            (RectangleSurface(), 1),
            (HalfplaneWindowSurface(), 1),
            (surface_from_spec(SQUARE_WITH_HOLE), 0),
        ],
    )
    def test_euler_characteristic(self, surface, chi):
        """测试欧拉示性数为 1 - 洞数"""
        assert euler_characteristic(surface) == chi
        assert surface.euler_char == chi

    def test_contains_includes_boundary(self, unit_disk, annulus):
        """测试闭区域成员判定"""
        assert contains(unit_disk, (1.0, 0.0))
        assert not contains(unit_disk, (1.0 + 1e-6, 0.0))
        assert contains(annulus, (0.5, 0.0))
        assert not contains(annulus, (0.0, 0.0))

    def test_polygon_with_hole_contains(self):
        """测试带洞多边形"""
        S = surface_from_spec(SQUARE_WITH_HOLE)
        assert contains(S, (1.0, 1.0))
        assert not contains(S, (0.0, 0.0))
        assert contains(S, (0.5, 0.0))

    def test_polygon_orientation_is_normalized(self):
        """测试边界定向被规范为区域在左侧"""
        S = surface_from_spec(SQUARE_WITH_HOLE)
        outer, hole = S.boundary
        assert outer.orientation == 1
        assert hole.orientation == -1

    def test_halfplane_window_clips_below_axis(self):
        """测试半平面窗口只保留 y >= 0"""
        S = HalfplaneWindowSurface(-1.0, 1.0, -1.0, 1.0)
        assert S.bounding_box() == (-1.0, 0.0, 1.0, 1.0)

    @pytest.mark.parametrize(
        "spec",
        [
            {"kind": "torus"},
            {"radius": 1.0},
            {"kind": "disk", "radius": -1.0},
            {"kind": "disk", "radius": 1.0, "colour": "red"},
            {"kind": "annulus", "r_inner": 1.0, "r_outer": 0.5},
            {"kind": "rectangle", "x_min": 1.0, "x_max": 0.0},
            {"kind": "polygon_with_holes", "outer": [[0, 0], [1, 1], [1, 0], [0, 1]]},
            # 两个洞重叠
            {
                "kind": "polygon_with_holes",
                "outer": square_points(-2, 2),
                "holes": [square_points(-1, 0.5), square_points(0, 1)],
            },
            # 洞穿过外边界
            {"kind": "polygon_with_holes", "outer": square_points(-1, 1), "holes": [square_points(0.5, 1.5)]},
            # 洞完全在外边界之外
            {"kind": "polygon_with_holes", "outer": square_points(-1, 1), "holes": [square_points(5, 6)]},
            # 洞套洞
            {
                "kind": "polygon_with_holes",
                "outer": square_points(-3, 3),
                "holes": [square_points(-2, 2), square_points(-1, 1)],
            },
            # 洞与外边界共用一条边
            {"kind": "polygon_with_holes", "outer": square_points(-1, 1), "holes": [square_points(0, 1)]},
        ],
    )
    def test_invalid_specs(self, spec):
        """测试不合法的曲面描述"""
        with pytest.raises(SurfaceSpecError):
            surface_from_spec(spec)

    def test_two_disjoint_holes(self):
        """测试两个互不相交的洞：欧拉示性数为 -1"""
        S = surface_from_spec(
            {
                "kind": "polygon_with_holes",
                "outer": square_points(-3, 3),
                "holes": [square_points(-2, -1), square_points(1, 2)],
            }
        )
        assert euler_characteristic(S) == -1
        assert not contains(S, (-1.5, -1.5))
        assert contains(S, (0.0, 0.0))

    def test_spec_round_trip(self, annulus):
        """测试曲面描述的导出与重建"""
        rebuilt = surface_from_spec(annulus.to_spec())
        assert rebuilt.to_spec() == annulus.to_spec()


class TestInwardCone:
    """向内锥判定测试"""

    def test_disk(self, unit_disk):
        """测试圆盘：指向圆心向内，切向视为向内，外法向不是"""
        p = np.array([1.0, 0.0])
        assert inward_cone_test(unit_disk, p, (-1.0, 0.0))
        assert inward_cone_test(unit_disk, p, (0.0, 1.0))
        assert not inward_cone_test(unit_disk, p, (1.0, 0.0))
        assert inward_cone_test(unit_disk, p, (0.0, 0.0))

    def test_annulus_inner_circle(self, annulus):
        """测试圆环内圆的内法向背离圆心"""
        p = np.array([0.5, 0.0])
        assert inward_cone_test(annulus, p, (1.0, 0.0))
        assert not inward_cone_test(annulus, p, (-1.0, 0.0))

    def test_convex_corner(self, square):
        """测试凸角要求同时满足两条边"""
        corner = np.array([1.0, 1.0])
        assert inward_cone_test(square, corner, (-1.0, -1.0))
        assert inward_cone_test(square, corner, (-1.0, 0.0))
        assert not inward_cone_test(square, corner, (-1.0, 0.5))

    def test_point_off_boundary(self, unit_disk):
        """测试非边界点"""
        with pytest.raises(NotOnBoundaryError):
            inward_cone_test(unit_disk, (0.5, 0.0), (1.0, 0.0))

    @settings(max_examples=60, deadline=None)
    @given(
        theta=st.floats(0.0, 6.283, allow_nan=False),
        vx=st.floats(-5.0, 5.0, allow_nan=False),
        vy=st.floats(-5.0, 5.0, allow_nan=False),
        scale=st.integers(-10, 10).map(lambda k: 2.0**k),
    )
    def test_cone_is_homogeneous(self, theta, vx, vy, scale):
        """测试向内锥在正数缩放下不变"""
        S = DiskSurface((0.0, 0.0), 1.0)
        p = np.array([np.cos(theta), np.sin(theta)])
        assert inward_cone_test(S, p, (vx, vy)) == inward_cone_test(S, p, (scale * vx, scale * vy))


class TestRetract:
    """收缩映射测试"""

    def test_identity_on_surface(self, unit_disk):
        """测试曲面上为恒等映射"""
        np.testing.assert_allclose(retract(unit_disk, (0.3, -0.4)), [0.3, -0.4])

    def test_projects_collar_points(self, unit_disk, annulus):
        """测试收缩邻域内的点投影到边界"""
        np.testing.assert_allclose(retract(unit_disk, (1.1, 0.0)), [1.0, 0.0])
        np.testing.assert_allclose(retract(annulus, (0.0, 0.4)), [0.0, 0.5])

    def test_outside_margin(self, unit_disk):
        """测试超出收缩邻域"""
        with pytest.raises(OutsideMarginError):
            retract(unit_disk, (2.0, 0.0))

    @settings(max_examples=60, deadline=None)
    @given(
        px=st.floats(-1.15, 1.15, allow_nan=False),
        py=st.floats(-1.15, 1.15, allow_nan=False),
    )
    def test_square_retraction_lands_on_surface(self, px, py):
        """测试矩形收缩映射落在曲面上且幂等"""
        S = RectangleSurface(-1.0, 1.0, -1.0, 1.0)
        q = retract(S, (px, py))
        assert contains(S, q)
        np.testing.assert_allclose(retract(S, q), q)


class TestRegion:
    """区域测试"""

    def test_annulus_region(self):
        """测试圆环区域成员判定"""
        U = Region.annulus((0, 0), 0.5, 1.0)
        assert U.contains((0.75, 0.0))[0]
        assert not U.contains((0.0, 0.0))[0]
        assert not U.contains((1.5, 0.0))[0]

    def test_whole_region_covers_surface(self, unit_disk, annulus):
        """测试整体区域覆盖曲面"""
        for S in (unit_disk, annulus, RectangleSurface()):
            pts = surface_grid(S, 17)
            assert np.all(Region.whole(S).contains(pts))

    def test_empty_region(self):
        """测试没有轮廓的区域"""
        with pytest.raises(CurveError):
            Region(())

    def test_polygon_whole_region_has_hole(self):
        """测试带洞曲面的整体区域保留洞"""
        S = PolygonSurface(SQUARE_WITH_HOLE["outer"], SQUARE_WITH_HOLE["holes"])
        U = Region.whole(S)
        assert len(U.contours) == 2
        assert not U.contains((0.0, 0.0))[0]
