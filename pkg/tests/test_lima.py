"""
Lima 型反例测试
"""

import numpy as np
import pytest

from commonzero.core.domain import surface_grid
from commonzero.core.semiflow import check_inward
from commonzero.core.vfdsl import NumericField, eval_field, jacobian_values, lie_bracket, wedge_values
from commonzero.lima import build_lima_pair, lima_collar, lima_planar_pair, lima_surface

INTERIOR = np.array([[0.0, 0.0], [0.3, -0.2], [-0.5, 0.4], [0.7, 0.1], [0.1, 0.85]])


class TestLimaPair:
    """向量场对的构造测试"""

    def test_x_vanishes_only_on_boundary(self):
        """测试 X 在圆盘内部不为零，在边界圆上为零"""
        X, _ = build_lima_pair()
        values = np.linalg.norm([eval_field(X, p) for p in INTERIOR], axis=1)
        assert np.all(values > 1e-3)
        np.testing.assert_allclose(eval_field(X, (1.0, 0.0)), [0.0, 0.0])
        np.testing.assert_allclose(eval_field(X, (0.0, -1.2)), [0.0, 0.0])

    def test_y_vanishes_only_at_origin(self):
        """测试扭转非零时 Y 只在原点为零"""
        _, Y = build_lima_pair(twist=1.0)
        np.testing.assert_allclose(eval_field(Y, (0.0, 0.0)), [0.0, 0.0])
        np.testing.assert_allclose(eval_field(Y, (1.0, 0.0)), [0.0, 1.0])

    def test_zero_twist_y_vanishes_on_circle(self):
        """测试扭转为零时 Y 在整条边界圆上为零"""
        _, Y = build_lima_pair(twist=0.0)
        np.testing.assert_allclose(eval_field(Y, (0.6, 0.8)), [0.0, 0.0], atol=1e-15)

    def test_bracket_is_parallel_to_x(self):
        """测试 [X, Y] 处处平行于 X"""
        X, Y = build_lima_pair()
        bracket = lie_bracket(X, Y)
        pts = surface_grid(lima_surface(), 16)
        w = wedge_values(bracket, X, pts)
        scale = np.linalg.norm(np.column_stack(bracket.evaluate(pts[:, 0], pts[:, 1])), axis=1) * np.linalg.norm(
            np.column_stack(X.evaluate(pts[:, 0], pts[:, 1])), axis=1
        )
        assert np.all(np.abs(w) <= 1e-8 * (1 + scale))

    @pytest.mark.parametrize("steepness, twist", [(1.0, 1.0), (2.0, 0.5), (1.5, 0.0)])
    def test_analytic_jacobian(self, steepness, twist):
        """测试解析雅可比与差分一致"""
        X, _ = build_lima_pair(steepness, twist)
        numeric = NumericField(X.evaluate)
        np.testing.assert_allclose(jacobian_values(X, INTERIOR), jacobian_values(numeric, INTERIOR), atol=1e-6)

    def test_invalid_steepness(self):
        """测试衰减指数必须为正"""
        with pytest.raises(ValueError):
            build_lima_pair(steepness=0.0)

    def test_y_is_inward(self):
        """测试 Y 在边界圆上沿切向，满足向内条件"""
        _, Y = build_lima_pair()
        assert check_inward(Y, lima_surface(), 64).inward


class TestLimaHelpers:
    """辅助构造测试"""

    def test_planar_pair_bracket(self):
        """测试平面向量场对满足 [X¹, Y¹] = X¹"""
        X, Y = lima_planar_pair()
        assert lie_bracket(X, Y) == X

    def test_collar_contains_boundary(self):
        """测试环形邻域包含边界圆而不含原点"""
        collar = lima_collar()
        assert collar.contains((0.0, 0.95))[0]
        assert collar.contains((1.0, 0.0))[0]
        assert not collar.contains((0.0, 0.0))[0]
        assert len(collar.contours) == 2
