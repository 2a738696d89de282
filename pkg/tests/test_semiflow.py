"""
半流模块测试 - 积分、时间映射、Nelson 乘积与不变性探测
"""

import math

import numpy as np
import pytest

from commonzero.core.domain import DiskSurface, RectangleSurface, contains
from commonzero.core.errors import FlowConfigError, FlowError, SampleTooCloseError
from commonzero.core.semiflow import (
    LEFT_SURFACE,
    TIME_REACHED,
    CellLocus,
    CircleLocus,
    FlowConfig,
    PointLocus,
    check_inward,
    check_inward_combination,
    check_permutes_integral_curves,
    check_positive_invariance,
    flow,
    integrate_batch,
    nelson_compose,
    time_map,
    time_map_jacobian,
)
from commonzero.core.vfdsl import parse_field
from commonzero.lima import lima_planar_pair


def rotation_matrix(t: float) -> np.ndarray:
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


class TestFlowConfig:
    """积分器配置测试"""

    @pytest.mark.parametrize(
        "overrides",
        [
            {"method": "euler"},
            {"boundary_policy": "clip"},
            {"rtol": 0.0},
            {"h_min": 1.0, "h_max": 0.1},
            {"max_steps": 0},
        ],
    )
    def test_invalid_values(self, overrides):
        """测试非法参数"""
        with pytest.raises(FlowConfigError):
            FlowConfig(**overrides)

    def test_from_dict_overrides_defaults(self):
        """测试覆盖项叠加在默认值上"""
        cfg = FlowConfig.from_dict({"rtol": 1e-6, "boundary_policy": "reject"})
        assert cfg.rtol == 1e-6
        assert cfg.boundary_policy == "reject"
        assert cfg.atol == 1e-10

    def test_from_dict_unknown_key(self):
        """测试未知参数名"""
        with pytest.raises(FlowConfigError):
            FlowConfig.from_dict({"tolerance": 1e-3})

    def test_tightened(self):
        """测试收紧容差"""
        cfg = FlowConfig(rtol=1e-6, atol=1e-8).tightened(10.0)
        assert cfg.rtol == pytest.approx(1e-7)
        assert cfg.atol == pytest.approx(1e-9)


class TestFlow:
    """轨道积分测试"""

    def test_rotation_quarter_turn(self, rotation, unit_disk, flow_cfg):
        """测试旋转场转过四分之一圈"""
        traj = flow(rotation, unit_disk, (0.5, 0.0), math.pi / 2, flow_cfg)
        assert traj.reason == TIME_REACHED
        assert traj.final_time == pytest.approx(math.pi / 2)
        np.testing.assert_allclose(traj.endpoint, [0.0, 0.5], atol=1e-7)
        assert np.all(np.diff(traj.times) > 0)
        assert traj.to_rows()[0] == (0.0, 0.5, 0.0)

    def test_contraction_matches_exponential(self, contraction, unit_disk, flow_cfg):
        """测试收缩场的解 p·e^{-t}"""
        end = time_map(contraction, unit_disk, [[0.8, -0.4]], 1.5, flow_cfg)[0]
        np.testing.assert_allclose(end, np.array([0.8, -0.4]) * math.exp(-1.5), atol=1e-8)

    def test_fixed_step_method(self, rotation, unit_disk):
        """测试定步长 RK4"""
        cfg = FlowConfig(method="rk4_fixed", step=1e-3)
        end = time_map(rotation, unit_disk, [[0.5, 0.0]], 1.0, cfg)[0]
        np.testing.assert_allclose(end, rotation_matrix(1.0) @ [0.5, 0.0], atol=1e-9)

    def test_negative_time(self, rotation, unit_disk):
        """测试不支持负时间"""
        with pytest.raises(FlowConfigError):
            flow(rotation, unit_disk, (0.5, 0.0), -1.0)

    def test_reject_policy_stops_at_boundary(self, unit_disk):
        """测试 reject 策略下离开曲面即终止"""
        cfg = FlowConfig(boundary_policy="reject", rtol=1e-9, atol=1e-9)
        result = integrate_batch(parse_field("(1, 0)"), unit_disk, [[0.5, 0.0]], 1.0, cfg)
        assert result.reasons == [LEFT_SURFACE]
        assert result.times[0] == pytest.approx(0.5, abs=0.15)
        assert not result.complete

    def test_time_map_raises_on_failure(self, unit_disk):
        """测试时间映射在点离开曲面时报错"""
        cfg = FlowConfig(boundary_policy="reject")
        with pytest.raises(FlowError):
            time_map(parse_field("(1, 0)"), unit_disk, [[0.5, 0.0]], 1.0, cfg)

    def test_project_policy_counts_forced_projections(self, unit_disk, flow_cfg):
        """测试向外的向量场在 project 策略下被强制投影"""
        traj = flow(parse_field("(x, y)"), unit_disk, (0.9, 0.0), 1.0, flow_cfg)
        assert traj.reason == TIME_REACHED
        assert traj.forced_projections > 0
        assert contains(unit_disk, traj.endpoint)
        np.testing.assert_allclose(traj.endpoint, [1.0, 0.0], atol=1e-9)

    def test_initial_point_is_retracted(self, contraction, unit_disk, flow_cfg):
        """测试 project 策略下收缩邻域内的初始点先被收缩"""
        result = integrate_batch(contraction, unit_disk, [[1.05, 0.0]], 1.0, flow_cfg)
        np.testing.assert_allclose(result.points[0], [math.exp(-1.0), 0.0], atol=1e-8)


class TestTimeMapJacobian:
    """时间映射雅可比测试"""

    def test_rotation_jacobian(self, rotation, unit_disk, flow_cfg):
        """测试旋转场的时间映射雅可比为旋转矩阵"""
        points, jac = time_map_jacobian(rotation, unit_disk, [[0.3, 0.1], [-0.2, 0.4]], 0.7, flow_cfg)
        assert jac.shape == (2, 2, 2)
        for k in range(2):
            np.testing.assert_allclose(jac[k], rotation_matrix(0.7), atol=1e-5)
        np.testing.assert_allclose(points[0], rotation_matrix(0.7) @ [0.3, 0.1], atol=1e-8)


class TestNelson:
    """Nelson 乘积公式测试"""

    def test_commuting_fields_are_exact(self, flow_cfg):
        """测试交换的向量场 k = 1 时已精确"""
        S = DiskSurface((0.0, 0.0), 2.0)
        X = parse_field("(-y, x)")
        Y = parse_field("(0.1*x, 0.1*y)")
        target = time_map(X + Y, S, [[0.5, 0.2]], 0.5, flow_cfg)[0]
        for k in (1, 4):
            np.testing.assert_allclose(nelson_compose(X, Y, S, (0.5, 0.2), 0.5, k, flow_cfg), target, atol=1e-7)

    def test_error_decreases_with_k(self, flow_cfg):
        """测试不交换的向量场误差随 k 单调下降"""
        S = DiskSurface((0.0, 0.0), 2.0)
        X = parse_field("(-y, x)")
        Y = parse_field("(0.1*x, -0.1*y)")
        target = time_map(X + Y, S, [[0.5, 0.2]], 0.5, flow_cfg)[0]
        errors = []
        for k in (1, 2, 4, 8):
            approx = nelson_compose(X, Y, S, (0.5, 0.2), 0.5, k, flow_cfg)
            errors.append(float(np.linalg.norm(approx - target)))
        assert all(a > b for a, b in zip(errors, errors[1:]))
        assert errors[0] / errors[-1] > 4

    def test_invalid_k(self, rotation, contraction, unit_disk):
        """测试 k 必须为正"""
        with pytest.raises(FlowConfigError):
            nelson_compose(rotation, contraction, unit_disk, (0.1, 0.1), 0.5, 0)


class TestLoci:
    """点集距离测试"""

    def test_point_locus(self):
        """测试有限点集的距离"""
        L = PointLocus([[0.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(L.distance([[0.0, 1.0], [0.9, 0.0]]), [1.0, 0.1])
        assert np.isinf(PointLocus(np.zeros((0, 2))).distance([[0.0, 0.0]])[0])

    def test_circle_locus(self):
        """测试到圆周的距离"""
        L = CircleLocus((0.0, 0.0), 0.5)
        np.testing.assert_allclose(L.distance([[0.0, 0.0], [1.0, 0.0], [0.0, 0.5]]), [0.5, 0.5, 0.0])

    def test_cell_locus(self):
        """测试到单元并的距离，单元内部为零"""
        L = CellLocus([[0.0, 0.0]], (0.2, 0.2))
        np.testing.assert_allclose(L.distance([[0.05, 0.05], [0.4, 0.0], [0.4, 0.4]]), [0.0, 0.3, 0.3 * math.sqrt(2)])


class TestInvariance:
    """不变性探测测试"""

    def test_circle_invariant_under_rotation(self, rotation, unit_disk, flow_cfg):
        """测试圆周在旋转流下不变"""
        angles = np.linspace(0, 2 * math.pi, 8, endpoint=False)
        samples = 0.5 * np.column_stack([np.cos(angles), np.sin(angles)])
        report = check_positive_invariance(CircleLocus((0, 0), 0.5), rotation, unit_disk, samples, 3.0, flow_cfg)
        assert report.holds
        assert report.checked == 8
        assert report.max_distance < 1e-6

    def test_circle_not_invariant_under_contraction(self, contraction, unit_disk, flow_cfg):
        """测试收缩流离开圆周时报告偏离"""
        report = check_positive_invariance(
            CircleLocus((0, 0), 0.5), contraction, unit_disk, [[0.5, 0.0]], 1.0, flow_cfg
        )
        assert not report.holds
        assert report.violations[0]["distance"] == pytest.approx(0.5 * (1 - math.exp(-1.0)), abs=1e-6)
        assert report.to_dict()["checked"] == 1

    def test_lima_planar_permutes_curves(self, flow_cfg):
        """测试 Y¹ 的流把 X¹ 的积分曲线映到积分曲线，伸缩因子为 e^t"""
        X, Y = lima_planar_pair()
        S = RectangleSurface(-2.0, 2.0, -2.0, 2.0)
        samples = [[0.5, 0.0], [-0.3, 0.4], [0.0, -0.6], [0.2, 0.2]]
        report = check_permutes_integral_curves(X, Y, S, samples, 0.5, flow_cfg)
        assert report.holds()
        assert report.min_factor == pytest.approx(math.exp(0.5), abs=1e-4)
        assert len(report.to_dict()["entries"]) == 4

    def test_non_commuting_pair_is_detected(self, unit_disk, flow_cfg):
        """测试旋转流不保持水平直线族"""
        X = parse_field("(1, 0)")
        Y = parse_field("(-y, x)")
        report = check_permutes_integral_curves(X, Y, unit_disk, [[0.2, 0.1]], 0.5, flow_cfg)
        assert not report.holds()
        assert report.max_residual == pytest.approx(math.sin(0.5), abs=1e-4)

    def test_sample_at_zero(self, unit_disk):
        """测试样本位于 X 的零点"""
        with pytest.raises(SampleTooCloseError):
            check_permutes_integral_curves(parse_field("(x, y)"), parse_field("(1, 0)"), unit_disk, [[0.0, 0.0]], 0.5)


class TestInward:
    """向内检查测试"""

    def test_contraction_is_inward(self, contraction, unit_disk):
        """测试收缩场在圆盘边界上向内"""
        report = check_inward(contraction, unit_disk, 64)
        assert report.inward
        assert report.checked == 64

    def test_expansion_is_not_inward(self, unit_disk):
        """测试扩张场给出违例点"""
        report = check_inward(parse_field("(x, y)"), unit_disk, 64)
        assert not report.inward
        assert 0 < len(report.violations) <= 20

    def test_nonnegative_combinations_stay(self, rotation, contraction, unit_disk, flow_cfg):
        """测试向内向量场的非负组合不离开曲面"""
        report = check_inward_combination(
            [rotation, contraction], unit_disk, [[0.0, 1.0], [1.0, 1.0], [0.5, 2.0]], samples=20, t=0.5, cfg=flow_cfg
        )
        assert report.holds
        assert len(report.to_dict()["cases"]) == 3

    def test_negative_weights(self, rotation, contraction, unit_disk):
        """测试负系数被拒绝"""
        with pytest.raises(FlowConfigError):
            check_inward_combination([rotation, contraction], unit_disk, [[1.0, -1.0]], samples=4)
