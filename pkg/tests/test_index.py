"""
指数模块测试 - 绕数、零点指数、不动点指数与向量场指数
"""

import math
from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pytest

from commonzero.core.blocks import decompose_blocks
from commonzero.core.domain import Curve, RectangleSurface, Region
from commonzero.core.errors import (
    AnotherZeroError,
    IndexConfigError,
    IsolationError,
    RadiusDependenceError,
    TauSelectionError,
    VanishingOnContourError,
)
from commonzero.core.index import (
    ANTIPODAL,
    IDENTICAL_DIRECTION,
    INCONCLUSIVE,
    STRAIGHTLINE_NONSINGULAR,
    IndexConfig,
    check_isolating,
    classify_zero,
    field_map,
    fixed_point_index,
    index_at_zero,
    is_essential,
    nonsingular_homotopy_check,
    total_index,
    vector_field_index,
    winding_number,
)
from commonzero.core.vfdsl import field_values, parse_field

INDEX_TABLE = [
    ("(x, y)", 1),
    ("(x, -y)", -1),
    ("(-y, x)", 1),
    ("(x^2 - y^2, 2*x*y)", 2),
    ("(y, x)", -1),
]


def linear_map(matrix):
    m = np.asarray(matrix, dtype=float)
    return lambda pts: np.asarray(pts, dtype=float).reshape(-1, 2) @ m.T


def angle_sum_turns(X, center, radius, n=10_000):
    """逐点累加相邻样本转角得到的圈数"""
    angles = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    pts = np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])
    values = field_values(X, pts)
    theta = np.arctan2(values[:, 1], values[:, 0])
    steps = np.diff(np.append(theta, theta[0]))
    steps = (steps + math.pi) % (2 * math.pi) - math.pi
    return steps.sum() / (2 * math.pi)


class TestIndexConfig:
    """指数配置测试"""

    @pytest.mark.parametrize(
        "overrides",
        [
            {"tau_initial": 1e-5},
            {"tau_min": 0.0},
            {"angle_step_max": 2.0},
            {"contour_refinement_limit": 0},
        ],
    )
    def test_invalid_values(self, overrides):
        """测试非法参数"""
        with pytest.raises(IndexConfigError):
            IndexConfig(**overrides)

    def test_from_dict(self):
        """测试默认值与覆盖"""
        cfg = IndexConfig.from_dict({"tau_initial": 0.2})
        assert cfg.tau_initial == 0.2
        assert cfg.tau_min == 1e-4
        with pytest.raises(IndexConfigError):
            IndexConfig.from_dict({"tau": 0.2})


class TestWindingNumber:
    """绕数测试"""

    @pytest.mark.parametrize("source, expected", INDEX_TABLE)
    def test_matches_angle_sum(self, source, expected):
        """测试与稠密采样的转角累加一致"""
        X = parse_field(source)
        result = winding_number(field_map(X), Curve.circle((0.0, 0.0), 0.5))
        assert result.value == expected
        assert angle_sum_turns(X, (0.0, 0.0), 0.5) == pytest.approx(expected, abs=1e-6)

    def test_reversed_contour_negates(self):
        """测试反向轮廓给出相反的绕数"""
        X = parse_field("(x^2 - y^2, 2*x*y)")
        result = winding_number(field_map(X), Curve.circle((0.0, 0.0), 1.0, orientation=-1))
        assert result.value == -2

    def test_coarse_contour_is_refined(self):
        """测试粗轮廓被自适应加密"""
        X = parse_field("(x^3 - 3*x*y^2, 3*x^2*y - y^3)")
        square = Curve([[-1, -1], [1, -1], [1, 1], [-1, 1]])
        result = winding_number(field_map(X), square, IndexConfig(angle_step_max=0.1))
        assert result.value == 3
        assert result.samples >= 2 * 128

    def test_vanishing_on_contour(self):
        """测试轮廓经过零点"""
        X = parse_field("(x, y)")
        with pytest.raises(VanishingOnContourError) as exc_info:
            winding_number(field_map(X), Curve.circle((1.0, 0.0), 1.0, n=64))
        assert exc_info.value.min_modulus < 1e-10

    def test_no_zero_inside(self):
        """测试内部没有零点时绕数为 0"""
        result = winding_number(field_map(parse_field("(x, y)")), Curve.circle((3.0, 0.0), 1.0))
        assert result.value == 0


class TestIndexAtZero:
    """孤立零点指数测试"""

    @pytest.mark.parametrize("source, expected", INDEX_TABLE)
    def test_index_table(self, source, expected):
        """测试常见零点的指数"""
        result = index_at_zero(parse_field(source), (0.0, 0.0), 0.5)
        assert result.value == expected
        assert result.min_modulus > 0

    def test_shifted_zero(self):
        """测试不在原点的零点"""
        assert index_at_zero(parse_field("(x^2 - 1, y)"), (1.0, 0.0), 0.5).value == 1
        assert index_at_zero(parse_field("(x^2 - 1, y)"), (-1.0, 0.0), 0.5).value == -1

    def test_another_zero_in_disk(self):
        """测试圆盘内另有零点"""
        with pytest.raises(AnotherZeroError) as exc_info:
            index_at_zero(parse_field("(x^2 - 0.01, y)"), (0.1, 0.0), 0.5)
        assert exc_info.value.point[0] == pytest.approx(-0.1, abs=1e-6)

    def test_radius_dependence(self):
        """测试跳过零点扫描时半径 r 与 r/2 的结果不同"""
        empty = SimpleNamespace(zeros=[], suspect_cells=[])
        with patch("commonzero.core.index.scan_zeros", return_value=empty):
            with pytest.raises(RadiusDependenceError):
                index_at_zero(parse_field("(x^2 - 0.09, y)"), (0.3, 0.0), 0.8)

    def test_nonpositive_radius(self):
        """测试半径必须为正"""
        with pytest.raises(IndexConfigError):
            index_at_zero(parse_field("(x, y)"), (0.0, 0.0), 0.0)


class TestFixedPointIndex:
    """不动点指数测试"""

    def test_rotation_of_disk(self, unit_disk):
        """测试圆盘旋转的不动点指数为 1"""
        result = fixed_point_index(linear_map([[0, -1], [1, 0]]), unit_disk, Region.whole(unit_disk))
        assert result.value == 1

    def test_reflection_and_scaling(self, unit_disk):
        """测试 diag(-2, 1/2) 的不动点指数为 +1"""
        result = fixed_point_index(linear_map([[-2, 0], [0, 0.5]]), unit_disk, Region.whole(unit_disk))
        assert result.value == 1

    def test_constant_map(self, unit_disk):
        """测试常值映射"""
        def constant(pts):
            return np.tile([0.5, 0.0], (len(pts), 1))

        result = fixed_point_index(constant, unit_disk, Region.whole(unit_disk))
        assert result.value == 1

    def test_annulus_rotation_has_index_zero(self, annulus):
        """测试圆环旋转的两条轮廓贡献相互抵消"""
        c, s = math.cos(0.3), math.sin(0.3)
        result = fixed_point_index(linear_map([[c, -s], [s, c]]), annulus, Region.whole(annulus))
        assert result.contributions == [1, -1]
        assert result.value == 0
        assert len(result.to_dict()["contour_points"]) == 2


class TestVectorFieldIndex:
    """向量场指数测试"""

    def test_contraction_on_disk(self, contraction, unit_disk, flow_cfg):
        """测试圆盘上收缩场的指数等于欧拉示性数"""
        result = vector_field_index(contraction, unit_disk, Region.whole(unit_disk), flow_cfg=flow_cfg)
        assert result.value == 1
        assert result.tau is not None

    def test_rotation_on_annulus(self, rotation, annulus, flow_cfg):
        """测试圆环上旋转场的指数为 0"""
        result = vector_field_index(rotation, annulus, Region.whole(annulus), flow_cfg=flow_cfg)
        assert result.value == 0

    def test_is_essential(self, flow_cfg):
        """测试单个零点的块是本质的，两零点抵消的块不是"""
        X = parse_field("(x^2 - 1, y)")
        S = RectangleSurface(-3.0, 3.0, -3.0, 3.0)
        assert is_essential(X, S, Region.disk((1.0, 0.0), 0.3), flow_cfg=flow_cfg)
        assert not is_essential(X, S, Region.disk((0.0, 0.0), 1.5), flow_cfg=flow_cfg)

    def test_contour_through_zero(self, contraction, unit_disk):
        """测试轮廓经过零点时不是孤立邻域"""
        with pytest.raises(IsolationError):
            check_isolating(contraction, unit_disk, Region.disk((0.5, 0.0), 0.5, n=64))

    def test_tau_never_stabilizes(self, contraction, unit_disk, flow_cfg):
        """测试只能尝试一个 τ 时无法确认稳定"""
        cfg = IndexConfig(tau_initial=0.1, tau_min=0.09)
        with pytest.raises(TauSelectionError):
            vector_field_index(contraction, unit_disk, Region.whole(unit_disk), cfg, flow_cfg)


class TestHomotopy:
    """非奇异同伦判定测试"""

    @pytest.mark.parametrize(
        "other, verdict",
        [
            ("(2*x, 2*y)", IDENTICAL_DIRECTION),
            ("(-x, -y)", ANTIPODAL),
            ("(x - 0.5*y, y + 0.5*x)", STRAIGHTLINE_NONSINGULAR),
            ("(x, -y)", INCONCLUSIVE),
        ],
    )
    def test_verdicts(self, other, verdict):
        """测试四种判定"""
        result = nonsingular_homotopy_check(parse_field("(x, y)"), parse_field(other), Curve.circle((0, 0), 1.0, 64))
        assert result.verdict == verdict
        assert result.nonsingular == (verdict != INCONCLUSIVE)

    def test_vanishing_input(self):
        """测试输入场在曲线上为零"""
        with pytest.raises(VanishingOnContourError):
            nonsingular_homotopy_check(parse_field("(x, y)"), parse_field("(x - 1, y)"), Curve.circle((0, 0), 1.0, 64))


class TestClassifyZero:
    """零点分类测试"""

    @pytest.mark.parametrize(
        "source, kind, stability, index",
        [
            ("(x, y)", "node", "unstable", 1),
            ("(-x, -y)", "node", "stable", 1),
            ("(x, -y)", "saddle", "unstable", -1),
            ("(-x - y, x - y)", "focus", "stable", 1),
            ("(-y, x)", "center", "neutral", 1),
            ("(x^2, y)", "degenerate", "neutral", None),
        ],
    )
    def test_kinds(self, source, kind, stability, index):
        """测试线性化分类与指数"""
        result = classify_zero(parse_field(source), (0.0, 0.0))
        assert result.kind == kind
        assert result.stability == stability
        assert result.index == index
        assert len(result.to_dict()["eigenvalues"]) == 2

    def test_total_index(self):
        """测试指数求和"""
        parts = [index_at_zero(parse_field("(x^2 - 1, y)"), (p, 0.0), 0.5) for p in (-1.0, 1.0)]
        assert total_index(parts) == 0


def rotation_matrix(angle):
    c, s = math.cos(angle), math.sin(angle)
    return [[c, -s], [s, c]]


class TestFixedPointAxioms:
    """不动点指数的公理性质测试"""

    @pytest.mark.parametrize(
        "diag, expected",
        [((2.0, 2.0), 1), ((2.0, 0.5), -1), ((0.5, 0.5), 1), ((-2.0, 0.5), 1)],
    )
    def test_linear_maps(self, unit_disk, diag, expected):
        """测试线性映射的指数为 (-1)^ν，ν 为大于 1 的实特征值个数"""
        result = fixed_point_index(linear_map(np.diag(diag)), unit_disk, Region.whole(unit_disk))
        assert result.value == expected

    @pytest.mark.parametrize("a, b", [(2.0, 0.5), (0.5, 3.0), (-1.5, -0.5), (3.0, 4.0)])
    def test_multiplicativity(self, unit_disk, a, b):
        """测试乘积映射的指数等于一维因子指数之积"""
        result = fixed_point_index(linear_map(np.diag([a, b])), unit_disk, Region.whole(unit_disk))
        assert result.value == int(np.sign(1 - a) * np.sign(1 - b))

    @pytest.mark.parametrize("scale", [0.2, 0.6, 1.0])
    def test_homotopy_invariance(self, unit_disk, scale):
        """测试轮廓上无不动点的同伦 s·R 不改变指数"""
        matrix = scale * np.asarray(rotation_matrix(1.0))
        result = fixed_point_index(linear_map(matrix), unit_disk, Region.whole(unit_disk))
        assert result.value == 1

    def test_additivity_and_excision(self, unit_disk):
        """测试两个不动点的指数可加，且缩小邻域不改变局部指数"""

        def shifted(pts):
            pts = np.asarray(pts, dtype=float).reshape(-1, 2)
            return pts - np.column_stack([pts[:, 0] ** 2 - 0.25, pts[:, 1]])

        whole = fixed_point_index(shifted, unit_disk, Region.whole(unit_disk)).value
        right = fixed_point_index(shifted, unit_disk, Region.disk((0.5, 0.0), 0.2)).value
        left = fixed_point_index(shifted, unit_disk, Region.disk((-0.5, 0.0), 0.2)).value
        assert (right, left) == (1, -1)
        assert whole == right + left
        assert fixed_point_index(shifted, unit_disk, Region.disk((0.5, 0.0), 0.4)).value == right

    def test_commutativity(self, unit_disk):
        """测试 f∘g 与 g∘f 的指数相同"""
        f = np.diag([2.0, 0.5])
        g = np.asarray(rotation_matrix(0.5))
        fg = fixed_point_index(linear_map(f @ g), unit_disk, Region.whole(unit_disk)).value
        gf = fixed_point_index(linear_map(g @ f), unit_disk, Region.whole(unit_disk)).value
        assert fg == gf


class TestIndexStability:
    """指数在小扰动下的稳定性测试"""

    @pytest.mark.parametrize("source, expected", INDEX_TABLE)
    def test_constant_perturbation(self, source, expected):
        """测试加上 0.1 倍轮廓最小模的常向量后指数不变"""
        X = parse_field(source)
        contour = Curve.circle((0.0, 0.0), 0.5)
        base = winding_number(field_map(X), contour)
        shift = 0.1 * base.min_modulus * np.array([math.cos(0.7), math.sin(0.7)])

        def perturbed(pts):
            return field_values(X, pts) + shift

        assert winding_number(perturbed, contour).value == base.value == expected


def random_polynomial_field(seed):
    """
    带已知双曲零点的次数不超过 2 的随机向量场

    偶数种子给出单个零点的线性场，奇数种子给出指数相反的两个零点
    """
    rng = np.random.default_rng(seed)

    def num(value):
        return repr(float(value))

    if seed % 2 == 0:
        while True:
            a = rng.uniform(-1.5, 1.5, size=(2, 2))
            if abs(np.linalg.det(a)) > 0.3:
                break
        z = rng.uniform(-0.4, 0.4, size=2)
        u = f"{num(a[0, 0])}*(x - {num(z[0])}) + {num(a[0, 1])}*(y - {num(z[1])})"
        v = f"{num(a[1, 0])}*(x - {num(z[0])}) + {num(a[1, 1])}*(y - {num(z[1])})"
        return parse_field(f"({u}, {v})"), [z]
    x0, y0 = rng.uniform(-0.3, 0.3, size=2)
    c = rng.uniform(0.25, 0.4)
    k = rng.uniform(-0.5, 0.5)
    s1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    s2 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    u = f"{num(s1)}*((x - {num(x0)})^2 - {num(c * c)})"
    v = f"{num(s2)}*(y - {num(y0)}) + {num(k)}*(x - {num(x0)})"
    zeros = [np.array([x0 + d, y0 - k * d / s2]) for d in (c, -c)]
    return parse_field(f"({u}, {v})"), zeros


@pytest.mark.slow
class TestIndexConsistency:
    """块指数、区域指数与零点指数三者一致的测试"""

    @pytest.mark.parametrize("seed", range(20))
    def test_random_fields(self, seed, flow_cfg):
        """测试块指数之和 = 整个区域的向量场指数 = 各零点指数之和"""
        X, zeros = random_polynomial_field(seed)
        S = RectangleSurface(-2.0, 2.0, -2.0, 2.0)
        by_zero = sum(index_at_zero(X, z, 0.2).value for z in zeros)
        blocks = decompose_blocks(X, S, 64, flow_cfg=flow_cfg)
        region = vector_field_index(X, S, Region.disk((0.0, 0.0), 1.3), flow_cfg=flow_cfg)
        assert len(blocks.blocks) == len(zeros)
        assert blocks.index_sum == region.value == by_zero
