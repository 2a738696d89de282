"""
块模块测试 - 掩码轮廓、块分解与依赖集
"""

import numpy as np
import pytest

from commonzero.core.blocks import decompose_blocks, dependency_set, fill_pinches, find_zeros, mask_contours
from commonzero.core.domain import RectangleSurface
from commonzero.core.errors import IndexConfigError
from commonzero.core.roots import CellGrid
from commonzero.core.vfdsl import parse_field


@pytest.fixture
def unit_grid() -> CellGrid:
    return CellGrid(np.zeros(2), np.ones(2), 3)


class TestMasks:
    """掩码处理测试"""

    def test_fill_diagonal_pinch(self):
        """测试对角相接的单元被补成 2×2 方块"""
        mask = np.array([[True, False], [False, True]])
        assert fill_pinches(mask).all()
        anti = np.array([[False, True], [True, False]])
        assert fill_pinches(anti).all()

    def test_fill_keeps_simple_masks(self):
        """测试没有对角相接时掩码不变"""
        mask = np.array([[True, True, False], [False, True, False], [False, False, False]])
        np.testing.assert_array_equal(fill_pinches(mask), mask)

    def test_single_cell_contour(self, unit_grid):
        """测试单个单元给出逆时针正方形"""
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1] = True
        (curve,) = mask_contours(mask, unit_grid)
        assert curve.orientation == 1
        assert curve.signed_area() == pytest.approx(1.0)
        assert len(curve.vertices) == 4

    def test_ring_has_clockwise_hole(self, unit_grid):
        """测试环形掩码给出外边界和顺时针洞边界"""
        mask = np.ones((3, 3), dtype=bool)
        mask[1, 1] = False
        curves = mask_contours(mask, unit_grid)
        assert sorted(c.orientation for c in curves) == [-1, 1]
        assert sum(c.signed_area() for c in curves) == pytest.approx(8.0)


class TestDecomposition:
    """块分解测试"""

    def test_resolution_too_small(self, contraction, unit_disk):
        """测试分辨率下限"""
        with pytest.raises(IndexConfigError):
            find_zeros(contraction, unit_disk, 8)

    def test_zero_free_field(self, unit_disk):
        """测试没有零点时块列表为空"""
        result = decompose_blocks(parse_field("(1, 0)"), unit_disk, 32)
        assert result.blocks == []
        assert result.index_sum == 0
        assert result.to_dict()["count"] == 0

    def test_single_sink(self, contraction, unit_disk, flow_cfg):
        """测试圆盘上的汇点构成一个指数为 1 的块"""
        result = decompose_blocks(contraction, unit_disk, 32, flow_cfg=flow_cfg)
        assert len(result.blocks) == 1
        block = result.blocks[0]
        assert block.index.value == 1
        assert not block.touches_boundary
        assert block.contains((0.0, 0.0))[0]
        assert result.block_of((0.0, 0.0)) is block
        assert result.block_of((0.9, 0.0)) is None

    def test_source_and_saddle(self, flow_cfg):
        """测试两个零点分成两个块，指数和为欧拉示性数"""
        S = RectangleSurface(-2.0, 2.0, -1.0, 1.0)
        result = decompose_blocks(parse_field("(x^2 - 1, y)"), S, 64, flow_cfg=flow_cfg)
        assert len(result.blocks) == 2
        assert sorted(b.index.value for b in result.blocks) == [-1, 1]
        assert result.index_sum == 0
        assert result.merges == []

    def test_nearby_zeros_are_merged(self, unit_disk, flow_cfg):
        """测试分辨率不足以分开的零点被合并为一个块"""
        result = decompose_blocks(parse_field("(x^2 - 0.01, y)"), unit_disk, 32, flow_cfg=flow_cfg)
        assert len(result.blocks) == 1
        block = result.blocks[0]
        assert block.merged
        assert len(block.zeros) == 2
        assert block.index.value == 0

    def test_skip_index(self, contraction, unit_disk):
        """测试不计算指数时 index_sum 为 None"""
        result = decompose_blocks(contraction, unit_disk, 32, compute_index=False)
        assert result.blocks[0].index is None
        assert result.index_sum is None


class TestDependencySet:
    """依赖集测试"""

    def test_single_point(self, rotation, contraction, unit_disk):
        """测试旋转场与径向场只在原点相关"""
        dep = dependency_set(rotation, contraction, unit_disk, 32)
        assert dep.count == 1
        assert dep.distance([[0.0, 0.0]])[0] == 0.0
        assert dep.distance([[0.5, 0.0]])[0] > 0.3

    def test_line(self, unit_disk):
        """测试楔积沿直线为零时依赖集为一个分量"""
        dep = dependency_set(parse_field("(1, 0)"), parse_field("(0, x)"), unit_disk, 32)
        assert dep.count == 1
        assert dep.distance([[0.0, 0.5], [0.0, -0.9]]).max() == 0.0

    def test_two_lines(self, unit_disk):
        """测试两条直线给出两个分量"""
        dep = dependency_set(parse_field("(1, 0)"), parse_field("(0, x^2 - 0.25)"), unit_disk, 32)
        assert dep.count == 2
        info = dep.to_dict()
        assert info["components"] == 2
        assert len(info["component_sizes"]) == 2
        assert info["cell_count"] == sum(info["component_sizes"])

    def test_independent_fields(self, unit_disk):
        """测试处处线性无关时依赖集为空"""
        dep = dependency_set(parse_field("(1, 0)"), parse_field("(0, 1)"), unit_disk, 32)
        assert dep.count == 0
        assert len(dep.cells) == 0

    def test_resolution_too_small(self, rotation, contraction, unit_disk):
        """测试分辨率下限"""
        with pytest.raises(IndexConfigError):
            dependency_set(rotation, contraction, unit_disk, 4)
