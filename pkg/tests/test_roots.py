"""
零点扫描模块测试
"""

import numpy as np
import pytest

from commonzero.core.domain import RectangleSurface
from commonzero.core.roots import CellGrid, newton_polish, scan_zeros
from commonzero.core.vfdsl import parse_field


class TestCellGrid:
    """网格测试"""

    def test_covering_is_padded_by_half_cell(self, unit_disk):
        """测试网格外扩半个单元"""
        grid = CellGrid.covering(unit_disk, 4)
        np.testing.assert_allclose(grid.origin, [-1.25, -1.25])
        np.testing.assert_allclose(grid.cell, [0.625, 0.625])

    def test_cell_of_clips_to_grid(self, unit_disk):
        """测试点所在单元，网格外的点截断到边缘"""
        grid = CellGrid.covering(unit_disk, 4)
        np.testing.assert_array_equal(grid.cell_of([[0.0, 0.0], [5.0, -5.0]]), [[2, 2], [3, 0]])

    def test_meets(self, annulus):
        """测试只标记与曲面相交的单元"""
        grid = CellGrid.covering(annulus, 16)
        meets = grid.meets(annulus)
        assert not meets[8, 8]
        assert meets[0, 8]


class TestNewton:
    """牛顿修正测试"""

    def test_converges_to_simple_zero(self):
        """测试收敛到单零点"""
        root, residual = newton_polish(parse_field("(x^2 - 1, y)"), (0.8, 0.1))
        np.testing.assert_allclose(root, [1.0, 0.0], atol=1e-12)
        assert residual <= 1e-12

    def test_singular_jacobian(self):
        """测试雅可比奇异时放弃"""
        root, residual = newton_polish(parse_field("(x^2 + 1, y)"), (0.0, 0.0))
        assert root is None
        assert residual == pytest.approx(1.0)


class TestScanZeros:
    """零点扫描测试"""

    def test_two_isolated_zeros(self):
        """测试找到两个孤立零点"""
        S = RectangleSurface(-2.0, 2.0, -1.0, 1.0)
        scan = scan_zeros(parse_field("(x^2 - 1, y)"), S, 64)
        found = sorted(scan.zeros.tolist())
        np.testing.assert_allclose(found, [[-1.0, 0.0], [1.0, 0.0]], atol=1e-10)
        assert len(scan.suspect_cells) == 0
        assert scan.to_dict()["zeros"] == scan.zeros.tolist()

    def test_zero_outside_surface_is_ignored(self, annulus):
        """测试曲面外的零点不计入"""
        scan = scan_zeros(parse_field("(x, y)"), annulus, 32)
        assert scan.is_empty
        assert len(scan.zeros) == 0

    def test_zero_on_boundary(self, square):
        """测试位于边界上的零点"""
        scan = scan_zeros(parse_field("(x - 1, y)"), square, 32)
        np.testing.assert_allclose(scan.zeros, [[1.0, 0.0]], atol=1e-12)

    def test_curve_of_zeros_gives_suspect_cells(self, unit_disk):
        """测试曲线状零集被记为可疑单元"""
        scan = scan_zeros(parse_field("(x^2 + y^2 - 0.25, 0)"), unit_disk, 32)
        assert len(scan.zeros) == 0
        assert len(scan.suspect_cells) > 0
        centers = scan.grid.centers(scan.suspect_cells)
        radii = np.linalg.norm(centers, axis=1)
        assert np.all(np.abs(radii - 0.5) <= 2 * scan.grid.half_diagonal)
