"""
零点扫描模块 - 网格扫描与牛顿修正

向量场在网格角点上取 X∘proj_S 的值（与指数计算使用的收缩扩张一致）。
候选单元：两个分量在角点上都变号（含取零），或中心处 |X| 为零。
候选单元上从中心出发做牛顿迭代；收敛的得到精确零点，失败但 |X| 足够小的记为可疑单元。
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .domain import Surface
from .vfdsl import AnyField, field_values, jacobian_values

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12
# 零点去重半径
DEDUP_RADIUS = 1e-8


@dataclass
class CellGrid:
    """覆盖曲面包围盒的 n×n 单元网格"""

    origin: np.ndarray
    cell: np.ndarray
    resolution: int

    @classmethod
    def covering(cls, S: Surface, resolution: int) -> "CellGrid":
        xmin, ymin, xmax, ymax = S.bounding_box()
        # 外扩半个单元，保证边界上的零点落在单元内部
        pad_x = (xmax - xmin) / (2 * resolution)
        pad_y = (ymax - ymin) / (2 * resolution)
        origin = np.array([xmin - pad_x, ymin - pad_y])
        cell = np.array([(xmax - xmin + 2 * pad_x) / resolution, (ymax - ymin + 2 * pad_y) / resolution])
        return cls(origin, cell, resolution)

    @property
    def half_diagonal(self) -> float:
        return float(np.hypot(*self.cell) / 2)

    def corners(self) -> Tuple[np.ndarray, np.ndarray]:
        """角点坐标网格，形状 (n+1, n+1)，索引 [i, j] 对应 x_i, y_j"""
        xs = self.origin[0] + self.cell[0] * np.arange(self.resolution + 1)
        ys = self.origin[1] + self.cell[1] * np.arange(self.resolution + 1)
        return np.meshgrid(xs, ys, indexing="ij")

    def centers(self, cells: Optional[np.ndarray] = None) -> np.ndarray:
        """单元中心；cells 为 (k, 2) 整数索引，缺省时返回全部 (n, n, 2)"""
        if cells is None:
            idx = np.arange(self.resolution) + 0.5
            cx, cy = np.meshgrid(
                self.origin[0] + self.cell[0] * idx, self.origin[1] + self.cell[1] * idx, indexing="ij"
            )
            return np.stack([cx, cy], axis=-1)
        cells = np.asarray(cells, dtype=float).reshape(-1, 2)
        return self.origin + (cells + 0.5) * self.cell

    def cell_of(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        idx = np.floor((pts - self.origin) / self.cell).astype(int)
        return np.clip(idx, 0, self.resolution - 1)

    def meets(self, S: Surface) -> np.ndarray:
        """与 S 相交的单元：中心到 S 的距离不超过半对角线"""
        centers = self.centers().reshape(-1, 2)
        dist = S.distance_many(centers)
        return (dist <= self.half_diagonal).reshape(self.resolution, self.resolution)

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.tolist(),
            "cell": self.cell.tolist(),
            "resolution": self.resolution,
        }


@dataclass
class ZeroScan:
    """
    零点扫描结果

    Attributes:
        zeros: 牛顿修正后的孤立零点 (m, 2)
        zero_cells: 每个零点所在的单元
        suspect_cells: 无法修正的候选单元 (k, 2)，用于曲线状零集
        mask: 零点单元与可疑单元的并 (n, n)
        grid: 扫描网格
    """

    zeros: np.ndarray
    zero_cells: np.ndarray
    suspect_cells: np.ndarray
    mask: np.ndarray
    grid: CellGrid
    residuals: List[float] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def to_dict(self) -> dict:
        return {
            "zeros": self.zeros.tolist(),
            "residuals": self.residuals,
            "suspect_cells": len(self.suspect_cells),
            "zero_cell_count": int(self.mask.sum()),
            "grid": self.grid.to_dict(),
        }


def extended_values(X: AnyField, S: Surface, points) -> np.ndarray:
    """X∘proj_S：在 S 外取最近点处的值"""
    return field_values(X, S.project_many(points))


def newton_polish(X: AnyField, start, max_iter: int = NEWTON_MAX_ITER) -> Tuple[Optional[np.ndarray], float]:
    """
    从 start 出发做牛顿迭代

    Returns:
        (收敛点或 None, 最终残差 |X|)
    """
    p = np.asarray(start, dtype=float).reshape(2).copy()
    residual = float("inf")
    for _ in range(max_iter):
        value = field_values(X, p)[0]
        residual = float(np.linalg.norm(value))
        if not np.isfinite(residual):
            return None, residual
        if residual <= NEWTON_TOL:
            return p, residual
        jac = jacobian_values(X, p)[0]
        if not np.all(np.isfinite(jac)):
            return None, residual
        scale = max(float(np.abs(jac).max()), 1e-300)
        if abs(float(np.linalg.det(jac))) <= 1e-12 * scale * scale:
            return None, residual
        step = np.linalg.solve(jac, value)
        p = p - step
        if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(p)):
            value = field_values(X, p)[0]
            residual = float(np.linalg.norm(value))
            return (p, residual) if residual <= 1e3 * NEWTON_TOL else (None, residual)
    return None, residual


def scan_zeros(X: AnyField, S: Surface, resolution: int) -> ZeroScan:
    """在覆盖 S 的网格上扫描零点"""
    grid = CellGrid.covering(S, resolution)
    n = resolution
    meets = grid.meets(S)
    cx, cy = grid.corners()
    corner_pts = np.column_stack([cx.ravel(), cy.ravel()])
    values = extended_values(X, S, corner_pts).reshape(n + 1, n + 1, 2)

    def changes_sign(comp):
        quad = np.stack([comp[:-1, :-1], comp[1:, :-1], comp[:-1, 1:], comp[1:, 1:]])
        return (quad.min(axis=0) <= 0) & (quad.max(axis=0) >= 0)

    centers = grid.centers().reshape(-1, 2)
    center_vals = extended_values(X, S, centers).reshape(n, n, 2)
    center_mod = np.linalg.norm(center_vals, axis=-1)
    candidates = meets & ((changes_sign(values[..., 0]) & changes_sign(values[..., 1])) | (center_mod == 0))

    zeros: List[np.ndarray] = []
    residuals: List[float] = []
    zero_cells: List[Tuple[int, int]] = []
    mask = np.zeros((n, n), dtype=bool)
    suspects: List[Tuple[int, int]] = []
    for i, j in np.argwhere(candidates):
        center = grid.centers(np.array([[i, j]]))[0]
        start = S.project_many(center)[0]
        root, residual = newton_polish(X, start)
        if root is not None and S.contains(root):
            home = grid.cell_of(root)[0]
            if np.max(np.abs(home - (i, j))) <= 1:
                known = [k for k, z in enumerate(zeros) if np.linalg.norm(z - root) <= DEDUP_RADIUS]
                if not known:
                    zeros.append(root)
                    residuals.append(residual)
                    zero_cells.append((int(home[0]), int(home[1])))
                    mask[home[0], home[1]] = True
                mask[i, j] |= bool(np.all(np.abs(root - center) <= grid.cell / 2 + 1e-12))
                continue
        # 修正失败：按局部 Lipschitz 估计判断该单元是否可能含零点
        jac = jacobian_values(X, start)[0]
        lipschitz = float(np.linalg.norm(jac, 2)) if np.all(np.isfinite(jac)) else np.inf
        if center_mod[i, j] <= 1.5 * lipschitz * grid.half_diagonal:
            suspects.append((int(i), int(j)))
            mask[i, j] = True

    logger.debug(f"零点扫描: {len(zeros)} 个孤立零点, {len(suspects)} 个可疑单元 (分辨率 {resolution})")
    return ZeroScan(
        zeros=np.array(zeros).reshape(-1, 2),
        zero_cells=np.array(zero_cells, dtype=int).reshape(-1, 2),
        suspect_cells=np.array(suspects, dtype=int).reshape(-1, 2),
        mask=mask,
        grid=grid,
        residuals=residuals,
    )
