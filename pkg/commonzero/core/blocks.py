"""
块模块 - 零集的块分解、孤立邻域构造与依赖集

零单元按 8 连通分量分组；每个分量膨胀 2 个单元后裁剪到与 S 相交的单元，
提取"区域在左侧"的格线轮廓作为孤立邻域。轮廓上有零点时继续膨胀（至多 5 轮），
膨胀后相互接触的分量合并为一个块并标记。
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .domain import Curve, Region, Surface
from .errors import IndexComputationError, IndexConfigError, IsolationError
from .index import IndexConfig, IndexResult, check_isolating, vector_field_index
from .roots import CellGrid, ZeroScan, extended_values, scan_zeros
from .semiflow import CellLocus, FlowConfig
from .vfdsl import AnyField, wedge_values

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 16
BASE_DILATION = 2
EXTRA_DILATION_PASSES = 5
_EIGHT = np.ones((3, 3), dtype=bool)


def find_zeros(X: AnyField, S: Surface, resolution: int = 256) -> ZeroScan:
    """
    扫描 X 在 S 上的零点

    Returns:
        ZeroScan：孤立零点（牛顿修正后）与无法修正的可疑单元
    """
    if resolution < MIN_RESOLUTION:
        raise IndexConfigError(f"分辨率至少为 {MIN_RESOLUTION}")
    return scan_zeros(X, S, resolution)


# 掩码与轮廓


def fill_pinches(mask: np.ndarray) -> np.ndarray:
    """填补只在对角相接的 2×2 构型，使轮廓成为简单闭曲线"""
    m = mask.copy()
    while True:
        a = m[:-1, :-1]
        b = m[1:, :-1]
        c = m[:-1, 1:]
        d = m[1:, 1:]
        diag = a & d & ~b & ~c
        anti = b & c & ~a & ~d
        if not (diag.any() or anti.any()):
            return m
        fill = diag | anti
        m[1:, :-1] |= fill
        m[:-1, 1:] |= fill
        m[:-1, :-1] |= fill
        m[1:, 1:] |= fill


def mask_contours(mask: np.ndarray, grid: CellGrid) -> List[Curve]:
    """
    从单元掩码提取有向边界（区域在左侧：外边界逆时针，洞顺时针）

    掩码索引 [i, j] 对应 x 方向第 i 个、y 方向第 j 个单元
    """
    padded = np.pad(mask, 1)
    edges: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}

    def add(start, end):
        edges.setdefault(start, []).append(end)

    for i, j in np.argwhere(mask):
        pi, pj = i + 1, j + 1
        if not padded[pi, pj - 1]:
            add((i, j), (i + 1, j))
        if not padded[pi + 1, pj]:
            add((i + 1, j), (i + 1, j + 1))
        if not padded[pi, pj + 1]:
            add((i + 1, j + 1), (i, j + 1))
        if not padded[pi - 1, pj]:
            add((i, j + 1), (i, j))

    curves = []
    while edges:
        start = min(edges)
        loop = [start]
        prev_dir = None
        current = start
        while True:
            options = edges[current]
            if len(options) == 1 or prev_dir is None:
                nxt = options[0]
            else:
                # 多条出边时优先左转
                def turn(option):
                    d = (option[0] - current[0], option[1] - current[1])
                    return -(prev_dir[0] * d[1] - prev_dir[1] * d[0])

                nxt = min(options, key=turn)
            options.remove(nxt)
            if not options:
                del edges[current]
            prev_dir = (nxt[0] - current[0], nxt[1] - current[1])
            current = nxt
            if current == start:
                break
            loop.append(current)
        curves.append(_lattice_curve(loop, grid))
    return curves


def _lattice_curve(loop: List[Tuple[int, int]], grid: CellGrid) -> Curve:
    verts = np.array(loop, dtype=float)
    # 去掉共线顶点
    prev = np.roll(verts, 1, axis=0)
    nxt = np.roll(verts, -1, axis=0)
    turn = (verts[:, 0] - prev[:, 0]) * (nxt[:, 1] - verts[:, 1]) - (verts[:, 1] - prev[:, 1]) * (
        nxt[:, 0] - verts[:, 0]
    )
    verts = verts[turn != 0]
    return Curve(grid.origin + verts * grid.cell, closed=True)


@dataclass
class Block:
    """
    零集的一个块及其孤立邻域

    Attributes:
        label: 块编号
        cells: 成员零单元 (k, 2)
        zeros: 块内修正后的零点
        region: 孤立邻域
        mask: 孤立邻域的单元掩码
        index: 向量场指数（计算失败时为 None，错误信息见 index_error）
        touches_boundary: 是否接触 ∂S
        merged_from: 合并前的分量编号（多于一个时表示分辨率不足以分开）
    """

    label: int
    cells: np.ndarray
    zeros: np.ndarray
    region: Region
    mask: np.ndarray = field(repr=False)
    index: Optional[IndexResult] = None
    touches_boundary: bool = False
    merged_from: List[int] = field(default_factory=list)
    index_error: Optional[str] = None

    @property
    def merged(self) -> bool:
        return len(self.merged_from) > 1

    def contains(self, points) -> np.ndarray:
        return self.region.contains(points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "cell_count": int(len(self.cells)),
            "zeros": self.zeros.tolist(),
            "index": self.index.value if self.index is not None else None,
            "tau": self.index.tau if self.index is not None else None,
            "min_modulus": self.index.min_modulus if self.index is not None else None,
            "touches_boundary": self.touches_boundary,
            "merged": self.merged,
            "merged_from": self.merged_from,
            "index_error": self.index_error,
            "contours": [c.closed_polyline().tolist() for c in self.region.contours],
        }


@dataclass
class BlockDecomposition:
    blocks: List[Block]
    scan: ZeroScan

    @property
    def merges(self) -> List[List[int]]:
        return [b.merged_from for b in self.blocks if b.merged]

    @property
    def index_sum(self) -> Optional[int]:
        if any(b.index is None for b in self.blocks):
            return None
        return sum(b.index.value for b in self.blocks)  # type: ignore[union-attr]

    def block_of(self, point) -> Optional[Block]:
        for block in self.blocks:
            if block.contains(point)[0]:
                return block
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": len(self.blocks),
            "index_sum": self.index_sum,
            "merges": self.merges,
            "blocks": [b.to_dict() for b in self.blocks],
        }


def _merge_overlapping(masks: Dict[int, np.ndarray], groups: Dict[int, List[int]]) -> bool:
    """合并相互接触的掩码；有合并时返回 True"""
    keys = sorted(masks)
    for a_pos, a in enumerate(keys):
        grown = ndimage.binary_dilation(masks[a], structure=_EIGHT)
        for b in keys[a_pos + 1 :]:
            if np.any(grown & masks[b]):
                masks[a] = masks[a] | masks[b]
                groups[a] = sorted(groups[a] + groups.pop(b))
                del masks[b]
                logger.info(f"分量 {groups[a]} 在当前分辨率下无法分开，已合并")
                return True
    return False


def decompose_blocks(
    X: AnyField,
    S: Surface,
    resolution: int = 256,
    cfg: Optional[IndexConfig] = None,
    flow_cfg: Optional[FlowConfig] = None,
    compute_index: bool = True,
) -> BlockDecomposition:
    """
    把零集分解为块，构造孤立邻域并计算各块的向量场指数

    Returns:
        BlockDecomposition（零点自由的向量场得到空列表）
    """
    scan = find_zeros(X, S, resolution)
    if scan.is_empty:
        return BlockDecomposition([], scan)

    grid = scan.grid
    meets = grid.meets(S)
    labels, count = ndimage.label(scan.mask, structure=_EIGHT)
    # 只有 S 内部的零单元不能落在邻域边缘；边界附近的轮廓位于收缩邻域中
    all_centers = grid.centers().reshape(-1, 2)
    interior = (
        S.contains_many(all_centers) & (S.boundary_distance_many(all_centers) > grid.half_diagonal)
    ).reshape(resolution, resolution)
    zero_mask = scan.mask & interior

    masks: Dict[int, np.ndarray] = {}
    groups: Dict[int, List[int]] = {}
    for label in range(1, count + 1):
        component = labels == label
        grown = ndimage.binary_dilation(component, structure=_EIGHT, iterations=BASE_DILATION)
        masks[label] = fill_pinches(grown & (meets | component))
        groups[label] = [label]
    while _merge_overlapping(masks, groups):
        pass

    blocks: List[Block] = []
    for key in sorted(masks):
        members = np.isin(labels, groups[key])
        mask = masks[key]
        region = None
        for attempt in range(EXTRA_DILATION_PASSES + 1):
            region = Region(tuple(mask_contours(mask, grid)))
            ring = mask & ~ndimage.binary_erosion(mask, structure=_EIGHT, border_value=0)
            try:
                if np.any(ring & zero_mask):
                    raise IsolationError("零单元位于邻域边缘")
                check_isolating(X, S, region)
                break
            except IsolationError as e:
                if attempt == EXTRA_DILATION_PASSES:
                    logger.warning(f"块 {groups[key]} 经 {EXTRA_DILATION_PASSES} 轮额外膨胀仍不孤立: {e}")
                    break
                mask = fill_pinches(ndimage.binary_dilation(mask, structure=_EIGHT) & (meets | members))
        masks[key] = mask

        cells = np.argwhere(members)
        centers = grid.centers(cells)
        inside = [z for z in scan.zeros if mask[tuple(grid.cell_of(z)[0])]]
        touches = bool(np.any(S.boundary_distance_many(S.project_many(centers)) <= grid.half_diagonal))
        blocks.append(
            Block(
                label=len(blocks) + 1,
                cells=cells,
                zeros=np.array(inside).reshape(-1, 2),
                region=region,  # type: ignore[arg-type]
                mask=mask,
                touches_boundary=touches,
                merged_from=groups[key],
            )
        )

    if compute_index:
        for block in blocks:
            try:
                block.index = vector_field_index(X, S, block.region, cfg, flow_cfg)
            except IndexComputationError as e:
                logger.warning(f"块 {block.label} 的指数计算失败: {e}")
                block.index_error = str(e)
    logger.info(f"块分解完成: {len(blocks)} 个块")
    return BlockDecomposition(blocks, scan)


@dataclass
class DependencySet:
    """
    依赖集 D(X, Y) 的单元近似

    Attributes:
        mask: 依赖单元掩码
        labels: 连通分量标号
        count: 分量数
        grid: 网格
        tol: 判定容差
    """

    mask: np.ndarray
    labels: np.ndarray
    count: int
    grid: CellGrid
    tol: float

    @property
    def cells(self) -> np.ndarray:
        return np.argwhere(self.mask)

    def centers(self) -> np.ndarray:
        return self.grid.centers(self.cells)

    def components(self) -> List[np.ndarray]:
        return [np.argwhere(self.labels == k) for k in range(1, self.count + 1)]

    def locus(self) -> CellLocus:
        return CellLocus(self.centers(), tuple(self.grid.cell))

    def distance(self, points) -> np.ndarray:
        return self.locus().distance(points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cell_count": int(self.mask.sum()),
            "components": self.count,
            "component_sizes": [int(len(c)) for c in self.components()],
            "tol": self.tol,
            "grid": self.grid.to_dict(),
        }


def dependency_set(
    X: AnyField,
    Y: AnyField,
    S: Surface,
    resolution: int = 256,
    tol: float = 1e-7,
) -> DependencySet:
    """
    |X ∧ Y| <= tol·(1 + |X||Y|) 的单元集合

    角点或中心满足判定、楔积在角点上变号，或含 X、Y 零点的单元都计入
    """
    if resolution < MIN_RESOLUTION:
        raise IndexConfigError(f"分辨率至少为 {MIN_RESOLUTION}")
    grid = CellGrid.covering(S, resolution)
    n = resolution
    meets = grid.meets(S)

    def scaled(points):
        proj = S.project_many(points)
        w = wedge_values(X, Y, proj)
        xs = np.linalg.norm(extended_values(X, S, points), axis=1)
        ys = np.linalg.norm(extended_values(Y, S, points), axis=1)
        return w, np.abs(w) <= tol * (1 + xs * ys)

    cx, cy = grid.corners()
    corner_w, corner_ok = scaled(np.column_stack([cx.ravel(), cy.ravel()]))
    corner_w = corner_w.reshape(n + 1, n + 1)
    corner_ok = corner_ok.reshape(n + 1, n + 1)
    _, center_ok = scaled(grid.centers().reshape(-1, 2))
    center_ok = center_ok.reshape(n, n)

    quad_w = np.stack([corner_w[:-1, :-1], corner_w[1:, :-1], corner_w[:-1, 1:], corner_w[1:, 1:]])
    quad_ok = np.stack([corner_ok[:-1, :-1], corner_ok[1:, :-1], corner_ok[:-1, 1:], corner_ok[1:, 1:]])
    sign_change = (quad_w.min(axis=0) < 0) & (quad_w.max(axis=0) > 0)
    mask = meets & (center_ok | quad_ok.any(axis=0) | sign_change)
    for F in (X, Y):
        scan = scan_zeros(F, S, resolution)
        mask |= scan.mask & meets
    labels, count = ndimage.label(mask, structure=_EIGHT)
    logger.debug(f"依赖集: {int(mask.sum())} 个单元, {count} 个分量")
    return DependencySet(mask, labels, count, grid, tol)
