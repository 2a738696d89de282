"""
曲面模块 - 带边界的紧致平面曲面：成员判定、边界曲线、欧拉示性数、向内锥判定与收缩映射

所有边界曲线遵循"区域在左侧"的定向约定：外边界逆时针，洞边界顺时针。
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CurveError, NotOnBoundaryError, OutsideMarginError, SurfaceSpecError

logger = logging.getLogger(__name__)

# 全局边界邻近容差
BOUNDARY_TOL = 1e-9
DEFAULT_MARGIN = 0.2
# 判定切向量时允许的相对误差
_CONE_EPS = 1e-12


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    return arr


def orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """三点定向行列式：正值表示 a->b->c 左转"""
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (
        c[..., 0] - a[..., 0]
    )


def _segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    """逐对判断线段 p1p2 与 q1q2 是否相交（含端点接触和共线重叠）"""
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    proper = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    collinear = (d1 == 0) & (d2 == 0) & (d3 == 0) & (d4 == 0)
    overlap_x = np.maximum(np.minimum(p1[..., 0], p2[..., 0]), np.minimum(q1[..., 0], q2[..., 0])) <= np.minimum(
        np.maximum(p1[..., 0], p2[..., 0]), np.maximum(q1[..., 0], q2[..., 0])
    )
    overlap_y = np.maximum(np.minimum(p1[..., 1], p2[..., 1]), np.minimum(q1[..., 1], q2[..., 1])) <= np.minimum(
        np.maximum(p1[..., 1], p2[..., 1]), np.maximum(q1[..., 1], q2[..., 1])
    )
    return np.where(collinear, overlap_x & overlap_y, proper)


def nearest_on_segments(points: np.ndarray, starts: np.ndarray, ends: np.ndarray):
    """
    计算每个点到一组线段的最近点

    Returns:
        (最近点 (n,2), 距离 (n,), 线段编号 (n,))
    """
    pts = _as_points(points)
    seg = ends - starts
    length2 = np.maximum(np.einsum("ij,ij->i", seg, seg), 1e-300)
    rel = pts[:, None, :] - starts[None, :, :]
    t = np.clip(np.einsum("nsk,sk->ns", rel, seg) / length2[None, :], 0.0, 1.0)
    proj = starts[None, :, :] + t[..., None] * seg[None, :, :]
    dist = np.linalg.norm(pts[:, None, :] - proj, axis=2)
    best = np.argmin(dist, axis=1)
    rows = np.arange(len(pts))
    return proj[rows, best], dist[rows, best], best


def winding_of_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """多边形绕点的绕数（向量化的 isLeft 交叉计数）"""
    pts = _as_points(points)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    is_left = (b[:, 0] - a[:, 0])[None, :] * (py - a[:, 1][None, :]) - (px - a[:, 0][None, :]) * (
        b[:, 1] - a[:, 1]
    )[None, :]
    upward = (a[:, 1][None, :] <= py) & (b[:, 1][None, :] > py) & (is_left > 0)
    downward = (a[:, 1][None, :] > py) & (b[:, 1][None, :] <= py) & (is_left < 0)
    return upward.sum(axis=1) - downward.sum(axis=1)


@dataclass(eq=False)
class Curve:
    """
    有序折线曲线

    Attributes:
        vertices: 顶点数组 (n, 2)，闭合曲线不重复首点
        closed: 是否闭合
        orientation: 闭合曲线为有向面积的符号（+1 逆时针，-1 顺时针），开曲线为 +1
    """

    vertices: np.ndarray
    closed: bool = True
    orientation: int = field(init=False, default=1)
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if self.closed and len(verts) > 1 and np.array_equal(verts[0], verts[-1]):
            verts = verts[:-1]
        self.vertices = verts
        if self.closed and len(verts) < 3:
            raise CurveError("闭合曲线至少需要3个顶点")
        if not self.closed and len(verts) < 2:
            raise CurveError("曲线至少需要2个顶点")
        steps = np.diff(np.vstack([verts, verts[:1]]) if self.closed else verts, axis=0)
        if np.any(np.all(steps == 0, axis=1)):
            raise CurveError("相邻顶点重合")
        if self.validate:
            self._check_simple()
        if self.closed:
            self.orientation = 1 if self.signed_area() >= 0 else -1

    def _check_simple(self) -> None:
        starts, ends = self.segments()
        count = len(starts)
        for i in range(count - 2):
            j = np.arange(i + 2, count)
            if self.closed and i == 0:
                j = j[j != count - 1]
            if j.size == 0:
                continue
            hits = _segments_intersect(starts[i], ends[i], starts[j], ends[j])
            if np.any(hits):
                raise CurveError(f"曲线自相交：第 {i} 段与第 {int(j[np.argmax(hits)])} 段")

    @classmethod
    def circle(cls, center: Sequence[float], radius: float, n: int = 256, orientation: int = 1) -> "Curve":
        """圆的折线近似，orientation 为 -1 时顺时针"""
        angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        if orientation < 0:
            angles = -angles
        verts = np.column_stack(
            [center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)]
        )
        return cls(verts, closed=True, validate=False)

    def segments(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.closed:
            return self.vertices, np.roll(self.vertices, -1, axis=0)
        return self.vertices[:-1], self.vertices[1:]

    def signed_area(self) -> float:
        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def length(self) -> float:
        starts, ends = self.segments()
        return float(np.linalg.norm(ends - starts, axis=1).sum())

    def reversed(self) -> "Curve":
        return Curve(self.vertices[::-1].copy(), closed=self.closed, validate=False)

    def closed_polyline(self) -> np.ndarray:
        """首尾相接的顶点数组，便于导出"""
        if self.closed:
            return np.vstack([self.vertices, self.vertices[:1]])
        return self.vertices.copy()

    def offset(self, distance: float) -> "Curve":
        """向右侧（区域外侧）做斜接偏移"""
        verts = self.vertices
        prev = np.roll(verts, 1, axis=0)
        nxt = np.roll(verts, -1, axis=0)
        d1 = verts - prev
        d2 = nxt - verts
        d1 = d1 / np.linalg.norm(d1, axis=1)[:, None]
        d2 = d2 / np.linalg.norm(d2, axis=1)[:, None]
        r1 = np.column_stack([d1[:, 1], -d1[:, 0]])
        r2 = np.column_stack([d2[:, 1], -d2[:, 0]])
        denom = np.maximum(1.0 + np.einsum("ij,ij->i", r1, r2), 0.25)
        moved = verts + distance * (r1 + r2) / denom[:, None]
        return Curve(moved, closed=True)


class Surface(ABC):
    """紧致平面曲面的抽象基类"""

    kind: str = "surface"

    def __init__(self, retraction_margin: float = DEFAULT_MARGIN):
        if retraction_margin <= 0:
            raise SurfaceSpecError("收缩邻域宽度必须为正")
        self.retraction_margin = float(retraction_margin)

    # 子类实现

    @abstractmethod
    def contains_many(self, points) -> np.ndarray:
        """闭区域成员判定（含边界，容差 BOUNDARY_TOL）"""

    @abstractmethod
    def project_many(self, points) -> np.ndarray:
        """最近点投影（区域内的点保持不变）"""

    @abstractmethod
    def boundary_distance_many(self, points) -> np.ndarray:
        """到边界的距离"""

    @abstractmethod
    def bounding_box(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)"""

    @property
    @abstractmethod
    def boundary(self) -> List[Curve]:
        """有向边界曲线列表"""

    @abstractmethod
    def euler_characteristic(self) -> int:
        """欧拉示性数"""

    @abstractmethod
    def inward(self, p: np.ndarray, v: np.ndarray) -> bool:
        """边界点 p 处向量 v 是否向内（p 已确认在边界上）"""

    @abstractmethod
    def boundary_samples(self, n: int = 256) -> np.ndarray:
        """边界上的样本点"""

    @abstractmethod
    def to_spec(self) -> Dict[str, Any]:
        """导出为场景文件中的曲面描述"""

    # 公共实现

    @property
    def euler_char(self) -> int:
        return self.euler_characteristic()

    def contains(self, p) -> bool:
        return bool(self.contains_many(p)[0])

    def distance_many(self, points) -> np.ndarray:
        pts = _as_points(points)
        return np.linalg.norm(pts - self.project_many(pts), axis=1)

    def retract_many(self, points) -> np.ndarray:
        """带邻域检查的收缩映射"""
        pts = _as_points(points)
        projected = self.project_many(pts)
        dist = np.linalg.norm(pts - projected, axis=1)
        if np.any(dist > self.retraction_margin):
            worst = int(np.argmax(dist))
            raise OutsideMarginError(
                f"点 {tuple(pts[worst])} 距曲面 {dist[worst]:.3g}，超出收缩邻域 {self.retraction_margin}"
            )
        inside = self.contains_many(pts)
        return np.where(inside[:, None], pts, projected)

    def reference_point(self) -> np.ndarray:
        """曲面内部的一个参考点"""
        xmin, ymin, xmax, ymax = self.bounding_box()
        grid = surface_grid(self, 33)
        if len(grid):
            center = np.array([(xmin + xmax) / 2, (ymin + ymax) / 2])
            return grid[np.argmin(np.linalg.norm(grid - center, axis=1))]
        return np.array([(xmin + xmax) / 2, (ymin + ymax) / 2])

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_spec()})"


class DiskSurface(Surface):
    """闭圆盘"""

    kind = "disk"

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0, retraction_margin: float = DEFAULT_MARGIN):
        super().__init__(retraction_margin)
        if radius <= 0:
            raise SurfaceSpecError("圆盘半径必须为正")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def _radial(self, points):
        rel = _as_points(points) - self.center
        return rel, np.linalg.norm(rel, axis=1)

    def contains_many(self, points) -> np.ndarray:
        _, r = self._radial(points)
        return r <= self.radius + BOUNDARY_TOL

    def project_many(self, points) -> np.ndarray:
        rel, r = self._radial(points)
        scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
        return self.center + rel * scale[:, None]

    def boundary_distance_many(self, points) -> np.ndarray:
        _, r = self._radial(points)
        return np.abs(r - self.radius)

    def bounding_box(self):
        cx, cy = self.center
        return (cx - self.radius, cy - self.radius, cx + self.radius, cy + self.radius)

    @property
    def boundary(self) -> List[Curve]:
        return [Curve.circle(self.center, self.radius)]

    def euler_characteristic(self) -> int:
        return 1

    def inward(self, p, v) -> bool:
        normal = self.center - p
        return _half_plane_ok(v, normal)

    def boundary_samples(self, n: int = 256) -> np.ndarray:
        return Curve.circle(self.center, self.radius, n).vertices

    def to_spec(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "radius": self.radius,
            "retraction_margin": self.retraction_margin,
        }


class AnnulusSurface(Surface):
    """闭圆环 r_inner <= |p - c| <= r_outer"""

    kind = "annulus"

    def __init__(
        self,
        center=(0.0, 0.0),
        r_inner: float = 0.5,
        r_outer: float = 1.0,
        retraction_margin: float = DEFAULT_MARGIN,
    ):
        super().__init__(retraction_margin)
        if not 0 < r_inner < r_outer:
            raise SurfaceSpecError("圆环需要 0 < r_inner < r_outer")
        self.center = np.asarray(center, dtype=float)
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)

    def _radial(self, points):
        rel = _as_points(points) - self.center
        return rel, np.linalg.norm(rel, axis=1)

    def contains_many(self, points) -> np.ndarray:
        _, r = self._radial(points)
        return (r >= self.r_inner - BOUNDARY_TOL) & (r <= self.r_outer + BOUNDARY_TOL)

    def project_many(self, points) -> np.ndarray:
        rel, r = self._radial(points)
        # 圆心处方向取 +x
        direction = np.where(
            r[:, None] > 0, rel / np.maximum(r, 1e-300)[:, None], np.array([1.0, 0.0])
        )
        clamped = np.clip(r, self.r_inner, self.r_outer)
        moved = self.center + direction * clamped[:, None]
        keep = (r >= self.r_inner) & (r <= self.r_outer)
        return np.where(keep[:, None], _as_points(points), moved)

    def boundary_distance_many(self, points) -> np.ndarray:
        _, r = self._radial(points)
        return np.minimum(np.abs(r - self.r_inner), np.abs(r - self.r_outer))

    def bounding_box(self):
        cx, cy = self.center
        return (cx - self.r_outer, cy - self.r_outer, cx + self.r_outer, cy + self.r_outer)

    @property
    def boundary(self) -> List[Curve]:
        return [
            Curve.circle(self.center, self.r_outer),
            Curve.circle(self.center, self.r_inner, orientation=-1),
        ]

    def euler_characteristic(self) -> int:
        return 0

    def inward(self, p, v) -> bool:
        rel = p - self.center
        r = float(np.linalg.norm(rel))
        # 外圆内法向指向圆心，内圆内法向背离圆心
        normal = -rel if abs(r - self.r_outer) <= abs(r - self.r_inner) else rel
        return _half_plane_ok(v, normal)

    def boundary_samples(self, n: int = 256) -> np.ndarray:
        return np.vstack([c.vertices for c in self.boundary_curves_sampled(n)])

    def boundary_curves_sampled(self, n: int) -> List[Curve]:
        return [
            Curve.circle(self.center, self.r_outer, n),
            Curve.circle(self.center, self.r_inner, n, orientation=-1),
        ]

    def to_spec(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "r_inner": self.r_inner,
            "r_outer": self.r_outer,
            "retraction_margin": self.retraction_margin,
        }


class PolygonSurface(Surface):
    """带洞多边形；外边界和洞边界会被规范为"区域在左侧"的定向"""

    kind = "polygon_with_holes"

    def __init__(self, outer, holes=(), retraction_margin: float = DEFAULT_MARGIN):
        super().__init__(retraction_margin)
        outer_curve = Curve(np.asarray(outer, dtype=float))
        if outer_curve.orientation < 0:
            outer_curve = outer_curve.reversed()
        hole_curves = []
        for hole in holes:
            curve = Curve(np.asarray(hole, dtype=float))
            if curve.orientation > 0:
                curve = curve.reversed()
            hole_curves.append(curve)
        self._curves = [outer_curve] + hole_curves
        self._check_layout()
        starts = [c.segments()[0] for c in self._curves]
        ends = [c.segments()[1] for c in self._curves]
        self._starts = np.vstack(starts)
        self._ends = np.vstack(ends)
        # 每条边所在曲线的局部编号信息，用于角点判定
        self._edge_owner = np.concatenate([np.full(len(s), k) for k, s in enumerate(starts)])
        self._edge_local = np.concatenate([np.arange(len(s)) for s in starts])

    def _check_layout(self) -> None:
        """边界曲线两两不相交，洞全部位于外边界内且互不嵌套"""
        outer = self._curves[0]
        for k, hole in enumerate(self.holes, start=1):
            if np.any(winding_of_polygon(hole.vertices, outer.vertices) == 0):
                raise SurfaceSpecError(f"第 {k} 个洞不在外边界内")
        for a in range(len(self._curves)):
            a_starts, a_ends = self._curves[a].segments()
            for b in range(a + 1, len(self._curves)):
                b_starts, b_ends = self._curves[b].segments()
                hits = _segments_intersect(
                    a_starts[:, None, :], a_ends[:, None, :], b_starts[None, :, :], b_ends[None, :, :]
                )
                if np.any(hits):
                    raise SurfaceSpecError(f"边界曲线 {a} 与 {b} 相交")
                if a > 0 and np.any(winding_of_polygon(self._curves[b].vertices, self._curves[a].vertices) != 0):
                    raise SurfaceSpecError(f"洞 {b} 位于洞 {a} 之内")
                if a > 0 and np.any(winding_of_polygon(self._curves[a].vertices, self._curves[b].vertices) != 0):
                    raise SurfaceSpecError(f"洞 {a} 位于洞 {b} 之内")

    @property
    def boundary(self) -> List[Curve]:
        return list(self._curves)

    @property
    def holes(self) -> List[Curve]:
        return self._curves[1:]

    def euler_characteristic(self) -> int:
        return 1 - len(self.holes)

    def contains_many(self, points) -> np.ndarray:
        pts = _as_points(points)
        inside = winding_of_polygon(pts, self._curves[0].vertices) != 0
        for hole in self.holes:
            inside &= winding_of_polygon(pts, hole.vertices) == 0
        return inside | (self.boundary_distance_many(pts) <= BOUNDARY_TOL)

    def boundary_distance_many(self, points) -> np.ndarray:
        _, dist, _ = nearest_on_segments(_as_points(points), self._starts, self._ends)
        return dist

    def project_many(self, points) -> np.ndarray:
        pts = _as_points(points)
        nearest, _, _ = nearest_on_segments(pts, self._starts, self._ends)
        inside = self.contains_many(pts)
        return np.where(inside[:, None], pts, nearest)

    def bounding_box(self):
        verts = self._curves[0].vertices
        return (
            float(verts[:, 0].min()),
            float(verts[:, 1].min()),
            float(verts[:, 0].max()),
            float(verts[:, 1].max()),
        )

    def inward(self, p, v) -> bool:
        rel = p[None, :] - self._starts
        seg = self._ends - self._starts
        length2 = np.einsum("ij,ij->i", seg, seg)
        t = np.clip(np.einsum("ij,ij->i", rel, seg) / length2, 0.0, 1.0)
        dist = np.linalg.norm(p[None, :] - (self._starts + t[:, None] * seg), axis=1)
        near = np.flatnonzero(dist <= BOUNDARY_TOL)
        normals = np.column_stack([-seg[:, 1], seg[:, 0]])
        at_vertex = [k for k in near if t[k] <= 0.0 or t[k] >= 1.0]
        if len(near) >= 2 and at_vertex:
            # 角点：按曲线顺序找到入边和出边
            edges = sorted(near, key=lambda k: t[k])
            outgoing = edges[0]
            incoming = edges[-1]
            turn = float(seg[incoming, 0] * seg[outgoing, 1] - seg[incoming, 1] * seg[outgoing, 0])
            ok_in = _half_plane_ok(v, normals[incoming])
            ok_out = _half_plane_ok(v, normals[outgoing])
            # 凸角取交集，凹角取并集
            return (ok_in and ok_out) if turn >= 0 else (ok_in or ok_out)
        return _half_plane_ok(v, normals[near[0]])

    def boundary_samples(self, n: int = 256) -> np.ndarray:
        samples = []
        total = sum(c.length() for c in self._curves)
        for curve in self._curves:
            starts, ends = curve.segments()
            for a, b in zip(starts, ends):
                count = max(2, int(round(n * np.linalg.norm(b - a) / total)))
                t = np.linspace(0.0, 1.0, count, endpoint=False)
                samples.append(a + t[:, None] * (b - a))
        return np.vstack(samples)

    def to_spec(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "outer": self._curves[0].vertices.tolist(),
            "holes": [h.vertices.tolist() for h in self.holes],
            "retraction_margin": self.retraction_margin,
        }


class RectangleSurface(PolygonSurface):
    """轴平行矩形窗口，收缩映射为坐标截断"""

    kind = "rectangle"

    def __init__(self, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0, retraction_margin=DEFAULT_MARGIN):
        if not (x_min < x_max and y_min < y_max):
            raise SurfaceSpecError("矩形需要 x_min < x_max 且 y_min < y_max")
        self.x_min, self.x_max = float(x_min), float(x_max)
        self.y_min, self.y_max = float(y_min), float(y_max)
        outer = [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_max, self.y_max),
            (self.x_min, self.y_max),
        ]
        super().__init__(outer, (), retraction_margin)

    def contains_many(self, points) -> np.ndarray:
        pts = _as_points(points)
        return (
            (pts[:, 0] >= self.x_min - BOUNDARY_TOL)
            & (pts[:, 0] <= self.x_max + BOUNDARY_TOL)
            & (pts[:, 1] >= self.y_min - BOUNDARY_TOL)
            & (pts[:, 1] <= self.y_max + BOUNDARY_TOL)
        )

    def project_many(self, points) -> np.ndarray:
        pts = _as_points(points)
        return np.column_stack(
            [np.clip(pts[:, 0], self.x_min, self.x_max), np.clip(pts[:, 1], self.y_min, self.y_max)]
        )

    def to_spec(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "retraction_margin": self.retraction_margin,
        }


class HalfplaneWindowSurface(RectangleSurface):
    """矩形窗口与半平面 y >= 0 的交"""

    kind = "halfplane_window"

    def __init__(self, x_min=-1.0, x_max=1.0, y_min=0.0, y_max=1.0, retraction_margin=DEFAULT_MARGIN):
        if y_max <= 0:
            raise SurfaceSpecError("半平面窗口需要 y_max > 0")
        super().__init__(x_min, x_max, max(0.0, float(y_min)), y_max, retraction_margin)


def _half_plane_ok(v, normal) -> bool:
    v = np.asarray(v, dtype=float)
    normal = np.asarray(normal, dtype=float)
    scale = float(np.linalg.norm(v) * np.linalg.norm(normal))
    return float(np.dot(v, normal)) >= -_CONE_EPS * scale


@dataclass(eq=False)
class Region:
    """
    由轮廓列表给出的平面区域（外轮廓逆时针，洞轮廓顺时针）

    与曲面 S 相交后即为孤立邻域 U；轮廓可以位于 S 的收缩邻域内
    """

    contours: Tuple[Curve, ...]

    def __post_init__(self):
        self.contours = tuple(self.contours)
        if not self.contours:
            raise CurveError("区域至少需要一条轮廓")

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius: float = 1.0, n: int = 256) -> "Region":
        return cls((Curve.circle(center, radius, n),))

    @classmethod
    def annulus(cls, center=(0.0, 0.0), r_inner: float = 0.5, r_outer: float = 1.0, n: int = 256) -> "Region":
        return cls((Curve.circle(center, r_outer, n), Curve.circle(center, r_inner, n, orientation=-1)))

    @classmethod
    def whole(cls, surface: Surface, n: int = 256) -> "Region":
        """覆盖整个曲面的区域：边界向收缩邻域内偏移半个邻域宽度"""
        off = surface.retraction_margin / 2
        if isinstance(surface, DiskSurface):
            return cls.disk(surface.center, surface.radius + off, n)
        if isinstance(surface, AnnulusSurface):
            inner = surface.r_inner - off if surface.r_inner > off else surface.r_inner / 2
            return cls.annulus(surface.center, inner, surface.r_outer + off, n)
        return cls(tuple(curve.offset(off) for curve in surface.boundary))

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points)
        total = np.zeros(len(pts), dtype=int)
        for contour in self.contours:
            wn = winding_of_polygon(pts, contour.vertices)
            total += wn
        return total != 0

    def to_dict(self) -> Dict[str, Any]:
        return {"contours": [c.closed_polyline().tolist() for c in self.contours]}


# 规范操作


def contains(surface: Surface, p) -> bool:
    """p 是否属于闭区域 S（含边界）"""
    return surface.contains(p)


def inward_cone_test(surface: Surface, p, v) -> bool:
    """
    边界点 p 处的向内锥判定

    光滑点要求 v 与内法向内积非负；角点处凸角要求同时满足两条边的半平面条件，凹角满足其一即可。
    与边界相切的向量视为向内。

    Raises:
        NotOnBoundaryError: p 到边界的距离超过 1e-9
    """
    point = np.asarray(p, dtype=float).reshape(2)
    distance = float(surface.boundary_distance_many(point)[0])
    if distance > BOUNDARY_TOL:
        raise NotOnBoundaryError(f"点 {tuple(point)} 不在边界上（距离 {distance:.3g}）")
    vec = np.asarray(v, dtype=float).reshape(2)
    if not np.any(vec):
        return True
    return surface.inward(point, vec)


def euler_characteristic(surface: Surface) -> int:
    """平面曲面的欧拉示性数 1 - 洞数"""
    return surface.euler_characteristic()


def retract(surface: Surface, p) -> np.ndarray:
    """
    收缩邻域到曲面的最近点投影，在曲面上为恒等映射

    Raises:
        OutsideMarginError: dist(p, S) 超过 retraction_margin
    """
    return surface.retract_many(np.asarray(p, dtype=float).reshape(1, 2))[0]


def surface_grid(surface: Surface, n: int = 64) -> np.ndarray:
    """包围盒上 n×n 均匀网格与曲面的交"""
    xmin, ymin, xmax, ymax = surface.bounding_box()
    xs, ys = np.meshgrid(np.linspace(xmin, xmax, n), np.linspace(ymin, ymax, n), indexing="xy")
    points = np.column_stack([xs.ravel(), ys.ravel()])
    return points[surface.contains_many(points)]


_SURFACE_KINDS = {
    "disk": DiskSurface,
    "annulus": AnnulusSurface,
    "halfplane_window": HalfplaneWindowSurface,
    "rectangle": RectangleSurface,
    "polygon_with_holes": PolygonSurface,
}


def surface_from_spec(spec: Dict[str, Any]) -> Surface:
    """
    根据场景文件中的描述构造曲面

    Args:
        spec: {"kind": ..., 参数...}

    Raises:
        SurfaceSpecError: 类型未知或参数不合法
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SurfaceSpecError("曲面描述必须是带 kind 字段的对象")
    params = dict(spec)
    kind = params.pop("kind")
    cls = _SURFACE_KINDS.get(kind)
    if cls is None:
        raise SurfaceSpecError(f"未知的曲面类型: {kind}")
    try:
        return cls(**params)
    except TypeError as e:
        raise SurfaceSpecError(f"曲面 {kind} 参数错误: {e}") from e
    except CurveError as e:
        raise SurfaceSpecError(f"曲面 {kind} 的边界不合法: {e}") from e


def describe_surface(surface: Optional[Surface]) -> str:
    if surface is None:
        return "<none>"
    return f"{surface.kind}(χ={surface.euler_characteristic()})"
