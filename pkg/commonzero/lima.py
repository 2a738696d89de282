"""
Lima 型反例模块 - 在闭单位圆盘上构造满足括号条件但没有公共零点的向量场对

平面上的 X¹ = ∂x、Y¹ = x∂x + y∂y 满足 [X¹, Y¹] = X¹。把它们经
(R, θ) ↦ (R/√(1+R²), θ + (c/2)·log(1+R²)) 推到开圆盘上，再用 (1 - r²)^steepness
对 X 做正因子缩放，使 X 连续延拓为 ∂D² 上的零。
c（twist）非零时 X 的轨道双向盘旋趋近边界圆，Y 只在原点为零；twist = 0 时 Y 在整条边界圆上为零。
"""

import logging
from typing import Tuple

import numpy as np

from .core.domain import DiskSurface, Region
from .core.vfdsl import FieldExpr, NumericField, parse_field

logger = logging.getLogger(__name__)


def _lima_terms(x: np.ndarray, y: np.ndarray, twist: float):
    """圆盘内部的公共中间量：1 - r², 扭转角 α 与方向场 D"""
    one_minus = 1.0 - (x * x + y * y)
    inside = one_minus > 0
    safe = np.where(inside, one_minus, 1.0)
    alpha = 0.5 * twist * np.log(safe)
    cos_a = np.cos(alpha)
    sin_a = np.sin(alpha)
    u = x * cos_a - y * sin_a
    dx = cos_a + u * (-x - twist * y)
    dy = -sin_a + u * (-y + twist * x)
    return inside, safe, cos_a, sin_a, u, dx, dy


def build_lima_pair(steepness: float = 1.0, twist: float = 1.0) -> Tuple[NumericField, FieldExpr]:
    """
    构造闭单位圆盘上的向量场对 (X, Y)

    Y = (1 - r²)(x, y) + c·r²·(-y, x) 是多项式场，只在原点为零，在边界圆上沿切向旋转；
    X 是 ∂x 前推场的正倍数，[X, Y] 处处平行于 X，且在 r ≥ 1 处为零。

    Args:
        steepness: X 在边界处的衰减指数，必须为正
        twist: 扭转系数 c

    Returns:
        Tuple[NumericField, FieldExpr]: (X, Y)，X 带解析雅可比
    """
    if steepness <= 0:
        raise ValueError("steepness 必须为正")
    s = float(steepness)
    c = float(twist)

    def func(x, y):
        inside, safe, _, _, _, dx, dy = _lima_terms(x, y, c)
        weight = np.where(inside, safe**s, 0.0)
        return weight * dx, weight * dy

    def jac(x, y):
        inside, safe, cos_a, sin_a, u, dx, dy = _lima_terms(x, y, c)
        weight = np.where(inside, safe**s, 0.0)
        alpha_x = -c * x / safe
        alpha_y = -c * y / safe
        rot = -x * sin_a - y * cos_a
        u_x = cos_a + rot * alpha_x
        u_y = -sin_a + rot * alpha_y
        px, py = -x - c * y, -y + c * x
        # 对 x 求导
        dx_x = -sin_a * alpha_x + u_x * px - u
        dy_x = -cos_a * alpha_x + u_x * py + u * c
        # 对 y 求导
        dx_y = -sin_a * alpha_y + u_y * px - u * c
        dy_y = -cos_a * alpha_y + u_y * py - u
        dweight = np.where(inside, -2.0 * s * safe ** (s - 1.0), 0.0)
        w_x = dweight * x
        w_y = dweight * y
        parts = (
            w_x * dx + weight * dx_x,
            w_y * dx + weight * dx_y,
            w_x * dy + weight * dy_x,
            w_y * dy + weight * dy_y,
        )
        return tuple(np.where(inside, p, 0.0) for p in parts)

    X = NumericField(func, jac, name=f"lima_x(steepness={s:g}, twist={c:g})")
    Y = parse_field(
        f"((1 - x^2 - y^2)*x - {c!r}*(x^2 + y^2)*y, (1 - x^2 - y^2)*y + {c!r}*(x^2 + y^2)*x)"
    )
    logger.debug(f"已构造 Lima 向量场对: steepness={s}, twist={c}")
    return X, Y


def lima_planar_pair() -> Tuple[FieldExpr, FieldExpr]:
    """前推之前的平面向量场对 X¹ = (1, 0)、Y¹ = (x, y)，满足 [X¹, Y¹] = X¹"""
    return parse_field("(1, 0)"), parse_field("(x, y)")


def lima_surface() -> DiskSurface:
    return DiskSurface((0.0, 0.0), 1.0)


def lima_collar(inner: float = 0.8, n: int = 256) -> Region:
    """包含整条边界圆的环形孤立邻域，内圈半径为 inner，外圈位于收缩邻域中"""
    surface = lima_surface()
    return Region.annulus((0.0, 0.0), inner, 1.0 + surface.retraction_margin / 2, n)
