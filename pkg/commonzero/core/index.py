"""
指数模块 - 绕数、孤立零点的 Poincaré–Hopf 指数、不动点指数与向量场指数

不动点指数取位移场 x - f(retract(x)) 沿区域各条有向轮廓的绕数之和；
向量场指数取时间 τ 映射 Φ_τ 的不动点指数，τ 从 tau_initial 起减半直到相邻两次结果一致。
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domain import Curve, DiskSurface, Region, Surface
from .errors import (
    AnotherZeroError,
    FlowError,
    IndexConfigError,
    IndexInstabilityError,
    IsolationError,
    RadiusDependenceError,
    RefinementLimitError,
    TauSelectionError,
    VanishingOnContourError,
)
from .roots import scan_zeros
from .semiflow import FlowConfig, time_map
from .vfdsl import AnyField, field_values, jacobian_values

logger = logging.getLogger(__name__)

PointMap = Callable[[np.ndarray], np.ndarray]

MIN_MODULUS = 1e-10
# 绕数的小数部分容差（单位：圈）
FRACTION_TOL = 0.01
MIN_SAMPLES = 128


@dataclass(frozen=True)
class IndexConfig:
    """
    指数计算配置

    Attributes:
        tau_initial: τ 的初值
        tau_min: τ 的下限
        angle_step_max: 相邻样本间允许的最大转角
        contour_refinement_limit: 轮廓自适应加密的最大轮数
    """

    tau_initial: float = 0.1
    tau_min: float = 1e-4
    angle_step_max: float = math.pi / 4
    contour_refinement_limit: int = 24

    def __post_init__(self):
        if not 0 < self.tau_min < self.tau_initial:
            raise IndexConfigError("需要 0 < tau_min < tau_initial")
        if not 0 < self.angle_step_max <= math.pi / 2:
            raise IndexConfigError("需要 0 < angle_step_max <= π/2")
        if self.contour_refinement_limit < 1:
            raise IndexConfigError("contour_refinement_limit 至少为 1")

    @classmethod
    def from_dict(cls, overrides: Optional[Dict[str, Any]] = None) -> "IndexConfig":
        from ..config import get_index_defaults

        params = get_index_defaults()
        params.update(overrides or {})
        unknown = set(params) - set(cls.__dataclass_fields__)
        if unknown:
            raise IndexConfigError(f"未知的指数参数: {sorted(unknown)}")
        return cls(**params)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class IndexResult:
    """
    指数计算结果

    Attributes:
        value: 整数指数
        contour: 使用的轮廓（多条轮廓时为各轮廓列表）
        min_modulus: 轮廓上向量的最小模
        tau: 使用的 τ（仅向量场指数）
        refinement_count: 加密轮数
        contributions: 各条轮廓的绕数
    """

    value: int
    contour: List[Curve]
    min_modulus: float
    tau: Optional[float] = None
    refinement_count: int = 0
    contributions: List[int] = field(default_factory=list)
    samples: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "tau": self.tau,
            "min_modulus": self.min_modulus,
            "refinement_count": self.refinement_count,
            "contributions": self.contributions,
            "contour_points": [c.closed_polyline().tolist() for c in self.contour],
        }


def _initial_samples(curve: Curve, min_samples: int = MIN_SAMPLES) -> np.ndarray:
    """沿曲线按弧长补点，保留原顶点"""
    starts, ends = curve.segments()
    lengths = np.linalg.norm(ends - starts, axis=1)
    target = lengths.sum() / min_samples
    pieces = []
    for a, b, length in zip(starts, ends, lengths):
        k = max(1, int(math.ceil(length / target - 1e-9)))
        t = np.arange(k) / k
        pieces.append(a + t[:, None] * (b - a))
    return np.vstack(pieces)


def _angle_steps(values: np.ndarray) -> np.ndarray:
    nxt = np.roll(values, -1, axis=0)
    cross = values[:, 0] * nxt[:, 1] - values[:, 1] * nxt[:, 0]
    dot = np.einsum("ij,ij->i", values, nxt)
    return np.arctan2(cross, dot)


def _total_turns(values: np.ndarray) -> float:
    return float(_angle_steps(values).sum() / (2 * math.pi))


def winding_number(
    V: PointMap,
    contour: Curve,
    cfg: Optional[IndexConfig] = None,
    min_modulus: float = MIN_MODULUS,
) -> IndexResult:
    """
    向量映射 V 沿闭曲线的绕数

    相邻样本转角超过 angle_step_max 的段被二分加密；收敛后再整体加密一轮核对整数值。

    Raises:
        VanishingOnContourError: 轮廓上最小模低于阈值
        RefinementLimitError: 超过加密轮数上限
        IndexInstabilityError: 小数部分超出容差或额外加密改变结果
    """
    cfg = cfg or IndexConfig()
    if not contour.closed:
        raise IndexConfigError("绕数需要闭曲线")
    points = _initial_samples(contour)
    values = np.asarray(V(points), dtype=float).reshape(-1, 2)
    passes = 0
    while True:
        moduli = np.linalg.norm(values, axis=1)
        low = float(moduli.min())
        if not math.isfinite(low) or low <= min_modulus:
            worst = points[int(np.nanargmin(moduli))] if np.any(np.isfinite(moduli)) else points[0]
            raise VanishingOnContourError(
                f"向量在轮廓点 {tuple(np.round(worst, 12))} 处几乎为零（最小模 {low:.3g}）", low
            )
        steps = _angle_steps(values)
        bad = np.flatnonzero(np.abs(steps) >= cfg.angle_step_max)
        if bad.size == 0:
            break
        passes += 1
        if passes > cfg.contour_refinement_limit:
            raise RefinementLimitError(f"轮廓加密超过 {cfg.contour_refinement_limit} 轮仍未满足转角上限")
        nxt = (bad + 1) % len(points)
        mids = 0.5 * (points[bad] + points[nxt])
        mid_values = np.asarray(V(mids), dtype=float).reshape(-1, 2)
        points = np.insert(points, bad + 1, mids, axis=0)
        values = np.insert(values, bad + 1, mid_values, axis=0)

    turns = _total_turns(values)
    value = int(round(turns))
    if abs(turns - value) >= FRACTION_TOL:
        raise IndexInstabilityError(f"绕数 {turns:.4f} 不是整数")

    # 额外加密一轮核对
    mids = 0.5 * (points + np.roll(points, -1, axis=0))
    mid_values = np.asarray(V(mids), dtype=float).reshape(-1, 2)
    dense = np.empty((2 * len(points), 2))
    dense[0::2] = values
    dense[1::2] = mid_values
    dense_low = float(np.linalg.norm(mid_values, axis=1).min())
    if dense_low <= min_modulus:
        raise VanishingOnContourError(f"加密后轮廓上最小模 {dense_low:.3g}", dense_low)
    check = _total_turns(dense)
    if int(round(check)) != value or abs(check - value) >= FRACTION_TOL:
        raise IndexInstabilityError(f"额外加密改变了绕数: {value} -> {check:.4f}")

    return IndexResult(
        value=value,
        contour=[contour],
        min_modulus=min(low, dense_low),
        refinement_count=passes,
        contributions=[value],
        samples=len(dense),
    )


def field_map(X: AnyField) -> PointMap:
    return lambda pts: field_values(X, pts)


def index_at_zero(
    X: AnyField,
    p,
    r: float,
    cfg: Optional[IndexConfig] = None,
    scan_resolution: int = 64,
) -> IndexResult:
    """
    孤立零点 p 处的 Poincaré–Hopf 指数：半径 r 圆上的绕数，并与半径 r/2 的结果核对

    Raises:
        AnotherZeroError: 去心圆盘内还有其它零点
        RadiusDependenceError: r 与 r/2 的结果不同
    """
    center = np.asarray(p, dtype=float).reshape(2)
    if r <= 0:
        raise IndexConfigError("半径必须为正")
    disk = DiskSurface(center, r)
    scan = scan_zeros(X, disk, scan_resolution)
    for z in scan.zeros:
        if np.linalg.norm(z - center) > 1e-3 * r:
            raise AnotherZeroError(f"半径 {r} 的圆盘内另有零点 {tuple(z)}", tuple(float(v) for v in z))
    if len(scan.suspect_cells):
        centers = scan.grid.centers(scan.suspect_cells)
        far = np.linalg.norm(centers - center, axis=1) > 4 * scan.grid.half_diagonal
        if np.any(far):
            witness = centers[int(np.argmax(far))]
            raise AnotherZeroError(f"半径 {r} 的圆盘内有非孤立零集（单元 {tuple(witness)}）", tuple(witness))

    outer = winding_number(field_map(X), Curve.circle(center, r), cfg)
    inner = winding_number(field_map(X), Curve.circle(center, r / 2), cfg)
    if outer.value != inner.value:
        raise RadiusDependenceError(f"指数依赖半径: r 处 {outer.value}, r/2 处 {inner.value}")
    outer.refinement_count = max(outer.refinement_count, inner.refinement_count)
    outer.min_modulus = min(outer.min_modulus, inner.min_modulus)
    return outer


def fixed_point_index(
    f: PointMap,
    S: Surface,
    U: Region,
    cfg: Optional[IndexConfig] = None,
) -> IndexResult:
    """
    映射 f 在区域 U 上的不动点指数

    对 U 的每条有向轮廓计算位移场 x - f(retract_S(x)) 的绕数并求和（洞轮廓为顺时针，自动取负）

    Raises:
        VanishingOnContourError: 轮廓上有不动点
        OutsideMarginError: 轮廓超出收缩邻域
    """

    def displacement(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return pts - np.asarray(f(S.retract_many(pts)), dtype=float).reshape(-1, 2)

    parts = [winding_number(displacement, contour, cfg) for contour in U.contours]
    return IndexResult(
        value=sum(r.value for r in parts),
        contour=list(U.contours),
        min_modulus=min(r.min_modulus for r in parts),
        refinement_count=max(r.refinement_count for r in parts),
        contributions=[r.value for r in parts],
        samples=sum(r.samples for r in parts),
    )


def check_isolating(X: AnyField, S: Surface, U: Region, samples: int = 512) -> float:
    """
    检查 U 的轮廓上（S 内部分）没有零点

    Returns:
        轮廓上 |X| 的最小值

    Raises:
        IsolationError: 轮廓上有零点
    """
    low = math.inf
    for contour in U.contours:
        pts = _initial_samples(contour, samples)
        inside = S.contains_many(pts)
        if not np.any(inside):
            continue
        moduli = np.linalg.norm(field_values(X, pts[inside]), axis=1)
        k = int(np.argmin(moduli))
        low = min(low, float(moduli[k]))
        if moduli[k] <= MIN_MODULUS:
            raise IsolationError(f"轮廓点 {tuple(pts[inside][k])} 处向量场为零，区域不是孤立邻域")
    return low


def vector_field_index(
    X: AnyField,
    S: Surface,
    U: Region,
    cfg: Optional[IndexConfig] = None,
    flow_cfg: Optional[FlowConfig] = None,
) -> IndexResult:
    """
    向量场在孤立邻域 U 上的指数：Φ_τ 的不动点指数

    τ 从 tau_initial 起减半，直到相邻两次结果一致

    Raises:
        IsolationError: U 的轮廓上有零点
        TauSelectionError: τ 低于 tau_min 仍未稳定
    """
    cfg = cfg or IndexConfig()
    flow_cfg = flow_cfg or FlowConfig()
    check_isolating(X, S, U)

    tau = cfg.tau_initial
    previous: Optional[IndexResult] = None
    while tau >= cfg.tau_min:
        current_tau = tau

        def phi(points: np.ndarray) -> np.ndarray:
            return time_map(X, S, points, current_tau, flow_cfg)

        try:
            result: Optional[IndexResult] = fixed_point_index(phi, S, U, cfg)
        except (VanishingOnContourError, IndexInstabilityError, FlowError) as e:
            logger.debug(f"τ={tau:.4g} 时不动点指数不可用: {e}")
            result = None
        if result is not None:
            result.tau = tau
            if previous is not None and previous.value == result.value:
                logger.debug(f"τ 选定为 {previous.tau:.4g}，指数 {result.value}")
                return result
            previous = result
        else:
            previous = None
        tau /= 2
    raise TauSelectionError(f"τ 降到 {cfg.tau_min} 以下仍未得到稳定的指数")


def is_essential(
    X: AnyField,
    S: Surface,
    U: Region,
    cfg: Optional[IndexConfig] = None,
    flow_cfg: Optional[FlowConfig] = None,
) -> bool:
    """向量场指数非零时块是本质的"""
    return vector_field_index(X, S, U, cfg, flow_cfg).value != 0


# 非奇异同伦

IDENTICAL_DIRECTION = "identical_direction"
ANTIPODAL = "antipodal"
STRAIGHTLINE_NONSINGULAR = "straightline_nonsingular"
INCONCLUSIVE = "inconclusive"


@dataclass
class HomotopyVerdict:
    verdict: str
    max_angle_gap: float
    min_modulus: float

    @property
    def nonsingular(self) -> bool:
        return self.verdict != INCONCLUSIVE

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def nonsingular_homotopy_check(X: AnyField, Y: AnyField, C: Curve, samples: int = 512) -> HomotopyVerdict:
    """
    判断 X、Y 沿闭曲线 C 是否非奇异同伦

    单位向量处处相同、处处相反，或直线同伦 (1-t)X + tY 在 101 个 t 值上都不为零

    Raises:
        VanishingOnContourError: X 或 Y 在 C 上为零
    """
    pts = _initial_samples(C, samples)
    a = field_values(X, pts)
    b = field_values(Y, pts)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    low = float(min(na.min(), nb.min()))
    if low <= MIN_MODULUS:
        raise VanishingOnContourError(f"输入向量场在曲线上为零（最小模 {low:.3g}）", low)
    ua = a / na[:, None]
    ub = b / nb[:, None]
    gap = np.abs(np.arctan2(ua[:, 0] * ub[:, 1] - ua[:, 1] * ub[:, 0], np.einsum("ij,ij->i", ua, ub)))
    max_gap = float(gap.max())
    if max_gap < 1e-6:
        return HomotopyVerdict(IDENTICAL_DIRECTION, max_gap, low)
    if float(np.max(np.pi - gap)) < 1e-6:
        return HomotopyVerdict(ANTIPODAL, max_gap, low)
    ts = np.linspace(0.0, 1.0, 101)
    mixed = (1 - ts)[:, None, None] * a[None, :, :] + ts[:, None, None] * b[None, :, :]
    line_low = float(np.linalg.norm(mixed, axis=2).min())
    if line_low > 1e-8:
        return HomotopyVerdict(STRAIGHTLINE_NONSINGULAR, max_gap, line_low)
    return HomotopyVerdict(INCONCLUSIVE, max_gap, line_low)


# 零点分类


@dataclass
class ZeroClassification:
    """孤立零点的线性化分类"""

    point: Tuple[float, float]
    kind: str
    eigenvalues: List[complex]
    hyperbolic: bool
    stability: str
    index: Optional[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": list(self.point),
            "kind": self.kind,
            "eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "hyperbolic": self.hyperbolic,
            "stability": self.stability,
            "index": self.index,
        }


def classify_zero(X: AnyField, p, margin: float = 1e-6) -> ZeroClassification:
    """
    由雅可比特征值对零点分类：node / saddle / focus / center / degenerate

    双曲零点的指数为 sign(det J)
    """
    point = np.asarray(p, dtype=float).reshape(2)
    jac = jacobian_values(X, point)[0]
    eig = np.linalg.eigvals(jac)
    det = float(np.linalg.det(jac))
    hyperbolic = bool(np.min(np.abs(eig.real)) > margin)
    complex_pair = bool(np.max(np.abs(eig.imag)) > margin)
    if hyperbolic:
        if det < 0:
            kind = "saddle"
        elif complex_pair:
            kind = "focus"
        else:
            kind = "node"
    elif complex_pair and det > margin:
        kind = "center"
    else:
        kind = "degenerate"
    if hyperbolic and det > 0:
        stability = "stable" if eig.real.max() < 0 else "unstable"
    elif hyperbolic:
        stability = "unstable"
    else:
        stability = "neutral"
    index = int(np.sign(det)) if abs(det) > margin * margin else None
    return ZeroClassification(
        point=(float(point[0]), float(point[1])),
        kind=kind,
        eigenvalues=[complex(e) for e in eig],
        hyperbolic=hyperbolic,
        stability=stability,
        index=index,
    )


def total_index(results: Sequence[IndexResult]) -> int:
    return sum(r.value for r in results)
