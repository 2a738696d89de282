"""
半流模块 - 向内向量场的积分、Nelson 乘积公式、不变性探测

积分器为 RKF45 嵌入对（传播五阶解）或定步长 RK4。批量积分共享同一步长序列，
因此时间映射的有限差分雅可比不会混入步长控制噪声。
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domain import BOUNDARY_TOL, Surface, inward_cone_test, surface_grid
from .errors import (
    EvaluationDomainError,
    FlowConfigError,
    FlowError,
    OutsideMarginError,
    SampleTooCloseError,
)
from .vfdsl import AnyField, field_values, linear_combination

logger = logging.getLogger(__name__)

TIME_REACHED = "time_reached"
LEFT_SURFACE = "left_surface"
STEP_UNDERFLOW = "step_underflow"
BLOWUP = "blowup"

_BLOWUP_NORM = 1e12

# RKF45 系数表
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3554 / 2565, 1859 / 4104, -11 / 40],
]
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


@dataclass(frozen=True)
class FlowConfig:
    """
    积分器配置

    Attributes:
        method: rk4_fixed 或 rk45_adaptive
        rtol, atol: 自适应步长的相对/绝对容差
        step: 初始步长（rk4_fixed 下为固定步长）
        h_min, h_max: 步长上下限
        boundary_policy: project（每步收缩回 S）或 reject（离开 S 即终止）
        projection_tol: 投影容差；投影前偏离超过其 10 倍时拒绝该步
        h_project_min: 拒绝缩步的下限，低于此步长时强制投影并计数
        max_steps: 单次积分的最大步数
    """

    method: str = "rk45_adaptive"
    rtol: float = 1e-10
    atol: float = 1e-10
    step: float = 1e-2
    h_min: float = 1e-12
    h_max: float = 0.1
    boundary_policy: str = "project"
    projection_tol: float = 1e-9
    h_project_min: float = 1e-6
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise FlowConfigError(f"未知的积分方法: {self.method}")
        if self.boundary_policy not in ("project", "reject"):
            raise FlowConfigError(f"未知的边界策略: {self.boundary_policy}")
        for name in ("rtol", "atol", "step", "h_min", "h_max", "projection_tol", "h_project_min"):
            if getattr(self, name) <= 0:
                raise FlowConfigError(f"{name} 必须为正")
        if self.h_min > self.h_max:
            raise FlowConfigError("h_min 不能大于 h_max")
        if self.max_steps <= 0:
            raise FlowConfigError("max_steps 必须为正")

    @classmethod
    def from_dict(cls, overrides: Optional[Dict[str, Any]] = None) -> "FlowConfig":
        """以 config.get_flow_defaults() 为底，叠加场景中的覆盖项"""
        from ..config import get_flow_defaults

        params = get_flow_defaults()
        params.update(overrides or {})
        unknown = set(params) - set(cls.__dataclass_fields__)
        if unknown:
            raise FlowConfigError(f"未知的积分器参数: {sorted(unknown)}")
        return cls(**params)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def tightened(self, factor: float = 100.0) -> "FlowConfig":
        return replace(self, rtol=self.rtol / factor, atol=self.atol / factor)


@dataclass
class Trajectory:
    """
    半流的离散轨道

    Attributes:
        initial: 初始点
        times: 时间样本，times[0] = 0，严格递增
        points: 与 times 对应的轨道点 (n, 2)
        reason: 终止原因
        max_excursion: 投影前偏离 S 的最大距离
        forced_projections: 在最小步长下强制投影的次数
    """

    initial: np.ndarray
    times: np.ndarray
    points: np.ndarray
    reason: str
    max_excursion: float = 0.0
    forced_projections: int = 0

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def to_rows(self) -> List[Tuple[float, float, float]]:
        """导出为 (t, x, y) 行"""
        return [(float(t), float(p[0]), float(p[1])) for t, p in zip(self.times, self.points)]


@dataclass
class BatchResult:
    """批量积分的结果"""

    points: np.ndarray
    reasons: List[str]
    times: np.ndarray
    max_excursion: float = 0.0
    forced_projections: int = 0
    history: Optional[List[Tuple[float, np.ndarray]]] = field(default=None, repr=False)

    @property
    def complete(self) -> bool:
        return all(r == TIME_REACHED for r in self.reasons)


def _rhs(X: AnyField, state: np.ndarray) -> np.ndarray:
    values = field_values(X, state)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.all(np.isfinite(values), axis=1)))
        raise EvaluationDomainError("向量场取值不是有限数", (float(state[bad, 0]), float(state[bad, 1])))
    return values


def _rkf45_step(X: AnyField, state: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """返回 (五阶解, 误差估计, 起点斜率)"""
    stages: List[np.ndarray] = []
    for i in range(6):
        incr = state.copy()
        for j, a in enumerate(_A[i]):
            incr = incr + h * a * stages[j]
        stages.append(_rhs(X, incr))
    k = np.stack(stages)
    high = state + h * np.tensordot(_B5, k, axes=1)
    low = state + h * np.tensordot(_B4, k, axes=1)
    return high, high - low, stages[0]


def _rk4_step(X: AnyField, state: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    k1 = _rhs(X, state)
    k2 = _rhs(X, state + 0.5 * h * k1)
    k3 = _rhs(X, state + 0.5 * h * k2)
    k4 = _rhs(X, state + h * k3)
    return state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), k1


def integrate_batch(
    X: AnyField,
    S: Surface,
    points,
    t: float,
    cfg: Optional[FlowConfig] = None,
    record: bool = False,
) -> BatchResult:
    """
    以共同步长序列积分一批初始点到时间 t

    project 策略下初始点先被收缩到 S；reject 策略下离开 S 的点冻结并记为 left_surface。
    """
    cfg = cfg or FlowConfig()
    if t < 0:
        raise FlowConfigError("只支持正向时间")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if cfg.boundary_policy == "project":
        state = S.retract_many(pts)
    else:
        state = pts.copy()
    count = len(state)
    reasons = [TIME_REACHED] * count
    stopped = np.zeros(count, dtype=float)
    alive = np.ones(count, dtype=bool)
    history = [(0.0, state.copy())] if record else None

    time = 0.0
    h = min(cfg.step, cfg.h_max, t) if t > 0 else 0.0
    steps = 0
    max_excursion = 0.0
    forced = 0

    while time < t and np.any(alive):
        if steps >= cfg.max_steps:
            for k in np.flatnonzero(alive):
                reasons[k] = STEP_UNDERFLOW
            logger.warning(f"积分达到最大步数 {cfg.max_steps}，t={time:.6g}")
            break
        h = min(h, t - time)
        live = state[alive]
        if cfg.method == "rk4_fixed":
            candidate, slope = _rk4_step(X, live, h)
            next_h = cfg.step
        else:
            candidate, err, slope = _rkf45_step(X, live, h)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(live), np.abs(candidate))
            err_norm = float(np.max(np.abs(err) / scale)) if len(live) else 0.0
            if not math.isfinite(err_norm):
                err_norm = 1e10
            factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** (-0.2)))
            if err_norm > 1.0:
                h *= factor
                if h < cfg.h_min:
                    for k in np.flatnonzero(alive):
                        reasons[k] = STEP_UNDERFLOW
                    logger.warning(f"步长下溢 h={h:.3g}，t={time:.6g}")
                    break
                continue
            next_h = min(cfg.h_max, h * factor)

        projected = S.project_many(candidate)
        excursion = np.linalg.norm(candidate - projected, axis=1)
        worst = float(excursion.max()) if len(excursion) else 0.0

        if cfg.boundary_policy == "project":
            large = excursion > 10 * cfg.projection_tol
            # 偏离与步长同阶说明向量场在边界处指向外侧，缩步无济于事
            pushing = large & (excursion > 0.1 * h * np.linalg.norm(slope, axis=1))
            overshoot = large & ~pushing
            if np.any(overshoot) and h > cfg.h_project_min:
                h = max(h / 2, cfg.h_project_min)
                continue
            forced += int(np.count_nonzero(large))
            max_excursion = max(max_excursion, worst)
            candidate = np.where((excursion > 0)[:, None], projected, candidate)
        else:
            leaving = excursion > BOUNDARY_TOL
            if np.any(leaving):
                idx = np.flatnonzero(alive)[leaving]
                for k in idx:
                    reasons[k] = LEFT_SURFACE
                    stopped[k] = time + h
                max_excursion = max(max_excursion, worst)

        time += h
        steps += 1
        idx = np.flatnonzero(alive)
        state[idx] = candidate
        norms = np.linalg.norm(candidate, axis=1)
        blown = ~np.isfinite(norms) | (norms > _BLOWUP_NORM)
        for k in idx[blown]:
            reasons[k] = BLOWUP
            stopped[k] = time
        for k in idx:
            if reasons[k] == TIME_REACHED:
                stopped[k] = time
        alive = np.array([r == TIME_REACHED for r in reasons])
        if record:
            history.append((time, state.copy()))
        h = next_h

    if forced:
        logger.debug(f"强制投影 {forced} 次（向量场在边界处指向外侧）")
    return BatchResult(state, reasons, stopped, max_excursion, forced, history)


# 规范操作


def flow(X: AnyField, S: Surface, p, t: float, cfg: Optional[FlowConfig] = None) -> Trajectory:
    """
    积分 dy/dt = X(y), y(0) = p 到时间 t，记录所有接受的步

    project 策略下每步结果收缩回 S，因此对向内向量场 S 正向不变
    """
    start = np.asarray(p, dtype=float).reshape(2)
    result = integrate_batch(X, S, start.reshape(1, 2), t, cfg, record=True)
    times = np.array([tm for tm, _ in result.history])
    points = np.array([pts[0] for _, pts in result.history])
    points[0] = start
    return Trajectory(
        initial=start,
        times=times,
        points=points,
        reason=result.reasons[0],
        max_excursion=result.max_excursion,
        forced_projections=result.forced_projections,
    )


def time_map(X: AnyField, S: Surface, points, t: float, cfg: Optional[FlowConfig] = None) -> np.ndarray:
    """
    时间 t 映射 Φ_t 在一批点上的值

    Raises:
        FlowError: 任一点未能积分到时间 t
    """
    result = integrate_batch(X, S, points, t, cfg)
    if not result.complete:
        failed = [r for r in result.reasons if r != TIME_REACHED]
        raise FlowError(f"时间映射在 {len(failed)} 个点上失败: {sorted(set(failed))}")
    return result.points


def time_map_jacobian(
    X: AnyField,
    S: Surface,
    points,
    t: float,
    cfg: Optional[FlowConfig] = None,
    h: float = 1e-5,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Φ_t 的中心差分雅可比，步长 h·(1 + |p|)

    Returns:
        (Φ_t(points) (n, 2), 雅可比 (n, 2, 2))
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    steps = h * (1.0 + np.linalg.norm(pts, axis=1))
    ex = np.column_stack([steps, np.zeros(n)])
    ey = np.column_stack([np.zeros(n), steps])
    stencil = np.vstack([pts, pts + ex, pts - ex, pts + ey, pts - ey])
    mapped = time_map(X, S, stencil, t, cfg)
    center, xp, xm, yp, ym = (mapped[k * n : (k + 1) * n] for k in range(5))
    dx = (xp - xm) / (2 * steps[:, None])
    dy = (yp - ym) / (2 * steps[:, None])
    jac = np.stack([dx, dy], axis=-1)
    return center, jac


def nelson_compose(
    X: AnyField,
    Y: AnyField,
    S: Surface,
    p,
    t: float,
    k: int,
    cfg: Optional[FlowConfig] = None,
) -> np.ndarray:
    """
    (f_{t/k} ∘ g_{t/k})^k (p)，f、g 分别为 X、Y 的流

    k → ∞ 时收敛到 X + Y 的流
    """
    if k < 1:
        raise FlowConfigError("k 必须是正整数")
    point = np.asarray(p, dtype=float).reshape(1, 2)
    dt = t / k
    for _ in range(k):
        point = time_map(Y, S, point, dt, cfg)
        point = time_map(X, S, point, dt, cfg)
    return point[0]


# 不变集与探测


class PointLocus:
    """有限点集"""

    def __init__(self, points):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)

    def distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(self.points) == 0:
            return np.full(len(pts), np.inf)
        return np.min(np.linalg.norm(pts[:, None, :] - self.points[None, :, :], axis=2), axis=1)


class CircleLocus:
    """圆周 |p - c| = r"""

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.abs(np.linalg.norm(pts - self.center, axis=1) - self.radius)


class CellLocus:
    """网格单元的并（单元以中心和边长给出）"""

    def __init__(self, centers, cell_size: Tuple[float, float]):
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        self.half = np.asarray(cell_size, dtype=float) / 2

    def distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(self.centers) == 0:
            return np.full(len(pts), np.inf)
        best = np.full(len(pts), np.inf)
        # 分块计算，避免大矩阵
        for start in range(0, len(self.centers), 2048):
            block = self.centers[start : start + 2048]
            gap = np.maximum(np.abs(pts[:, None, :] - block[None, :, :]) - self.half, 0.0)
            best = np.minimum(best, np.linalg.norm(gap, axis=2).min(axis=1))
        return best


@dataclass
class InvarianceReport:
    """正向不变性探测结果"""

    violations: List[Dict[str, Any]]
    failures: List[Dict[str, Any]]
    checked: int
    max_distance: float

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "violations": self.violations,
            "failures": self.failures,
            "checked": self.checked,
            "max_distance": self.max_distance,
        }


def check_positive_invariance(
    L,
    Y: AnyField,
    S: Surface,
    samples,
    t_max: float,
    cfg: Optional[FlowConfig] = None,
    tol: float = 1e-6,
) -> InvarianceReport:
    """
    把 L 中的样本沿 Y 流到 t_max，报告距离 L 超过 tol 的偏离

    L 需提供 distance(points) 方法。单个样本的积分失败只记录不中断。
    """
    violations: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    overall = 0.0
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    for p in pts:
        try:
            traj = flow(Y, S, p, t_max, cfg)
        except (EvaluationDomainError, OutsideMarginError, FlowError) as e:
            logger.warning(f"样本 {tuple(p)} 积分失败: {e}")
            failures.append({"sample": p.tolist(), "error": str(e)})
            continue
        dist = L.distance(traj.points)
        worst = int(np.argmax(dist))
        overall = max(overall, float(dist[worst]))
        if dist[worst] > tol:
            violations.append(
                {
                    "sample": p.tolist(),
                    "distance": float(dist[worst]),
                    "time": float(traj.times[worst]),
                    "point": traj.points[worst].tolist(),
                }
            )
    return InvarianceReport(violations, failures, len(pts), overall)


@dataclass
class PermutationReport:
    """Φ^Y_t 是否把 X 的积分曲线映到积分曲线"""

    entries: List[Dict[str, Any]]
    max_residual: float
    min_factor: float

    def holds(self, tol: float = 1e-5) -> bool:
        return self.max_residual < tol and self.min_factor > 0

    def to_dict(self) -> Dict[str, Any]:
        return {"entries": self.entries, "max_residual": self.max_residual, "min_factor": self.min_factor}


def check_permutes_integral_curves(
    X: AnyField,
    Y: AnyField,
    S: Surface,
    samples,
    t: float,
    cfg: Optional[FlowConfig] = None,
) -> PermutationReport:
    """
    对每个样本 p，令 q = Φ^Y_t(p)，用中心差分求 TΦ^Y_t，检查 TΦ(X_p) 与 X_q 平行

    残差为两向量夹角的正弦绝对值；因子 c 由 TΦ(X_p) = c·X_q 给出。

    Raises:
        SampleTooCloseError: 样本处 |X_p| < 1e-8
    """
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    xp = field_values(X, pts)
    small = np.linalg.norm(xp, axis=1) < 1e-8
    if np.any(small):
        bad = pts[int(np.argmax(small))]
        raise SampleTooCloseError(f"样本 {tuple(bad)} 距 X 的零点过近")
    q, jac = time_map_jacobian(Y, S, pts, t, cfg)
    pushed = np.einsum("nij,nj->ni", jac, xp)
    xq = field_values(X, q)
    cross = pushed[:, 0] * xq[:, 1] - pushed[:, 1] * xq[:, 0]
    norms = np.linalg.norm(pushed, axis=1) * np.linalg.norm(xq, axis=1)
    residual = np.abs(cross) / np.maximum(norms, 1e-300)
    factor = np.einsum("ni,ni->n", pushed, xq) / np.maximum(np.einsum("ni,ni->n", xq, xq), 1e-300)
    entries = [
        {"sample": p.tolist(), "image": qq.tolist(), "factor": float(c), "residual": float(r)}
        for p, qq, c, r in zip(pts, q, factor, residual)
    ]
    return PermutationReport(entries, float(residual.max()), float(factor.min()))


@dataclass
class InwardReport:
    """边界采样的向内检查"""

    inward: bool
    checked: int
    violations: List[List[float]]

    def to_dict(self) -> Dict[str, Any]:
        return {"inward": self.inward, "checked": self.checked, "violations": self.violations}


def check_inward(X: AnyField, S: Surface, n: int = 256) -> InwardReport:
    """在边界样本上做向内锥判定"""
    samples = S.boundary_samples(n)
    values = field_values(X, samples)
    bad = [p.tolist() for p, v in zip(samples, values) if not inward_cone_test(S, p, v)]
    return InwardReport(not bad, len(samples), bad[:20])


def boundary_adjacent_samples(S: Surface, count: int = 100, grid: int = 128) -> np.ndarray:
    """S 内离边界最近的 count 个网格点，按离边界距离排序"""
    pts = surface_grid(S, grid)
    dist = S.boundary_distance_many(pts)
    order = np.lexsort((pts[:, 1], pts[:, 0], dist))
    chosen = pts[order[: count * 4]]
    return chosen[:: max(1, len(chosen) // count)][:count]


@dataclass
class ConeReport:
    """向内向量场非负组合的模拟结果"""

    cases: List[Dict[str, Any]]

    @property
    def holds(self) -> bool:
        return all(c["stays"] for c in self.cases)

    def to_dict(self) -> Dict[str, Any]:
        return {"holds": self.holds, "cases": self.cases}


def check_inward_combination(
    fields: Sequence[AnyField],
    S: Surface,
    coeffs: Sequence[Sequence[float]],
    samples: int = 100,
    t: float = 1.0,
    cfg: Optional[FlowConfig] = None,
) -> ConeReport:
    """
    对每组非负系数，积分组合场 sum a_i X_i 的边界附近轨道，检查投影前偏离不超过投影容差的 10 倍
    """
    cfg = cfg or FlowConfig()
    starts = boundary_adjacent_samples(S, samples)
    cases = []
    for weights in coeffs:
        if any(w < 0 for w in weights):
            raise FlowConfigError("组合系数必须非负")
        combined = linear_combination(list(fields), list(weights))
        result = integrate_batch(combined, S, starts, t, cfg)
        stays = result.forced_projections == 0 and result.max_excursion <= 10 * cfg.projection_tol
        cases.append(
            {
                "coeffs": [float(w) for w in weights],
                "max_excursion": result.max_excursion,
                "forced_projections": result.forced_projections,
                "stays": bool(stays),
            }
        )
    return ConeReport(cases)
