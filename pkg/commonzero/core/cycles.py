"""
周期轨道模块 - Poincaré 回归映射、周期轨道检测与保面积检验
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .domain import Surface, nearest_on_segments, surface_grid
from .errors import FlowError, NoReturnError, TransversalityError
from .semiflow import TIME_REACHED, FlowConfig, flow, time_map, time_map_jacobian
from .vfdsl import AnyField, FieldExpr, field_values, jacobian_values

logger = logging.getLogger(__name__)

TRANSVERSALITY_TOL = 1e-6
RECURRENCE_TOL = 1e-4
CLOSURE_TOL = 1e-6
AREA_TOL = 1e-6


@dataclass(frozen=True)
class Transversal:
    """横截线段 J = [a, b]，弧长坐标 s ∈ [0, |b - a|]"""

    a: Tuple[float, float]
    b: Tuple[float, float]

    @property
    def start(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)

    @property
    def direction(self) -> np.ndarray:
        d = np.asarray(self.b, dtype=float) - self.start
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.asarray(self.b, dtype=float) - self.start))

    def point(self, s) -> np.ndarray:
        return self.start + np.multiply.outer(np.asarray(s, dtype=float), self.direction)

    def side(self, points) -> np.ndarray:
        """到 J 所在直线的有向距离（左侧为正）"""
        rel = np.asarray(points, dtype=float).reshape(-1, 2) - self.start
        d = self.direction
        return d[0] * rel[:, 1] - d[1] * rel[:, 0]

    def coordinate(self, points) -> np.ndarray:
        rel = np.asarray(points, dtype=float).reshape(-1, 2) - self.start
        return rel @ self.direction

    def to_dict(self) -> Dict[str, Any]:
        return {"a": list(self.a), "b": list(self.b)}


@dataclass
class ReturnMap:
    """
    采样的首次回归映射

    Attributes:
        transversal: 横截线段
        s_in: 出发点的弧长坐标
        s_out: 回归点的弧长坐标（未回归为 nan）
        times: 回归时间（未回归为 nan）
        direction: 穿越方向（+1 从右到左）
    """

    transversal: Transversal
    s_in: np.ndarray
    s_out: np.ndarray
    times: np.ndarray
    direction: int

    @property
    def returned(self) -> np.ndarray:
        return np.isfinite(self.s_out)

    @property
    def max_displacement(self) -> float:
        mask = self.returned
        if not np.any(mask):
            return float("nan")
        return float(np.max(np.abs(self.s_out[mask] - self.s_in[mask])))

    def to_rows(self) -> List[Tuple[float, float, float]]:
        return [(float(a), float(b), float(t)) for a, b, t in zip(self.s_in, self.s_out, self.times)]

    def to_dict(self) -> Dict[str, Any]:
        finite = lambda arr: [float(v) if np.isfinite(v) else None for v in arr]  # noqa: E731
        return {
            "transversal": self.transversal.to_dict(),
            "s_in": finite(self.s_in),
            "s_out": finite(self.s_out),
            "times": finite(self.times),
            "returned": int(self.returned.sum()),
            "max_displacement": self.max_displacement if np.any(self.returned) else None,
        }


def _crossing_direction(Y: AnyField, J: Transversal, samples: int = 101) -> int:
    pts = J.point(np.linspace(0.0, J.length, samples))
    values = field_values(Y, pts)
    d = J.direction
    normal = d[0] * values[:, 1] - d[1] * values[:, 0]
    low = float(np.min(np.abs(normal)))
    if low <= TRANSVERSALITY_TOL or np.any(np.sign(normal) != np.sign(normal[0])):
        raise TransversalityError(f"向量场与横截线段不横截（最小法向分量 {low:.3g}）")
    return int(np.sign(normal[0]))


def first_return(
    Y: AnyField,
    S: Surface,
    J: Transversal,
    s: float,
    direction: int,
    cfg: Optional[FlowConfig] = None,
    t_budget: float = 50.0,
    chunk: float = 2.0,
) -> Tuple[Optional[float], Optional[float]]:
    """
    从 J 上坐标 s 的点出发，沿同一方向再次穿越 J 时的 (坐标, 时间)

    穿越点在一个积分步内用 brentq 求精
    """
    point = J.point(s)
    elapsed = 0.0
    left_start = False
    while elapsed < t_budget:
        span = min(chunk, t_budget - elapsed)
        traj = flow(Y, S, point, span, cfg)
        sides = J.side(traj.points) * direction
        for k in range(1, len(traj.points)):
            if sides[k] < 0:
                left_start = True
            if left_start and sides[k - 1] < 0 <= sides[k]:
                base = traj.points[k - 1]
                dt = traj.times[k] - traj.times[k - 1]

                def g(tau, base=base):
                    if tau <= 0:
                        return float(J.side(base)[0] * direction)
                    return float(J.side(time_map(Y, S, base, tau, cfg))[0] * direction)

                g_end = g(dt)
                if g_end >= 0:
                    tau = optimize.brentq(g, 0.0, dt, xtol=1e-14, rtol=1e-14)
                else:
                    # 步末恰在直线上，重积分的舍入使符号翻转
                    tau = dt
                hit = time_map(Y, S, base, tau, cfg)[0] if tau > 0 else base
                coord = float(J.coordinate(hit)[0])
                if -1e-9 <= coord <= J.length + 1e-9:
                    return coord, elapsed + float(traj.times[k - 1]) + tau
                left_start = False
        if traj.reason != TIME_REACHED or np.linalg.norm(traj.endpoint - point) == 0:
            return None, None
        elapsed += traj.final_time
        point = traj.endpoint
    return None, None


def poincare_return_map(
    Y: AnyField,
    S: Surface,
    J: Transversal,
    cfg: Optional[FlowConfig] = None,
    samples: int = 20,
    t_budget: float = 50.0,
) -> ReturnMap:
    """
    横截线段 J 上的首次回归映射

    Raises:
        TransversalityError: Y 与 J 不横截
        NoReturnError: 没有样本回归（异常携带完整的映射）
    """
    direction = _crossing_direction(Y, J)
    s_in = J.length * (np.arange(samples) + 0.5) / samples
    s_out = np.full(samples, np.nan)
    times = np.full(samples, np.nan)
    for k, s in enumerate(s_in):
        try:
            coord, t = first_return(Y, S, J, float(s), direction, cfg, t_budget)
        except FlowError as e:
            logger.warning(f"回归映射样本 s={s:.4g} 积分失败: {e}")
            continue
        if coord is not None:
            s_out[k] = coord
            times[k] = t
    result = ReturnMap(J, s_in, s_out, times, direction)
    if not np.any(result.returned):
        raise NoReturnError("横截线段上没有样本回归", result)
    return result


@dataclass
class Cycle:
    """
    周期轨道

    Attributes:
        points: 闭合轨道折线
        period: 周期
        transversal: 求精时使用的横截线段
        closure_gap: 首尾距离
    """

    points: np.ndarray
    period: float
    transversal: Transversal
    closure_gap: float
    seed: Optional[Tuple[float, float]] = None

    def distance(self, points) -> np.ndarray:
        starts = self.points[:-1]
        ends = self.points[1:]
        _, dist, _ = nearest_on_segments(np.asarray(points, dtype=float).reshape(-1, 2), starts, ends)
        return dist

    @property
    def dedup_tolerance(self) -> float:
        """折线弦误差量级的去重半径"""
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return max(RECURRENCE_TOL, 0.25 * float(steps.max())) if len(steps) else RECURRENCE_TOL

    def encloses(self, points) -> np.ndarray:
        from .domain import winding_of_polygon

        return winding_of_polygon(np.asarray(points, dtype=float).reshape(-1, 2), self.points[:-1]) != 0

    def to_rows(self) -> List[Tuple[float, float]]:
        return [(float(p[0]), float(p[1])) for p in self.points]

    def to_dict(self) -> Dict[str, Any]:
        centroid = self.points.mean(axis=0)
        return {
            "period": self.period,
            "closure_gap": self.closure_gap,
            "vertices": int(len(self.points)),
            "centroid": centroid.tolist(),
            "mean_radius": float(np.linalg.norm(self.points - centroid, axis=1).mean()),
            "transversal": self.transversal.to_dict(),
            "seed": list(self.seed) if self.seed is not None else None,
        }


def detect_cycles(
    Y: AnyField,
    S: Surface,
    seeds,
    cfg: Optional[FlowConfig] = None,
    t_transient: float = 20.0,
    t_budget: float = 50.0,
) -> List[Cycle]:
    """
    从每个种子出发检测周期轨道

    先积分一段暂态，在到达点放置法向横截线段，检测回归并用回归映射的不动点求精
    """
    xmin, ymin, xmax, ymax = S.bounding_box()
    half = 0.05 * float(np.hypot(xmax - xmin, ymax - ymin))
    cycles: List[Cycle] = []
    for seed in np.asarray(seeds, dtype=float).reshape(-1, 2):
        try:
            cycle = _cycle_from_seed(Y, S, seed, cfg, t_transient, t_budget, half)
        except (FlowError, TransversalityError) as e:
            logger.warning(f"种子 {tuple(seed)} 的周期轨道检测失败: {e}")
            continue
        if cycle is None:
            continue
        if any(float(c.distance(cycle.points[:1])[0]) < c.dedup_tolerance for c in cycles):
            continue
        cycles.append(cycle)
    logger.info(f"检测到 {len(cycles)} 条周期轨道")
    return cycles


def _cycle_from_seed(Y, S, seed, cfg, t_transient, t_budget, half) -> Optional[Cycle]:
    q = flow(Y, S, seed, t_transient, cfg).endpoint
    speed = field_values(Y, q)[0]
    if np.linalg.norm(speed) < 1e-8:
        return None
    normal = np.array([-speed[1], speed[0]]) / np.linalg.norm(speed)
    # 靠近零点时缩短横截线段
    for attempt in range(3):
        J = Transversal(tuple(q - half * normal), tuple(q + half * normal))
        try:
            direction = _crossing_direction(Y, J, samples=21)
            break
        except TransversalityError:
            if attempt == 2:
                raise
            half /= 4
    s0 = half
    s1, t1 = first_return(Y, S, J, s0, direction, cfg, t_budget)
    if s1 is None or abs(s1 - s0) > max(RECURRENCE_TOL, 0.5 * half):
        return None

    def residual(s):
        value, _ = first_return(Y, S, J, float(s), direction, cfg, t_budget)
        if value is None:
            raise FlowError(f"求精过程中坐标 {s:.6g} 未回归")
        return value - s

    s_star = s0
    if abs(s1 - s0) > 1e-8:
        try:
            s_star = float(optimize.newton(residual, s0, x1=s1, tol=1e-12, maxiter=50))
        except RuntimeError as e:
            # 回归映射接近恒等（中心型）时割线法不收敛，保留起点交给闭合误差判定
            logger.debug(f"割线求精未收敛: {e}")
            s_star = s0
        if not 0.0 <= s_star <= J.length:
            return None
    start = J.point(s_star)
    s_back, period = first_return(Y, S, J, s_star, direction, cfg, t_budget)
    if s_back is None or period is None:
        return None
    orbit = flow(Y, S, start, period, cfg)
    gap = float(np.linalg.norm(orbit.endpoint - start))
    if gap >= CLOSURE_TOL:
        logger.debug(f"候选周期轨道闭合误差 {gap:.3g}，舍弃")
        return None
    points = np.vstack([orbit.points[:-1], start])
    return Cycle(points, float(period), J, gap, (float(seed[0]), float(seed[1])))


@dataclass
class AreaReport:
    """保面积检验"""

    divergence_max: float
    jacobian_deviation_max: float
    verdict: str
    probes: int = 0

    @property
    def preserving(self) -> bool:
        return self.verdict == "preserving"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "divergence_max": self.divergence_max,
            "jacobian_deviation_max": self.jacobian_deviation_max,
            "verdict": self.verdict,
            "probes": self.probes,
        }


def divergence_values(Y: AnyField, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if isinstance(Y, FieldExpr):
        return Y.divergence().evaluate(pts[:, 0], pts[:, 1])
    jac = jacobian_values(Y, pts)
    return jac[:, 0, 0] + jac[:, 1, 1]


def is_area_preserving(
    Y: AnyField,
    S: Surface,
    probes,
    t: float = 1.0,
    cfg: Optional[FlowConfig] = None,
    grid: int = 64,
) -> AreaReport:
    """
    两项检验：S 上散度的最大绝对值；探针点处 Φ_t 雅可比行列式与 1 的最大偏差

    Raises:
        FlowError: 探针点积分失败
    """
    samples = surface_grid(S, grid)
    div = np.abs(divergence_values(Y, samples))
    divergence_max = float(div.max()) if len(div) else 0.0
    pts = np.asarray(probes, dtype=float).reshape(-1, 2)
    _, jac = time_map_jacobian(Y, S, pts, t, cfg)
    det = np.linalg.det(jac)
    deviation = float(np.max(np.abs(det - 1.0))) if len(det) else 0.0
    verdict = "preserving" if divergence_max < AREA_TOL and deviation < AREA_TOL else "not_preserving"
    return AreaReport(divergence_max, deviation, verdict, len(pts))


def default_probes(S: Surface, count: int = 16) -> np.ndarray:
    """S 内部离边界较远的探针点"""
    pts = surface_grid(S, 9)
    dist = S.boundary_distance_many(pts)
    order = np.argsort(-dist, kind="stable")
    return pts[order[:count]]
