"""
场景运行模块 - 场景文件解析、检查注册表、报告生成与并发批量运行

场景文件是 JSON 对象：
    {name, surface, X, Y, candidates, checks[], configs{}, expected{}, hypotheses{}}

X、Y 可以是 DSL 文本 "(expr_x, expr_y)"，也可以是内置向量场 {"builtin": "lima", ...}。
定理检查只在假设全部得到数值确认时断言结论；否则给出 flag 并记录失败的假设。
"""

import asyncio
import json
import logging
import math
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy

from . import __version__
from .config import get_check_kinds, get_config
from .core.blocks import Block, BlockDecomposition, decompose_blocks, dependency_set, find_zeros
from .core.cycles import (
    AreaReport,
    Cycle,
    Transversal,
    default_probes,
    detect_cycles,
    is_area_preserving,
    poincare_return_map,
)
from .core.domain import Curve, Region, Surface, describe_surface, surface_from_spec, surface_grid
from .core.errors import (
    CheckExecutionError,
    CommonZeroError,
    FieldSyntaxError,
    FlowConfigError,
    FlowError,
    IndexComputationError,
    IndexConfigError,
    NoReturnError,
    SampleTooCloseError,
    ScenarioError,
    SchemaError,
    SurfaceSpecError,
    TransversalityError,
    UnknownCheckError,
)
from .core.index import IndexConfig, classify_zero, field_map, index_at_zero, vector_field_index, winding_number
from .core.roots import ZeroScan
from .core.semiflow import (
    CellLocus,
    FlowConfig,
    InwardReport,
    PointLocus,
    check_inward,
    check_inward_combination,
    check_permutes_integral_curves,
    check_positive_invariance,
    flow,
    nelson_compose,
    time_map,
)
from .core.utils import atomic_write_text, canonical_json, content_hash, log_step, to_jsonable
from .core.vfdsl import (
    AnyField,
    BracketVerdict,
    FieldExpr,
    check_bracket_condition,
    field_values,
    linear_combination,
    parse_field,
)
from .lima import build_lima_pair, lima_planar_pair

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
FLAG = "flag"
OK = "ok"

SCENARIO_KEYS = {
    "name",
    "description",
    "surface",
    "X",
    "Y",
    "candidates",
    "checks",
    "configs",
    "expected",
    "hypotheses",
}
CONFIG_KEYS = {"flow", "index", "resolution", "dependency_tol", "bracket_tol"}
# 需要第二个向量场的检查
NEEDS_Y = {
    "bracket_condition",
    "dependency",
    "cycles",
    "area",
    "theorem_1_5a",
    "theorem_1_5b",
    "theorem_1_8",
    "lima_example",
    "nelson",
    "permute_curves",
}

# 退出码
EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


# 场景


def build_field(spec: Any, slot: str) -> AnyField:
    """
    由场景中的描述构造向量场

    Args:
        spec: DSL 文本，或 {"builtin": "lima" | "lima_planar", "component": "X" | "Y", ...}
        slot: 该向量场在场景中的位置（"X"、"Y" 或候选），决定内置向量场对中取哪一个

    Raises:
        FieldSyntaxError: DSL 文本不合法
        SchemaError: 描述不合法
    """
    if isinstance(spec, str):
        return parse_field(spec)
    if isinstance(spec, dict) and "builtin" in spec:
        params = dict(spec)
        name = params.pop("builtin")
        part = params.pop("component", slot)
        if part not in ("X", "Y"):
            raise SchemaError(f"内置向量场 {name} 的 component 必须是 X 或 Y")
        if name == "lima":
            try:
                pair: Tuple[AnyField, AnyField] = build_lima_pair(**params)
            except (TypeError, ValueError) as e:
                raise SchemaError(f"内置向量场 lima 参数错误: {e}") from e
        elif name == "lima_planar":
            if params:
                raise SchemaError(f"内置向量场 lima_planar 不接受参数: {sorted(params)}")
            pair = lima_planar_pair()
        else:
            raise SchemaError(f"未知的内置向量场: {name}")
        return pair[0] if part == "X" else pair[1]
    raise SchemaError(f"向量场 {slot} 必须是 DSL 文本或内置向量场描述")


@dataclass
class CheckSpec:
    kind: str
    id: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Scenario:
    """
    解析后的场景

    Attributes:
        name: 场景名
        surface: 曲面
        X, Y: 向量场（Y 可缺省）
        candidates: W(X) 的有限候选列表
        checks: 检查列表（按文件顺序执行）
        configs: 配置覆盖项
        expected: 期望断言，键为 "检查编号.字段路径"
        hypotheses: 声明的假设标记（如 analytic、c2）
        raw: 原始 JSON 对象（用于出处摘要）
        source: 场景文件名
    """

    name: str
    surface: Surface
    X: AnyField
    Y: Optional[AnyField]
    candidates: List[AnyField]
    checks: List[CheckSpec]
    configs: Dict[str, Any]
    expected: Dict[str, Any]
    hypotheses: Dict[str, Any]
    raw: Dict[str, Any]
    source: Optional[str] = None


def _parse_checks(entries: Any) -> List[CheckSpec]:
    if not isinstance(entries, list) or not entries:
        raise SchemaError("checks 必须是非空列表")
    known = set(get_check_kinds())
    specs: List[CheckSpec] = []
    seen = set()
    for entry in entries:
        if isinstance(entry, str):
            params: Dict[str, Any] = {}
            kind = entry
        elif isinstance(entry, dict) and isinstance(entry.get("kind"), str):
            params = dict(entry)
            kind = params.pop("kind")
        else:
            raise SchemaError(f"检查项格式错误: {entry!r}")
        if kind not in known:
            raise UnknownCheckError(f"未知的检查类型: {kind}")
        check_id = str(params.pop("id", kind))
        if check_id in seen:
            raise SchemaError(f"检查编号重复: {check_id}")
        seen.add(check_id)
        specs.append(CheckSpec(kind, check_id, params))
    return specs


def scenario_from_dict(data: Any, source: Optional[str] = None) -> Scenario:
    """
    校验并解析场景对象

    Raises:
        SchemaError: 字段缺失、多余或类型错误
        UnknownCheckError: 未知的检查类型
        FieldSyntaxError: 向量场文本不合法
        SurfaceSpecError: 曲面描述不合法
    """
    if not isinstance(data, dict):
        raise SchemaError("场景文件顶层必须是 JSON 对象")
    unknown = set(data) - SCENARIO_KEYS
    if unknown:
        raise SchemaError(f"场景含未知字段: {sorted(unknown)}")
    for key in ("name", "surface", "X", "checks"):
        if key not in data:
            raise SchemaError(f"场景缺少字段: {key}")
    if not isinstance(data["name"], str) or not data["name"]:
        raise SchemaError("name 必须是非空字符串")

    checks = _parse_checks(data["checks"])
    configs = data.get("configs", {})
    if not isinstance(configs, dict) or set(configs) - CONFIG_KEYS:
        raise SchemaError(f"configs 只能包含 {sorted(CONFIG_KEYS)}")
    expected = data.get("expected", {})
    if not isinstance(expected, dict):
        raise SchemaError("expected 必须是对象")
    ids = {c.id for c in checks}
    for path in expected:
        if path.split(".", 1)[0] not in ids:
            raise SchemaError(f"期望断言 {path} 引用了不存在的检查")
    hypotheses = data.get("hypotheses", {})
    if not isinstance(hypotheses, dict):
        raise SchemaError("hypotheses 必须是对象")

    if any(c.kind in NEEDS_Y for c in checks) and "Y" not in data:
        raise SchemaError("场景中的检查需要向量场 Y")
    candidates = data.get("candidates", [])
    if not isinstance(candidates, list):
        raise SchemaError("candidates 必须是列表")

    return Scenario(
        name=data["name"],
        surface=surface_from_spec(data["surface"]),
        X=build_field(data["X"], "X"),
        Y=build_field(data["Y"], "Y") if "Y" in data else None,
        candidates=[build_field(c, "Y") for c in candidates],
        checks=checks,
        configs=configs,
        expected=expected,
        hypotheses=hypotheses,
        raw=data,
        source=source,
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    读取场景文件

    Raises:
        FileNotFoundError: 文件不存在
        json.JSONDecodeError: 不是合法 JSON
    """
    target = Path(path)
    data = json.loads(target.read_text(encoding="utf-8"))
    return scenario_from_dict(data, source=target.name)


def bundled_scenarios() -> List[Path]:
    """随包提供的场景文件"""
    return sorted((Path(__file__).parent / "scenarios").glob("*.json"))


# 检查上下文


@dataclass
class CheckOutcome:
    verdict: str
    payload: Dict[str, Any]


class CheckContext:
    """一个场景内各检查共享的配置与缓存"""

    def __init__(self, scenario: Scenario):
        defaults = get_config()
        configs = scenario.configs
        self.scenario = scenario
        self.surface = scenario.surface
        try:
            self.flow_cfg = FlowConfig.from_dict(configs.get("flow"))
            self.index_cfg = IndexConfig.from_dict(configs.get("index"))
        except (FlowConfigError, IndexConfigError) as e:
            raise SchemaError(f"配置不合法: {e}") from e
        self.resolution = int(configs.get("resolution", defaults["resolution"]))
        self.dependency_tol = float(configs.get("dependency_tol", defaults["dependency_tol"]))
        self.bracket_tol = float(configs.get("bracket_tol", defaults["bracket_tol"]))
        self._cache: Dict[str, Any] = {}

    def _cached(self, key: str, build: Callable[[], Any]) -> Any:
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def field(self, params: Dict[str, Any], slot: str) -> AnyField:
        """检查参数可以覆盖场景中的 X 或 Y"""
        if slot in params:
            return build_field(params[slot], slot)
        value = self.scenario.X if slot == "X" else self.scenario.Y
        if value is None:
            raise SchemaError(f"场景缺少向量场 {slot}")
        return value

    def blocks(self) -> BlockDecomposition:
        return self._cached(
            "blocks",
            lambda: decompose_blocks(
                self.scenario.X, self.surface, self.resolution, self.index_cfg, self.flow_cfg
            ),
        )

    def zeros(self, slot: str) -> ZeroScan:
        return self._cached(f"zeros_{slot}", lambda: find_zeros(self.field({}, slot), self.surface, self.resolution))

    def inward(self, slot: str) -> InwardReport:
        return self._cached(f"inward_{slot}", lambda: check_inward(self.field({}, slot), self.surface))

    def bracket(self) -> BracketVerdict:
        return self._cached(
            "bracket",
            lambda: check_bracket_condition(self.field({}, "X"), self.field({}, "Y"), self.surface, self.bracket_tol),
        )

    def area(self, t: float = 1.0) -> AreaReport:
        return self._cached(
            f"area_{t!r}",
            lambda: is_area_preserving(
                self.field({}, "Y"), self.surface, default_probes(self.surface), t, self.flow_cfg
            ),
        )


CheckHandler = Callable[[CheckContext, Dict[str, Any]], CheckOutcome]
CHECKS: Dict[str, CheckHandler] = {}


def register_check(kind: str) -> Callable[[CheckHandler], CheckHandler]:
    def decorator(func: CheckHandler) -> CheckHandler:
        CHECKS[kind] = func
        return func

    return decorator


# 绘图数据辅助


def _block_plot(decomp: BlockDecomposition) -> Dict[str, Any]:
    grid = decomp.scan.grid
    contours = []
    cells = []
    for block in decomp.blocks:
        for curve in block.region.contours:
            contours.append({"id": len(contours), "block": block.label, "points": curve.closed_polyline().tolist()})
        for (i, j), c in zip(block.cells, grid.centers(block.cells)):
            cells.append([block.label, int(i), int(j), float(c[0]), float(c[1])])
    return {"contours": contours, "zero_cells": cells}


def _orbit_rows(orbit_id: int, trajectory) -> Dict[str, Any]:
    return {"id": orbit_id, "rows": [list(r) for r in trajectory.to_rows()]}


def _cycle_plot(cycles: List[Cycle], offset: int = 0) -> List[Dict[str, Any]]:
    return [
        {"id": offset + k, "period": c.period, "points": c.points.tolist()} for k, c in enumerate(cycles)
    ]


# 描述性检查


@register_check("bracket_condition")
def _check_bracket(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    X = ctx.field(params, "X")
    Y = ctx.field(params, "Y")
    tol = float(params.get("tol", ctx.bracket_tol))
    verdict = check_bracket_condition(X, Y, ctx.surface, tol, int(params.get("grid", 64)))
    payload: Dict[str, Any] = verdict.to_dict()
    members = []
    for k, cand in enumerate(ctx.scenario.candidates):
        member = check_bracket_condition(X, cand, ctx.surface, tol)
        members.append({"candidate": k, "bracket": member.to_dict(), "inward": check_inward(cand, ctx.surface).inward})
    if members:
        payload["candidates"] = members
    if params.get("cone") and members:
        family = [Y] + [c for c, m in zip(ctx.scenario.candidates, members) if m["bracket"]["holds"]]
        coeffs = [[1.0] * len(family), [0.5] + [2.0] * (len(family) - 1)]
        cone = check_inward_combination(family, ctx.surface, coeffs, int(params.get("samples", 50)), 1.0, ctx.flow_cfg)
        payload["cone"] = cone.to_dict()
        combined = linear_combination(family, coeffs[0])
        payload["cone_bracket"] = check_bracket_condition(X, combined, ctx.surface, tol).to_dict()
    return CheckOutcome(OK, payload)


@register_check("blocks")
def _check_blocks(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    decomp = ctx.blocks()
    payload = decomp.to_dict()
    payload["plot"] = _block_plot(decomp)
    return CheckOutcome(OK, payload)


def _auto_radius(p: np.ndarray, zeros: np.ndarray, S: Surface, limit: float) -> float:
    others = [float(np.linalg.norm(z - p)) for z in zeros if np.linalg.norm(z - p) > 1e-9]
    radius = limit
    if others:
        radius = min(radius, 0.4 * min(others))
    return min(radius, 0.9 * float(S.boundary_distance_many(p)[0]))


@register_check("indices")
def _check_indices(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    X = ctx.field(params, "X")
    entries = []
    if "points" in params:
        points = np.asarray(params["points"], dtype=float).reshape(-1, 2)
    else:
        points = ctx.zeros("X").zeros if "X" not in params else find_zeros(X, ctx.surface, ctx.resolution).zeros
    limit = float(params.get("radius", 0.1))
    for p in points:
        entry: Dict[str, Any] = {"point": p.tolist()}
        if float(ctx.surface.boundary_distance_many(p)[0]) < 1e-6:
            entry["boundary"] = True
            entry["index"] = None
            entries.append(entry)
            continue
        radius = _auto_radius(p, points, ctx.surface, limit)
        entry.update(_index_entry(X, p, radius, ctx.index_cfg))
        entries.append(entry)

    table = []
    for row in params.get("table", []):
        F = build_field(row["field"], "X")
        p = np.asarray(row.get("point", (0.0, 0.0)), dtype=float)
        item = {"label": row.get("label"), "field": row["field"], "point": p.tolist()}
        item.update(_index_entry(F, p, float(row.get("radius", 0.5)), ctx.index_cfg))
        table.append(item)
    payload: Dict[str, Any] = {"zeros": entries, "count": len(entries)}
    payload["sum"] = sum(e["index"] for e in entries if e.get("index") is not None)
    if table:
        payload["table"] = table
        payload["table_indices"] = [t.get("index") for t in table]
    return CheckOutcome(OK, payload)


def _index_entry(F: AnyField, p: np.ndarray, radius: float, cfg: IndexConfig) -> Dict[str, Any]:
    """孤立零点的指数、分类与常向量扰动下的稳定性"""
    entry: Dict[str, Any] = {"radius": radius, "classification": classify_zero(F, p).to_dict()}
    try:
        result = index_at_zero(F, p, radius, cfg)
    except IndexComputationError as e:
        logger.warning(f"零点 {tuple(p)} 的指数计算失败: {e}")
        entry.update({"index": None, "error": str(e)})
        return entry
    eps = 0.1 * result.min_modulus
    perturbed = linear_combination([F, FieldExpr.constant(1, 0)], [1.0, eps])
    try:
        moved = winding_number(field_map(perturbed), Curve.circle(p, radius), cfg).value
    except IndexComputationError as e:
        logger.warning(f"扰动后的绕数计算失败: {e}")
        moved = None
    entry.update(
        {
            "index": result.value,
            "min_modulus": result.min_modulus,
            "refinement_count": result.refinement_count,
            "perturbed_index": moved,
            "stable": moved == result.value,
        }
    )
    return entry


@register_check("euler")
def _check_euler(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    S = ctx.surface
    chi = S.euler_characteristic()
    payload: Dict[str, Any] = {"euler_characteristic": chi}
    try:
        whole = vector_field_index(ctx.scenario.X, S, Region.whole(S), ctx.index_cfg, ctx.flow_cfg)
        payload.update({"whole_index": whole.value, "tau": whole.tau, "equals_euler": whole.value == chi})
    except IndexComputationError as e:
        logger.warning(f"整体指数计算失败: {e}")
        payload.update({"whole_index": None, "error": str(e), "equals_euler": None})
    if params.get("blocks", True):
        total = ctx.blocks().index_sum
        payload["block_index_sum"] = total
        payload["additive"] = total is not None and total == payload["whole_index"]
    return CheckOutcome(OK, payload)


@register_check("dependency")
def _check_dependency(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    dep = dependency_set(
        ctx.field(params, "X"),
        ctx.field(params, "Y"),
        ctx.surface,
        int(params.get("resolution", ctx.resolution)),
        float(params.get("tol", ctx.dependency_tol)),
    )
    payload = dep.to_dict()
    payload["component_centroids"] = [dep.grid.centers(c).mean(axis=0).tolist() for c in dep.components()]
    rows = [
        [int(dep.labels[i, j]), int(i), int(j), float(c[0]), float(c[1])]
        for (i, j), c in zip(dep.cells, dep.centers())
    ]
    payload["plot"] = {"dependency_cells": rows}
    return CheckOutcome(OK, payload)


def _seeds(ctx: CheckContext, params: Dict[str, Any], count: int = 4) -> np.ndarray:
    if "seeds" in params:
        return np.asarray(params["seeds"], dtype=float).reshape(-1, 2)
    return default_probes(ctx.surface, count)


@register_check("cycles")
def _check_cycles(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    Y = ctx.field(params, "Y")
    cycles = detect_cycles(
        Y,
        ctx.surface,
        _seeds(ctx, params),
        ctx.flow_cfg,
        float(params.get("t_transient", 20.0)),
        float(params.get("t_budget", 50.0)),
    )
    payload: Dict[str, Any] = {"count": len(cycles), "cycles": [c.to_dict() for c in cycles]}
    if "transversal" in params:
        J = Transversal(tuple(params["transversal"]["a"]), tuple(params["transversal"]["b"]))
        try:
            rmap = poincare_return_map(Y, ctx.surface, J, ctx.flow_cfg, int(params.get("samples", 20)))
            payload["return_map"] = rmap.to_dict()
        except NoReturnError as e:
            payload["return_map"] = e.result.to_dict()
            payload["return_map"]["error"] = str(e)
        except TransversalityError as e:
            payload["return_map"] = {"error": str(e)}
    payload["plot"] = {"cycles": _cycle_plot(cycles)}
    return CheckOutcome(OK, payload)


@register_check("area")
def _check_area(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    report = ctx.area(float(params.get("t", 1.0)))
    return CheckOutcome(OK, report.to_dict())


# 定理检查


def _is_analytic(F: Optional[AnyField]) -> bool:
    """DSL 表达式（不含 sqrt）是解析的；数值向量场无法确认"""
    return isinstance(F, FieldExpr) and "sqrt" not in F.to_text()


def _essential(ctx: CheckContext) -> Tuple[List[Block], List[Dict[str, Any]]]:
    decomp = ctx.blocks()
    summary = [
        {
            "label": b.label,
            "index": b.index.value if b.index is not None else None,
            "touches_boundary": b.touches_boundary,
            "error": b.index_error,
        }
        for b in decomp.blocks
    ]
    return [b for b in decomp.blocks if b.index is not None and b.index.value != 0], summary


def _block_locus(ctx: CheckContext, block: Block) -> Tuple[CellLocus, float]:
    grid = ctx.blocks().scan.grid
    return CellLocus(grid.centers(block.cells), tuple(grid.cell)), float(np.max(grid.cell))


def _witnesses(ctx: CheckContext, block: Block) -> List[Dict[str, Any]]:
    """Y 在块 K 一个单元宽度以内的零点"""
    locus, width = _block_locus(ctx, block)
    scan = ctx.zeros("Y")
    found = []
    for p in scan.zeros:
        d = float(locus.distance(p)[0])
        if d <= width:
            in_region = bool(block.contains(p)[0])
            found.append({"point": p.tolist(), "distance": d, "polished": True, "in_region": in_region})
    if len(scan.suspect_cells):
        for c in scan.grid.centers(scan.suspect_cells):
            d = float(locus.distance(c)[0])
            if d <= width:
                in_region = bool(block.contains(c)[0])
                found.append({"point": c.tolist(), "distance": d, "polished": False, "in_region": in_region})
    return found


def _theorem_outcome(ctx: CheckContext, hypotheses: Dict[str, Any], extra: Dict[str, Any]) -> CheckOutcome:
    """假设全部成立时断言 Z Y ∩ K ≠ ∅，否则只记录"""
    failed = [name for name, ok in hypotheses.items() if not ok]
    payload: Dict[str, Any] = {"hypotheses": hypotheses, "failed_hypotheses": failed}
    payload.update(extra)
    if failed:
        payload["conclusion"] = None
        payload["note"] = f"hypothesis ({', '.join(failed)}) fails; conclusion not asserted"
        logger.info(f"假设不成立 {failed}，不断言结论")
        return CheckOutcome(FLAG, payload)
    essential, _ = _essential(ctx)
    per_block = [{"block": b.label, "witnesses": _witnesses(ctx, b)} for b in essential]
    holds = all(entry["witnesses"] for entry in per_block)
    payload["conclusion"] = {"asserted": True, "holds": holds, "blocks": per_block}
    witness = next((w["point"] for entry in per_block for w in entry["witnesses"]), None)
    payload["witness"] = witness
    return CheckOutcome(PASS if holds else FAIL, payload)


def _base_hypotheses(ctx: CheckContext) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    inward_x = ctx.inward("X")
    inward_y = ctx.inward("Y")
    bracket = ctx.bracket()
    essential, summary = _essential(ctx)
    y_scan = ctx.zeros("Y")
    hypotheses = {
        "inward": inward_x.inward and inward_y.inward,
        "bracket": bracket.holds,
        "essential": bool(essential),
    }
    extra = {
        "inward": {"X": inward_x.to_dict(), "Y": inward_y.to_dict()},
        "bracket": bracket.to_dict(),
        "blocks": summary,
        "y_zero_count": len(y_scan.zeros) + len(y_scan.suspect_cells),
    }
    return hypotheses, extra


@register_check("theorem_1_5a")
def _check_theorem_a(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    hypotheses, extra = _base_hypotheses(ctx)
    declared = ctx.scenario.hypotheses.get("analytic")
    certified = _is_analytic(ctx.scenario.X) and _is_analytic(ctx.scenario.Y)
    hypotheses["analytic"] = certified if declared is None else (bool(declared) and certified)
    extra["analytic"] = {"declared": declared, "certified": certified}
    return _theorem_outcome(ctx, hypotheses, extra)


def _cycle_scales(ctx: CheckContext, block: Block, params: Dict[str, Any]) -> List[Dict[str, Any]]:
    """在逐渐缩小的尺度上寻找包围 K 的 Y 周期轨道"""
    S = ctx.surface
    locus, width = _block_locus(ctx, block)
    centers = locus.centers
    centroid = centers.mean(axis=0)
    xmin, ymin, xmax, ymax = S.bounding_box()
    half_diag = 0.5 * math.hypot(xmax - xmin, ymax - ymin)
    scales = params.get("scales", [0.4, 0.2, 0.1, 0.05])
    results = []
    for factor in scales:
        rho = float(factor) * half_diag
        seed = centroid + np.array([rho, 0.0])
        entry: Dict[str, Any] = {"radius": rho, "seed": seed.tolist(), "certified": False}
        if not S.contains(seed) or block.contains(seed)[0]:
            entry["skipped"] = True
            results.append(entry)
            continue
        cycles = detect_cycles(ctx.field({}, "Y"), S, seed, ctx.flow_cfg, float(params.get("t_transient", 20.0)))
        for cycle in cycles:
            encloses = bool(np.all(cycle.encloses(centers)))
            reach = float(locus.distance(cycle.points).max())
            if encloses and reach <= 2 * rho + width:
                entry.update({"certified": True, "period": cycle.period, "reach": reach})
                break
        results.append(entry)
    return results


@register_check("theorem_1_5b")
def _check_theorem_b(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    hypotheses, extra = _base_hypotheses(ctx)
    essential, _ = _essential(ctx)
    scales = {b.label: _cycle_scales(ctx, b, params) for b in essential}
    hypotheses["cycle_neighborhoods"] = bool(essential) and all(
        all(e["certified"] for e in entries if not e.get("skipped")) and any(e["certified"] for e in entries)
        for entries in scales.values()
    )
    extra["cycle_scales"] = scales
    return _theorem_outcome(ctx, hypotheses, extra)


@register_check("theorem_1_8")
def _check_theorem_c(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    hypotheses, extra = _base_hypotheses(ctx)
    area = ctx.area(float(params.get("t", 1.0)))
    hypotheses["area_preserving"] = area.preserving
    extra["area"] = area.to_dict()

    essential, _ = _essential(ctx)
    contains_cycle = False
    for block in essential:
        locus, width = _block_locus(ctx, block)
        inside = locus.centers[:: max(1, len(locus.centers) // 8)]
        cycles = detect_cycles(ctx.field({}, "Y"), ctx.surface, inside, ctx.flow_cfg)
        contains_cycle |= any(float(locus.distance(c.points).max()) <= width for c in cycles)
    declared_c2 = ctx.scenario.hypotheses.get("c2")
    c2 = _is_analytic(ctx.scenario.Y) if declared_c2 is None else bool(declared_c2)
    alternatives = {"contains_cycle": contains_cycle, "c2": c2, "planar_neighborhood": True}
    hypotheses["one_of_conditions"] = any(alternatives.values())
    extra["conditions"] = alternatives
    return _theorem_outcome(ctx, hypotheses, extra)


# 示例与探测


@register_check("lima_example")
def _check_lima(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    X = ctx.field(params, "X")
    Y = ctx.field(params, "Y")
    S = ctx.surface
    bracket = check_bracket_condition(X, Y, S, float(params.get("tol", 1e-6)), int(params.get("grid", 64)))
    decomp = ctx.blocks()
    single = len(decomp.blocks) == 1
    block = decomp.blocks[0] if single else None
    index = block.index.value if block is not None and block.index is not None else None
    y_scan = ctx.zeros("Y")
    y_zeros = y_scan.zeros
    origin_gap = float(np.linalg.norm(y_zeros[0])) if len(y_zeros) == 1 else None
    x_cells = decomp.scan.grid.centers(np.argwhere(decomp.scan.mask))
    separation = None
    if len(y_zeros):
        separation = float(CellLocus(x_cells, tuple(decomp.scan.grid.cell)).distance(y_zeros).min())

    facts = {
        "bracket_residual_ok": bracket.residual < float(params.get("tol", 1e-6)),
        "single_boundary_block": single and block is not None and block.touches_boundary,
        "index_one": index == 1,
        "single_interior_y_zero": (
            len(y_zeros) == 1 and len(y_scan.suspect_cells) == 0 and origin_gap is not None and origin_gap < 1e-6
        ),
        "disjoint": separation is not None and separation > 0.5,
    }
    orbits = []
    for k, start in enumerate(params.get("orbit_seeds", [[0.3, 0.0], [0.0, -0.6]])):
        try:
            traj = flow(X, S, start, float(params.get("orbit_time", 20.0)), ctx.flow_cfg)
            orbits.append(_orbit_rows(k, traj))
        except FlowError as e:
            logger.warning(f"轨道 {start} 积分失败: {e}")
    payload = {
        "facts": facts,
        "bracket": bracket.to_dict(),
        "block_index": index,
        "block_count": len(decomp.blocks),
        "y_zeros": y_zeros.tolist(),
        "y_zero_distance_to_origin": origin_gap,
        "separation": separation,
        "plot": {"orbits": orbits, **_block_plot(decomp)},
    }
    return CheckOutcome(PASS if all(facts.values()) else FAIL, payload)


@register_check("nelson")
def _check_nelson(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    X = ctx.field(params, "X")
    Y = ctx.field(params, "Y")
    S = ctx.surface
    t = float(params.get("t", 0.5))
    ks = [int(k) for k in params.get("ks", [2, 4, 8, 16, 32])]
    p = np.asarray(params.get("point", S.reference_point() + 0.25), dtype=float)
    cfg = ctx.flow_cfg.tightened()
    direct = time_map(linear_combination([X, Y], [1.0, 1.0]), S, p, t, cfg)[0]
    errors = [float(np.linalg.norm(nelson_compose(X, Y, S, p, t, k, cfg) - direct)) for k in ks]
    exact_tol = float(params.get("exact_tol", 1e-7))
    exact = max(errors) <= exact_tol
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    order = None
    if not exact and all(e > 0 for e in errors):
        order = float(-np.polyfit(np.log(ks), np.log(errors), 1)[0])
    min_order = float(params.get("min_order", 1.0))
    order_tol = float(params.get("order_tol", 0.0))
    holds = exact or (monotone and order is not None and order >= min_order - order_tol)
    payload = {
        "point": p.tolist(),
        "t": t,
        "ks": ks,
        "errors": errors,
        "exact": exact,
        "monotone": monotone,
        "order": order,
        "min_order": min_order,
        "order_tol": order_tol,
    }
    return CheckOutcome(PASS if holds else FAIL, payload)


def _zero_locus(scan: ZeroScan):
    if len(scan.suspect_cells):
        mask_cells = np.argwhere(scan.mask)
        return CellLocus(scan.grid.centers(mask_cells), tuple(scan.grid.cell)), scan.grid.centers(mask_cells)
    return PointLocus(scan.zeros), scan.zeros


@register_check("permute_curves")
def _check_permute(ctx: CheckContext, params: Dict[str, Any]) -> CheckOutcome:
    X = ctx.field(params, "X")
    Y = ctx.field(params, "Y")
    S = ctx.surface
    t = float(params.get("t", 0.5))
    bracket = check_bracket_condition(X, Y, S, ctx.bracket_tol)
    if "samples" in params:
        samples = np.asarray(params["samples"], dtype=float).reshape(-1, 2)
    else:
        grid = surface_grid(S, 9)
        depth = S.boundary_distance_many(grid)
        keep = (depth >= 0.5 * depth.max()) & (np.linalg.norm(field_values(X, grid), axis=1) >= 1e-3)
        samples = grid[keep]
    payload: Dict[str, Any] = {"bracket": bracket.to_dict(), "t": t}
    try:
        perm = check_permutes_integral_curves(X, Y, S, samples, t, ctx.flow_cfg)
        payload["permutation"] = perm.to_dict()
        permutes = perm.holds(float(params.get("tol", 1e-5)))
    except SampleTooCloseError as e:
        payload["permutation"] = {"error": str(e)}
        permutes = False

    scan = find_zeros(X, S, ctx.resolution) if "X" in params else ctx.zeros("X")
    locus, members = _zero_locus(scan)
    probes = S.project_many(members[:: max(1, len(members) // 200)]) if len(members) else np.empty((0, 2))
    invariance = check_positive_invariance(locus, Y, S, probes, float(params.get("t_max", 1.0)), ctx.flow_cfg)
    payload["invariance"] = invariance.to_dict()
    payload["invariance_violations"] = len(invariance.violations)

    holds = permutes and invariance.holds
    if holds:
        verdict = PASS
    elif not bracket.holds:
        payload["note"] = "hypothesis (bracket) fails; conclusion not asserted"
        verdict = FLAG
    else:
        verdict = FAIL
    return CheckOutcome(verdict, payload)


# 断言


_NUMERIC_OPS = {
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
}


def resolve_path(checks: Dict[str, Dict[str, Any]], path: str) -> Any:
    """按 "检查编号.键.下标..." 取出检查输出中的值"""
    head, *rest = path.split(".")
    if head not in checks:
        raise SchemaError(f"期望路径 {path} 引用了不存在的检查")
    node: Any = checks[head]
    for part in rest:
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError) as e:
                raise SchemaError(f"期望路径 {path} 的下标 {part} 无效") from e
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise SchemaError(f"期望路径 {path} 无法解析（缺少 {part}）")
    return node


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def evaluate_assertion(path: str, spec: Any, actual: Any) -> Dict[str, Any]:
    """
    判定一条期望断言

    spec 为字面值时要求相等；为对象时支持 eq/lt/le/gt/ge/approx(+tol)/nonempty/empty/len/in/contains

    Raises:
        SchemaError: 断言与实际输出的类型不符
    """
    if not isinstance(spec, dict):
        passed = actual == spec
        if _is_number(actual) and _is_number(spec):
            passed = float(actual) == float(spec)
        return {"path": path, "expected": spec, "actual": actual, "passed": bool(passed)}

    passed = True
    for op, target in spec.items():
        if op == "tol":
            continue
        if op == "eq":
            ok = actual == target
        elif op in _NUMERIC_OPS:
            if not (_is_number(actual) and _is_number(target)):
                raise SchemaError(f"断言 {path} 的 {op} 需要数值，实际为 {actual!r}")
            ok = _NUMERIC_OPS[op](actual, target)
        elif op == "approx":
            if not (_is_number(actual) and _is_number(target)):
                raise SchemaError(f"断言 {path} 的 approx 需要数值，实际为 {actual!r}")
            ok = abs(actual - target) <= float(spec.get("tol", 1e-9))
        elif op in ("nonempty", "empty"):
            if not isinstance(actual, (list, dict, str)) and actual is not None:
                raise SchemaError(f"断言 {path} 的 {op} 需要集合，实际为 {actual!r}")
            filled = bool(actual)
            ok = filled == bool(target) if op == "nonempty" else (not filled) == bool(target)
        elif op == "len":
            if not isinstance(actual, (list, dict, str)):
                raise SchemaError(f"断言 {path} 的 len 需要集合，实际为 {actual!r}")
            ok = len(actual) == target
        elif op == "in":
            ok = actual in target
        elif op == "contains":
            if not isinstance(actual, (list, dict, str)):
                raise SchemaError(f"断言 {path} 的 contains 需要集合，实际为 {actual!r}")
            ok = target in actual
        else:
            raise SchemaError(f"断言 {path} 含未知运算 {op}")
        passed = passed and bool(ok)
    return {"path": path, "expected": spec, "actual": actual, "passed": passed}


# 报告


@dataclass
class CheckResult:
    id: str
    kind: str
    verdict: str
    payload: Dict[str, Any]
    params: Dict[str, Any] = field(default_factory=dict)

    def output(self) -> Dict[str, Any]:
        """断言路径的根对象"""
        return {"verdict": self.verdict, **self.payload}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind,
            "verdict": self.verdict,
            "params": self.params,
            "payload": self.payload,
        }


@dataclass
class Report:
    """
    场景报告

    Attributes:
        name: 场景名
        scenario_file: 场景文件名
        checks: 各检查的结论与数值载荷
        assertions: 期望断言的判定结果
        provenance: 场景与配置摘要、版本信息
    """

    name: str
    scenario_file: Optional[str]
    checks: List[CheckResult]
    assertions: List[Dict[str, Any]]
    provenance: Dict[str, Any]

    @property
    def passed(self) -> bool:
        return all(c.verdict != FAIL for c in self.checks) and all(a["passed"] for a in self.assertions)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.passed else EXIT_ASSERTION

    def check(self, check_id: str) -> CheckResult:
        for c in self.checks:
            if c.id == check_id:
                return c
        raise KeyError(check_id)

    def summary(self) -> Dict[str, str]:
        return {c.id: c.verdict for c in self.checks}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "scenario_file": self.scenario_file,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "assertions": self.assertions,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict()) + "\n"


def _provenance(ctx: CheckContext) -> Dict[str, Any]:
    configs = {
        "flow": ctx.flow_cfg.to_dict(),
        "index": ctx.index_cfg.to_dict(),
        "resolution": ctx.resolution,
        "dependency_tol": ctx.dependency_tol,
        "bracket_tol": ctx.bracket_tol,
    }
    return {
        "scenario_hash": content_hash(ctx.scenario.raw),
        "config_hash": content_hash(configs),
        "configs": configs,
        "surface": describe_surface(ctx.surface),
        "versions": {"commonzero": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }


def execute_scenario(scenario: Scenario) -> Report:
    """
    按顺序执行场景中的检查并判定期望断言

    Raises:
        SchemaError: 配置或断言与输出不符
        CheckExecutionError: 检查内部错误（附带检查编号）
    """
    ctx = CheckContext(scenario)
    results: List[CheckResult] = []
    for spec in scenario.checks:
        log_step(f"[{scenario.name}] 运行检查 {spec.id}")
        try:
            outcome = CHECKS[spec.kind](ctx, spec.params)
        except (ScenarioError, FieldSyntaxError, SurfaceSpecError):
            raise
        except Exception as e:
            logger.error(f"检查 {spec.id} 执行失败: {e}")
            logger.error(f"错误堆栈: {traceback.format_exc()}")
            raise CheckExecutionError(spec.id, e) from e
        results.append(
            CheckResult(spec.id, spec.kind, outcome.verdict, to_jsonable(outcome.payload), to_jsonable(spec.params))
        )
        logger.info(f"[{scenario.name}] {spec.id}: {outcome.verdict}")

    outputs = {r.id: r.output() for r in results}
    assertions = [
        evaluate_assertion(path, expected, resolve_path(outputs, path))
        for path, expected in sorted(scenario.expected.items())
    ]
    for failed in (a for a in assertions if not a["passed"]):
        logger.warning(f"[{scenario.name}] 断言失败: {failed['path']} 期望 {failed['expected']!r}，实际 {failed['actual']!r}")
    return Report(scenario.name, scenario.source, results, assertions, _provenance(ctx))


def run_scenario(path: Union[str, Path]) -> Report:
    """读取并运行一个场景文件"""
    scenario = load_scenario(path)
    logger.info(f"运行场景 {scenario.name} ({describe_surface(scenario.surface)})")
    return execute_scenario(scenario)


def write_report(report: Report, out_dir: Union[str, Path]) -> Path:
    return atomic_write_text(Path(out_dir) / f"{report.name}.json", report.to_json())


def exit_code_for(error: BaseException) -> int:
    """输入错误返回 2，其它错误返回 3"""
    if isinstance(error, (SchemaError, FieldSyntaxError, SurfaceSpecError, FileNotFoundError, json.JSONDecodeError)):
        return EXIT_INPUT
    return EXIT_INTERNAL


@dataclass
class BatchEntry:
    path: Path
    report: Optional[Report] = None
    error: Optional[BaseException] = None

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return exit_code_for(self.error)
        return self.report.exit_code  # type: ignore[union-attr]


async def run_batch(directory: Union[str, Path], max_workers: Optional[int] = None) -> List[BatchEntry]:
    """
    并发运行目录中的全部场景文件，结果按路径排序

    每个场景在线程中运行；并发数由信号量限制
    """
    paths = sorted(Path(directory).glob("*.json"))
    semaphore = asyncio.Semaphore(max_workers or get_config()["max_workers"])

    async def run_one(path: Path) -> BatchEntry:
        async with semaphore:
            try:
                report = await asyncio.to_thread(run_scenario, path)
                return BatchEntry(path, report=report)
            except (CommonZeroError, OSError, ValueError) as e:
                logger.error(f"场景 {path.name} 失败: {e}")
                return BatchEntry(path, error=e)

    log_step(f"批量运行 {len(paths)} 个场景")
    return list(await asyncio.gather(*(run_one(p) for p in paths)))


def batch_exit_code(entries: List[BatchEntry]) -> int:
    return max((e.exit_code for e in entries), default=EXIT_PASS)
