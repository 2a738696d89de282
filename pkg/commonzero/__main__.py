"""
主模块 - 提供命令行入口点

子命令：
    run <scenario.json>    运行一个场景并写出报告
    batch <dir>            并发运行目录中的全部场景
    index                  计算孤立零点指数或区域上的向量场指数
    zeros                  扫描零点并分类
    cycles                 检测周期轨道、计算回归映射
    export <report.json>   导出绘图 CSV

退出码：0 通过，1 断言失败，2 输入错误，3 内部错误
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .config import get_config
from .core.blocks import find_zeros
from .core.cycles import Transversal, detect_cycles, poincare_return_map
from .core.domain import Region, Surface, surface_from_spec
from .core.errors import CommonZeroError, NoReturnError, SchemaError
from .core.index import IndexConfig, classify_zero, index_at_zero, vector_field_index
from .core.semiflow import FlowConfig
from .core.utils import canonical_json, setup_logging, to_jsonable
from .core.vfdsl import parse_field
from .export import export_plot_data
from .runner import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_PASS,
    batch_exit_code,
    exit_code_for,
    run_batch,
    run_scenario,
    write_report,
)

logger = logging.getLogger(__name__)


def parse_args(argv: Optional[List[str]] = None):
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description="commonzero - 平面曲面上向量场的指数计算与公共零点验证")

    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="日志级别 (默认: INFO)",
    )

    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="运行一个场景文件")
    run.add_argument("scenario", type=str, help="场景 JSON 文件")
    run.add_argument("--out", type=str, default=None, help="报告输出目录 (默认: reports)")

    batch = sub.add_parser("batch", help="并发运行目录中的全部场景")
    batch.add_argument("directory", type=str, help="场景目录")
    batch.add_argument("--out", type=str, default=None, help="报告输出目录 (默认: reports)")
    batch.add_argument("--workers", type=int, default=None, help="并发数 (默认: 4)")

    index = sub.add_parser("index", help="计算指数")
    index.add_argument("--field", type=str, required=True, help='向量场，如 "(-y, x)"')
    index.add_argument("--surface", type=str, default="disk", help="曲面类型名或 JSON 描述 (默认: disk)")
    index.add_argument("--region", type=str, default="whole", help="whole | disk:cx,cy,r | annulus:cx,cy,r1,r2")
    index.add_argument("--point", type=str, default=None, help="孤立零点 x,y；给出时计算 Poincaré–Hopf 指数")
    index.add_argument("--radius", type=float, default=0.1, help="零点指数的圆半径 (默认: 0.1)")

    zeros = sub.add_parser("zeros", help="扫描零点")
    zeros.add_argument("--field", type=str, required=True, help="向量场")
    zeros.add_argument("--surface", type=str, default="disk", help="曲面类型名或 JSON 描述 (默认: disk)")
    zeros.add_argument("--resolution", type=int, default=None, help="网格分辨率 (默认: 256)")

    cycles = sub.add_parser("cycles", help="检测周期轨道")
    cycles.add_argument("--field", type=str, required=True, help="向量场")
    cycles.add_argument("--surface", type=str, default="disk", help="曲面类型名或 JSON 描述 (默认: disk)")
    cycles.add_argument("--seeds", type=str, default="0.5,0", help="种子点，形如 x1,y1;x2,y2")
    cycles.add_argument("--transversal", type=str, default=None, help="回归映射的横截线段 ax,ay,bx,by")

    export = sub.add_parser("export", help="从报告导出绘图 CSV")
    export.add_argument("report", type=str, help="报告 JSON 文件")
    export.add_argument("--out", type=str, required=True, help="输出目录")

    return parser.parse_args(argv)


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise SchemaError(f"无法解析数值列表: {text}") from e


def surface_arg(text: str) -> Surface:
    """曲面参数：类型名（使用默认参数）或 JSON 对象"""
    spec: Dict[str, Any] = json.loads(text) if text.lstrip().startswith("{") else {"kind": text}
    return surface_from_spec(spec)


def region_arg(text: str, surface: Surface) -> Region:
    if text == "whole":
        return Region.whole(surface)
    kind, _, rest = text.partition(":")
    values = _floats(rest)
    if kind == "disk" and len(values) == 3:
        return Region.disk(values[:2], values[2])
    if kind == "annulus" and len(values) == 4:
        return Region.annulus(values[:2], values[2], values[3])
    raise SchemaError(f"无法解析区域: {text}")


def _command_run(args, config) -> int:
    report = run_scenario(args.scenario)
    path = write_report(report, args.out or config["output_dir"])
    for check_id, verdict in report.summary().items():
        print(f"  {check_id}: {verdict}")
    failed = [a["path"] for a in report.assertions if not a["passed"]]
    if failed:
        print(f"断言失败: {', '.join(failed)}")
    print(f"场景 {report.name}: {'通过' if report.passed else '未通过'}，报告已写入 {path}")
    return report.exit_code


def _command_batch(args, config) -> int:
    entries = asyncio.run(run_batch(args.directory, args.workers or config["max_workers"]))
    out_dir = args.out or config["output_dir"]
    for entry in entries:
        if entry.report is not None:
            write_report(entry.report, out_dir)
            status = "通过" if entry.report.passed else "未通过"
        else:
            status = f"错误: {entry.error}"
        print(f"  {entry.path.name}: {status}")
    code = batch_exit_code(entries)
    print(f"共 {len(entries)} 个场景，退出码 {code}")
    return code


def _command_index(args, config) -> int:
    F = parse_field(args.field)
    S = surface_arg(args.surface)
    cfg = IndexConfig.from_dict()
    if args.point is not None:
        result = index_at_zero(F, _floats(args.point), args.radius, cfg)
        payload = {"index": result.value, "min_modulus": result.min_modulus, "kind": "poincare_hopf"}
    else:
        result = vector_field_index(F, S, region_arg(args.region, S), cfg, FlowConfig.from_dict())
        payload = {
            "index": result.value,
            "tau": result.tau,
            "contributions": result.contributions,
            "kind": "vector_field",
        }
    print(canonical_json(payload))
    return EXIT_PASS


def _command_zeros(args, config) -> int:
    F = parse_field(args.field)
    S = surface_arg(args.surface)
    scan = find_zeros(F, S, args.resolution or config["resolution"])
    payload = scan.to_dict()
    payload["classification"] = [classify_zero(F, z).to_dict() for z in scan.zeros]
    print(canonical_json(payload))
    return EXIT_PASS


def _command_cycles(args, config) -> int:
    F = parse_field(args.field)
    S = surface_arg(args.surface)
    seeds = np.array([_floats(s) for s in args.seeds.split(";") if s.strip()])
    cfg = FlowConfig.from_dict()
    payload: Dict[str, Any] = {"cycles": [c.to_dict() for c in detect_cycles(F, S, seeds, cfg)]}
    if args.transversal:
        a = _floats(args.transversal)
        J = Transversal((a[0], a[1]), (a[2], a[3]))
        try:
            payload["return_map"] = poincare_return_map(F, S, J, cfg).to_dict()
        except NoReturnError as e:
            payload["return_map"] = e.result.to_dict()
    print(canonical_json(to_jsonable(payload)))
    return EXIT_PASS


def _command_export(args, config) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    written = export_plot_data(report, args.out)
    for key, path in written.items():
        print(f"  {key}: {path}")
    return EXIT_PASS


COMMANDS = {
    "run": _command_run,
    "batch": _command_batch,
    "index": _command_index,
    "zeros": _command_zeros,
    "cycles": _command_cycles,
    "export": _command_export,
}


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    # 解析命令行参数
    args = parse_args(argv)

    # 获取配置
    config = get_config()

    # 命令行参数覆盖配置
    log_level = args.log_level or config["log_level"]

    # 设置日志
    setup_logging(level=getattr(logging, log_level))

    try:
        return COMMANDS[args.command](args, config)
    except (CommonZeroError, OSError, ValueError) as e:
        code = exit_code_for(e)
        kind = "输入错误" if code == EXIT_INPUT else "内部错误"
        logger.error(f"{kind}: {e}")
        print(f"{kind}: {e}", file=sys.stderr)
        return code
    except Exception as e:
        import traceback

        logger.error(f"内部错误: {e}")
        logger.error(f"错误堆栈: {traceback.format_exc()}")
        print(f"内部错误: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
