"""
绘图数据导出模块 - 把报告中的轨道、轮廓、零单元、依赖单元和周期轨道写成 CSV

列定义：
    orbits.csv            orbit_id, t, x, y
    contours.csv          contour_id, block, vertex, x, y
    zero_cells.csv        block, i, j, x, y
    dependency_cells.csv  component, i, j, x, y
    cycles.csv            cycle_id, vertex, x, y, period

每个文件先写入临时文件再原子替换；输入为空时只写表头。
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from .core.utils import atomic_write_text

logger = logging.getLogger(__name__)

COLUMNS: Dict[str, List[str]] = {
    "orbits": ["orbit_id", "t", "x", "y"],
    "contours": ["contour_id", "block", "vertex", "x", "y"],
    "zero_cells": ["block", "i", "j", "x", "y"],
    "dependency_cells": ["component", "i", "j", "x", "y"],
    "cycles": ["cycle_id", "vertex", "x", "y", "period"],
}


@dataclass
class PlotData:
    """
    可绘图的数据行

    Attributes:
        orbits: 每条轨道为 {"id", "rows": [[t, x, y], ...]}
        contours: 每条轮廓为 {"id", "block", "points": [[x, y], ...]}
        zero_cells: [block, i, j, x, y] 行
        dependency_cells: [component, i, j, x, y] 行
        cycles: 每条周期轨道为 {"id", "period", "points": [[x, y], ...]}
    """

    orbits: List[Dict[str, Any]] = field(default_factory=list)
    contours: List[Dict[str, Any]] = field(default_factory=list)
    zero_cells: List[Sequence[Any]] = field(default_factory=list)
    dependency_cells: List[Sequence[Any]] = field(default_factory=list)
    cycles: List[Dict[str, Any]] = field(default_factory=list)

    def extend(self, other: Dict[str, Any]) -> None:
        """合并某个检查载荷中的 plot 段"""
        for key in COLUMNS:
            getattr(self, key).extend(other.get(key, []))

    def rows(self, key: str) -> List[List[Any]]:
        if key == "orbits":
            return [[o["id"], *row] for o in self.orbits for row in o["rows"]]
        if key == "contours":
            return [
                [c["id"], c.get("block"), k, p[0], p[1]] for c in self.contours for k, p in enumerate(c["points"])
            ]
        if key == "cycles":
            return [[c["id"], k, p[0], p[1], c.get("period")] for c in self.cycles for k, p in enumerate(c["points"])]
        return [list(r) for r in getattr(self, key)]


def plot_data_from_report(report: Dict[str, Any]) -> PlotData:
    """收集报告各检查载荷中的 plot 段"""
    data = PlotData()
    for check in report.get("checks", []):
        plot = (check.get("payload") or {}).get("plot")
        if plot:
            data.extend(plot)
    return data


def _csv_text(header: List[str], rows: List[List[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buffer.getvalue()


def export_plot_data(data: Union[PlotData, Dict[str, Any]], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """
    导出全部 CSV 文件

    Args:
        data: PlotData 或报告字典（自动收集其中的 plot 段）
        out_dir: 输出目录（不存在时创建）

    Returns:
        Dict[str, Path]: 文件种类到路径的映射

    Raises:
        OSError: 写入失败
    """
    if not isinstance(data, PlotData):
        data = plot_data_from_report(data)
    target = Path(out_dir)
    written: Dict[str, Path] = {}
    for key, header in COLUMNS.items():
        rows = data.rows(key)
        written[key] = atomic_write_text(target / f"{key}.csv", _csv_text(header, rows))
        logger.debug(f"{key}.csv: {len(rows)} 行")
    logger.info(f"绘图数据已导出到 {target}")
    return written
