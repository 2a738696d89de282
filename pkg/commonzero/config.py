"""
配置模块 - 管理应用程序配置和环境变量
"""

import logging
import math
import os
from typing import Any, Dict

logger = logging.getLogger(__name__)


def get_config() -> Dict[str, Any]:
    """
    获取应用程序配置

    从环境变量和默认值构建配置字典

    Returns:
        Dict[str, Any]: 配置字典
    """
    config = {
        # 日志配置
        "log_level": os.environ.get("COMMONZERO_LOG_LEVEL", "INFO"),
        # 网格配置
        "resolution": int(os.environ.get("COMMONZERO_RESOLUTION", "256")),
        # 容差配置
        "dependency_tol": float(os.environ.get("COMMONZERO_DEPENDENCY_TOL", "1e-7")),
        "bracket_tol": float(os.environ.get("COMMONZERO_BRACKET_TOL", "1e-8")),
        # 批量运行配置
        "max_workers": int(os.environ.get("COMMONZERO_MAX_WORKERS", "4")),
        "output_dir": os.environ.get("COMMONZERO_OUTPUT_DIR", "reports"),
    }

    logger.debug(f"配置已加载: {config}")
    return config


def get_flow_defaults() -> Dict[str, Any]:
    """
    获取积分器默认参数

    Returns:
        Dict[str, Any]: FlowConfig 的关键字参数
    """
    return {
        "method": os.environ.get("COMMONZERO_FLOW_METHOD", "rk45_adaptive"),
        "rtol": float(os.environ.get("COMMONZERO_FLOW_RTOL", "1e-10")),
        "atol": float(os.environ.get("COMMONZERO_FLOW_ATOL", "1e-10")),
        "step": 1e-2,
        "h_min": 1e-12,
        "h_max": 0.1,
        "boundary_policy": "project",
        "projection_tol": 1e-9,
        "max_steps": 1_000_000,
    }


def get_index_defaults() -> Dict[str, Any]:
    """
    获取指数计算默认参数

    Returns:
        Dict[str, Any]: IndexConfig 的关键字参数
    """
    return {
        "tau_initial": float(os.environ.get("COMMONZERO_TAU_INITIAL", "0.1")),
        "tau_min": float(os.environ.get("COMMONZERO_TAU_MIN", "1e-4")),
        "angle_step_max": math.pi / 4,
        "contour_refinement_limit": 24,
    }


def get_check_kinds() -> list[str]:
    """
    获取场景文件中可用的检查类型

    Returns:
        list[str]: 检查类型列表
    """
    return [
        "bracket_condition",
        "blocks",
        "indices",
        "euler",
        "dependency",
        "cycles",
        "area",
        "theorem_1_5a",
        "theorem_1_5b",
        "theorem_1_8",
        "lima_example",
        "nelson",
        "permute_curves",
    ]


def get_surface_kinds() -> list[str]:
    """
    获取可用的曲面类型

    Returns:
        list[str]: 曲面类型列表
    """
    return ["disk", "halfplane_window", "annulus", "polygon_with_holes", "rectangle"]
