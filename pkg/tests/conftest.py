"""
Pytest配置文件
"""

import os
from pathlib import Path
from unittest.mock import patch

import pytest

from commonzero.core.domain import AnnulusSurface, DiskSurface, RectangleSurface
from commonzero.core.index import IndexConfig
from commonzero.core.semiflow import FlowConfig
from commonzero.core.vfdsl import parse_field

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "commonzero" / "scenarios"


# 自定义命令行选项
def pytest_addoption(parser):
    """添加自定义命令行选项"""
    parser.addoption("--run-slow", action="store_true", default=False, help="运行耗时较长的场景测试")


def pytest_collection_modifyitems(config, items):
    """未指定 --run-slow 时跳过 slow 标记的测试"""
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --run-slow 选项")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clean_environment():
    """屏蔽 COMMONZERO_* 环境变量，保证测试使用默认配置"""
    cleaned = {k: v for k, v in os.environ.items() if not k.startswith("COMMONZERO_")}
    with patch.dict(os.environ, cleaned, clear=True):
        yield


# 曲面固件
@pytest.fixture
def unit_disk() -> DiskSurface:
    return DiskSurface((0.0, 0.0), 1.0)


@pytest.fixture
def annulus() -> AnnulusSurface:
    return AnnulusSurface((0.0, 0.0), 0.5, 1.5)


@pytest.fixture
def square() -> RectangleSurface:
    return RectangleSurface(-1.0, 1.0, -1.0, 1.0)


# 向量场固件
@pytest.fixture
def rotation():
    """逆时针旋转场，原点为中心"""
    return parse_field("(-y, x)")


@pytest.fixture
def contraction():
    """径向收缩场，原点为汇"""
    return parse_field("(-x, -y)")


# 配置固件
@pytest.fixture
def flow_cfg() -> FlowConfig:
    """测试用的积分器配置，容差比默认值宽松以缩短运行时间"""
    return FlowConfig(rtol=1e-9, atol=1e-9)


@pytest.fixture
def index_cfg() -> IndexConfig:
    return IndexConfig()


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR
