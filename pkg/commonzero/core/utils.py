"""
工具函数模块 - 提供日志、原子写文件和JSON序列化等辅助功能
"""

import hashlib
import json
import logging
import os
import tempfile
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

import numpy as np

logger = logging.getLogger(__name__)


def setup_logging(level=logging.INFO):
    """
    设置日志配置

    Args:
        level: 日志级别，默认为INFO
    """
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def log_step(message: str):
    """
    打印带时间戳的日志信息

    Args:
        message (str): 要打印的信息
    """
    current_time = time.strftime("%Y-%m-%d %H:%M:%S", time.localtime())
    logger.info(f"[{current_time}] {message}")


def to_jsonable(value: Any) -> Any:
    """
    把numpy标量/数组、Fraction、元组等转换为JSON可序列化的纯Python对象

    非有限浮点数转换为None，保证输出是合法JSON
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not np.isfinite(value):
            return None
        return value
    return value


def canonical_json(value: Any) -> str:
    """按键排序、固定缩进的JSON文本，用于可复现的报告"""
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2, ensure_ascii=False)


def content_hash(value: Any) -> str:
    """对任意可序列化对象计算SHA-256摘要"""
    text = json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """
    原子地写入文本文件：先写同目录临时文件，再替换目标文件

    Args:
        path: 目标路径
        text: 文件内容

    Returns:
        Path: 写入的路径
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except Exception:
        # 清理残留的临时文件
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"已写入文件: {target}")
    return target
