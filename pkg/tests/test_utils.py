"""
工具模块测试
"""

import json
import logging
import math
from fractions import Fraction
from unittest.mock import patch

import numpy as np
import pytest

from commonzero.core.utils import (
    atomic_write_text,
    canonical_json,
    content_hash,
    log_step,
    setup_logging,
    to_jsonable,
)


class TestLogging:
    """日志辅助函数测试"""

    def test_setup_logging(self):
        """测试日志设置"""
        with patch("logging.basicConfig") as mock_basic_config:
            setup_logging(level=logging.DEBUG)
            mock_basic_config.assert_called_once()
            _, kwargs = mock_basic_config.call_args
            assert kwargs["level"] == logging.DEBUG

            mock_basic_config.reset_mock()
            setup_logging()
            _, kwargs = mock_basic_config.call_args
            assert kwargs["level"] == logging.INFO

    def test_log_step(self):
        """测试带时间戳的日志"""
        with patch("commonzero.core.utils.logger") as mock_logger:
            with patch("commonzero.core.utils.time") as mock_time:
                mock_time.strftime.return_value = "2023-01-01 12:00:00"
                mock_time.localtime.return_value = "mocked_time"

                log_step("扫描零点")

                mock_time.strftime.assert_called_once_with("%Y-%m-%d %H:%M:%S", "mocked_time")
                mock_logger.info.assert_called_once_with("[2023-01-01 12:00:00] 扫描零点")


class TestJson:
    """JSON 序列化测试"""

    def test_to_jsonable(self):
        """测试 numpy、分数与非有限数的转换"""
        value = {
            "array": np.array([[1.0, 2.0]]),
            "int": np.int64(3),
            "flag": np.bool_(True),
            "fraction": Fraction(1, 4),
            "nan": float("nan"),
            "inf": np.float64(np.inf),
            "tuple": (1, 2),
            1: "key",
        }
        result = to_jsonable(value)
        assert result == {
            "array": [[1.0, 2.0]],
            "int": 3,
            "flag": True,
            "fraction": 0.25,
            "nan": None,
            "inf": None,
            "tuple": [1, 2],
            "1": "key",
        }
        assert isinstance(result["flag"], bool)

    def test_canonical_json_is_sorted(self):
        """测试键排序后的稳定文本"""
        text = canonical_json({"b": 1, "a": [math.pi]})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [math.pi], "b": 1}

    def test_content_hash(self):
        """测试摘要与键顺序无关"""
        assert content_hash({"a": 1, "b": 2}) == content_hash({"b": 2, "a": 1})
        assert content_hash({"a": 1}) != content_hash({"a": 2})
        assert len(content_hash([])) == 64


class TestAtomicWrite:
    """原子写文件测试"""

    def test_creates_parent_directories(self, tmp_path):
        """测试自动创建目录"""
        path = atomic_write_text(tmp_path / "a" / "b" / "report.json", "{}")
        assert path.read_text(encoding="utf-8") == "{}"

    def test_failure_leaves_no_temporary_file(self, tmp_path):
        """测试替换失败时清理临时文件"""
        with patch("commonzero.core.utils.os.replace", side_effect=OSError("disk full")):
            with pytest.raises(OSError):
                atomic_write_text(tmp_path / "report.json", "{}")
        assert list(tmp_path.iterdir()) == []
