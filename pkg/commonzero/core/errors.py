"""
异常模块 - 定义工具包中所有可预期的错误类型
"""

from typing import Any, Optional, Sequence


class CommonZeroError(Exception):
    """所有工具包错误的基类"""


# 表达式与解析


class FieldSyntaxError(CommonZeroError):
    """向量场表达式语法错误，附带出错位置（字符偏移）"""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (位置 {position})")
        self.position = position


class UnknownIdentifierError(FieldSyntaxError):
    """出现了未知的标识符"""


class NonIntegerExponentError(FieldSyntaxError):
    """幂运算的指数不是整数"""


class EvaluationDomainError(CommonZeroError):
    """表达式在某点无定义（除以零、负数开方）"""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.point = tuple(point) if point is not None else None


class NotDifferentiableError(CommonZeroError):
    """无法对向量场求导"""


class NotPolynomialError(CommonZeroError):
    """表达式不是多项式（含除法、函数或负整数次幂）"""


# 曲面


class CurveError(CommonZeroError):
    """折线曲线不合法"""


class SurfaceSpecError(CommonZeroError):
    """曲面描述不合法"""


class NotOnBoundaryError(CommonZeroError):
    """给定点不在曲面边界上"""


class OutsideMarginError(CommonZeroError):
    """给定点超出收缩邻域"""


# 半流


class FlowConfigError(CommonZeroError):
    """积分器配置不合法"""


class FlowError(CommonZeroError):
    """批量积分失败"""


class SampleTooCloseError(CommonZeroError):
    """样本点过于接近零点集"""


# 指数


class IndexComputationError(CommonZeroError):
    """指数计算失败的基类"""


class IndexConfigError(IndexComputationError):
    """指数配置不合法"""


class VanishingOnContourError(IndexComputationError):
    """向量在轮廓上（几乎）为零"""

    def __init__(self, message: str, min_modulus: float = 0.0):
        super().__init__(message)
        self.min_modulus = min_modulus


class RefinementLimitError(IndexComputationError):
    """轮廓细分次数超过上限"""


class IndexInstabilityError(IndexComputationError):
    """追加一次细分后绕数发生变化，或累计角度不接近整数"""


class AnotherZeroError(IndexComputationError):
    """圆盘内存在另一个零点"""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.point = tuple(point) if point is not None else None


class RadiusDependenceError(IndexComputationError):
    """指数随半径变化"""


class TauSelectionError(IndexComputationError):
    """τ 减半到下限仍未稳定"""


class IsolationError(IndexComputationError):
    """区域不是孤立邻域（轮廓上存在零点）"""


# 周期轨道


class TransversalityError(CommonZeroError):
    """截线不横截于向量场"""


class NoReturnError(CommonZeroError):
    """截线上没有任何样本返回"""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


# 场景


class ScenarioError(CommonZeroError):
    """场景运行错误的基类"""


class SchemaError(ScenarioError):
    """场景文件不符合模式"""


class UnknownCheckError(SchemaError):
    """未知的检查类型"""


class CheckExecutionError(ScenarioError):
    """检查执行时发生内部错误"""

    def __init__(self, check: str, cause: BaseException):
        super().__init__(f"检查 '{check}' 执行失败: {cause}")
        self.check = check
        self.cause = cause
