"""
向量场DSL模块 - 向量场表达式、数值向量场、李括号、楔积与括号条件检查

向量场统一实现两方法接口：
    evaluate(x, y) -> (u, v)
    jacobian(x, y) -> (u_x, u_y, v_x, v_y)
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np

from .errors import EvaluationDomainError, NotDifferentiableError, NotPolynomialError
from .expr import ZERO, Const, Expr, as_expr, derivative, evaluate, is_polynomial, to_text
from .parser import parse_components, parse_scalar
from .polynomial import Polynomial, to_polynomial

logger = logging.getLogger(__name__)

Arrays2 = Tuple[np.ndarray, np.ndarray]
Arrays4 = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


@runtime_checkable
class VectorField(Protocol):
    """平面向量场的求值接口"""

    def evaluate(self, x, y) -> Arrays2: ...

    def jacobian(self, x, y) -> Arrays4: ...


def _broadcast(value, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), shape).astype(float)


def field_values(X: VectorField, points) -> np.ndarray:
    """在点阵 (n, 2) 上求值，返回 (n, 2)"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    u, v = X.evaluate(pts[:, 0], pts[:, 1])
    return np.column_stack([_broadcast(u, len(pts)), _broadcast(v, len(pts))])


def jacobian_values(X: VectorField, points) -> np.ndarray:
    """在点阵 (n, 2) 上求雅可比矩阵，返回 (n, 2, 2)"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ux, uy, vx, vy = (_broadcast(a, len(pts)) for a in X.jacobian(pts[:, 0], pts[:, 1]))
    return np.stack([np.stack([ux, uy], axis=-1), np.stack([vx, vy], axis=-1)], axis=-2)


def _env(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return {"x": x, "y": y}, np.broadcast(x, y).shape


def _exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(repr(float(value)))


@dataclass(frozen=True)
class ScalarExpr:
    """单输出标量表达式"""

    expr: Expr

    @property
    def is_polynomial(self) -> bool:
        return is_polynomial(self.expr)

    def evaluate(self, x, y) -> np.ndarray:
        env, shape = _env(x, y)
        return _broadcast(evaluate(self.expr, env), shape)

    def __call__(self, p) -> float:
        return float(self.evaluate(p[0], p[1]))

    def partial(self, var: str) -> "ScalarExpr":
        return ScalarExpr(derivative(self.expr, var))

    def to_polynomial(self) -> Polynomial:
        return to_polynomial(self.expr)

    def is_zero(self) -> bool:
        """多项式恒等于零（精确判定）；非多项式时只识别常量零"""
        if self.is_polynomial:
            return to_polynomial(self.expr).is_zero()
        return self.expr == ZERO

    def to_text(self) -> str:
        return to_text(self.expr)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class FieldExpr:
    """
    由两个标量表达式树构成的向量场

    Attributes:
        components: (x 分量, y 分量)
        source: 解析时的原始文本（不参与比较）
    """

    components: Tuple[Expr, Expr]
    source: Optional[str] = field(default=None, compare=False)

    @classmethod
    def constant(cls, a, b) -> "FieldExpr":
        return cls((as_expr(a), as_expr(b)))

    @classmethod
    def zero(cls) -> "FieldExpr":
        return cls((ZERO, ZERO))

    @property
    def is_polynomial(self) -> bool:
        return all(is_polynomial(c) for c in self.components)

    @cached_property
    def partials(self) -> Tuple[Expr, Expr, Expr, Expr]:
        """符号偏导 (u_x, u_y, v_x, v_y)"""
        u, v = self.components
        return (derivative(u, "x"), derivative(u, "y"), derivative(v, "x"), derivative(v, "y"))

    def evaluate(self, x, y) -> Arrays2:
        env, shape = _env(x, y)
        u, v = (evaluate(c, env) for c in self.components)
        return _broadcast(u, shape), _broadcast(v, shape)

    def jacobian(self, x, y) -> Arrays4:
        env, shape = _env(x, y)
        return tuple(_broadcast(evaluate(d, env), shape) for d in self.partials)  # type: ignore[return-value]

    def __call__(self, p) -> np.ndarray:
        u, v = self.evaluate(p[0], p[1])
        return np.array([float(u), float(v)])

    def divergence(self) -> ScalarExpr:
        ux, _, _, vy = self.partials
        return ScalarExpr(ux + vy)

    def to_polynomials(self) -> Tuple[Polynomial, Polynomial]:
        return to_polynomial(self.components[0]), to_polynomial(self.components[1])

    def is_exact_polynomial(self) -> bool:
        if not self.is_polynomial:
            return False
        return all(p.is_exact() for p in self.to_polynomials())

    def to_text(self) -> str:
        return f"({to_text(self.components[0])}, {to_text(self.components[1])})"

    def __str__(self) -> str:
        return self.to_text()

    # 线性运算

    def __add__(self, other: "FieldExpr") -> "FieldExpr":
        if not isinstance(other, FieldExpr):
            return NotImplemented
        return FieldExpr((self.components[0] + other.components[0], self.components[1] + other.components[1]))

    def __sub__(self, other: "FieldExpr") -> "FieldExpr":
        if not isinstance(other, FieldExpr):
            return NotImplemented
        return FieldExpr((self.components[0] - other.components[0], self.components[1] - other.components[1]))

    def __neg__(self) -> "FieldExpr":
        return FieldExpr((-self.components[0], -self.components[1]))

    def __mul__(self, scalar) -> "FieldExpr":
        if isinstance(scalar, ScalarExpr):
            return self.scale_by(scalar)
        if isinstance(scalar, (int, float, Fraction)):
            factor = Const(_exact(scalar))
            return FieldExpr((factor * self.components[0], factor * self.components[1]))
        return NotImplemented

    __rmul__ = __mul__

    def scale_by(self, f: ScalarExpr) -> "FieldExpr":
        """逐点乘以标量函数 f"""
        return FieldExpr((f.expr * self.components[0], f.expr * self.components[1]))


class NumericField:
    """
    由 numpy 函数给出的向量场

    未提供雅可比时使用五点中心差分，步长 h·(1 + |p|)
    """

    def __init__(
        self,
        func: Callable[[np.ndarray, np.ndarray], Arrays2],
        jacobian: Optional[Callable[[np.ndarray, np.ndarray], Arrays4]] = None,
        name: str = "numeric",
        h: float = 1e-4,
    ):
        self._func = func
        self._jacobian = jacobian
        self.name = name
        self.h = h

    is_polynomial = False

    def evaluate(self, x, y) -> Arrays2:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        u, v = self._func(x, y)
        return _broadcast(u, shape), _broadcast(v, shape)

    def __call__(self, p) -> np.ndarray:
        u, v = self.evaluate(p[0], p[1])
        return np.array([float(u), float(v)])

    def jacobian(self, x, y) -> Arrays4:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self._jacobian is not None:
            shape = np.broadcast(x, y).shape
            return tuple(_broadcast(a, shape) for a in self._jacobian(x, y))  # type: ignore[return-value]
        h = self.h * (1.0 + np.hypot(x, y))

        def diff(dx, dy):
            fp1 = self.evaluate(x + dx, y + dy)
            fm1 = self.evaluate(x - dx, y - dy)
            fp2 = self.evaluate(x + 2 * dx, y + 2 * dy)
            fm2 = self.evaluate(x - 2 * dx, y - 2 * dy)
            return tuple((8 * (a - b) - (c - d)) / (12 * h) for a, b, c, d in zip(fp1, fm1, fp2, fm2))

        (ux, vx) = diff(h, 0.0)
        (uy, vy) = diff(0.0, h)
        return ux, uy, vx, vy

    def __add__(self, other: VectorField) -> "NumericField":
        return linear_combination([self, other], [1.0, 1.0])

    def __neg__(self) -> "NumericField":
        return linear_combination([self], [-1.0])

    def __mul__(self, scalar: float) -> "NumericField":
        return linear_combination([self], [float(scalar)])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"NumericField({self.name})"


class NumericScalar:
    """数值标量函数，接口同 ScalarExpr.evaluate"""

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray], name: str = "numeric"):
        self._func = func
        self.name = name

    is_polynomial = False

    def evaluate(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return _broadcast(self._func(x, y), np.broadcast(x, y).shape)

    def __call__(self, p) -> float:
        return float(self.evaluate(p[0], p[1]))


AnyField = Union[FieldExpr, NumericField, VectorField]


def linear_combination(fields: Sequence[AnyField], coeffs: Sequence[float]) -> AnyField:
    """
    线性组合 sum c_i X_i

    全部为 FieldExpr 时结果仍是 FieldExpr（浮点系数按十进制文本转成精确分数），否则为 NumericField
    """
    if len(fields) != len(coeffs) or not fields:
        raise ValueError("向量场与系数数量必须一致且非空")
    if all(isinstance(f, FieldExpr) for f in fields):
        total = FieldExpr.zero()
        for f, c in zip(fields, coeffs):
            total = total + f * _exact(c)  # type: ignore[operator]
        return total
    members = list(fields)
    weights = [float(c) for c in coeffs]

    def func(x, y):
        u = np.zeros(np.broadcast(x, y).shape)
        v = np.zeros_like(u)
        for f, c in zip(members, weights):
            fu, fv = f.evaluate(x, y)
            u = u + c * fu
            v = v + c * fv
        return u, v

    def jac(x, y):
        acc = [np.zeros(np.broadcast(x, y).shape) for _ in range(4)]
        for f, c in zip(members, weights):
            for k, part in enumerate(f.jacobian(x, y)):
                acc[k] = acc[k] + c * part
        return tuple(acc)

    return NumericField(func, jac, name="linear_combination")


# 规范操作


def parse_field(src: str) -> FieldExpr:
    """
    解析 "(expr_x, expr_y)" 形式的向量场

    Raises:
        FieldSyntaxError: 语法错误（带位置）
        UnknownIdentifierError: 未知标识符
        NonIntegerExponentError: 非整数指数
    """
    first, second = parse_components(src)
    return FieldExpr((first, second), source=src)


def parse_scalar_field(src: str) -> ScalarExpr:
    return ScalarExpr(parse_scalar(src))


def eval_field(F: AnyField, p) -> np.ndarray:
    """
    在单点求值

    Raises:
        EvaluationDomainError: 除以零或负数开平方
    """
    point = np.asarray(p, dtype=float).reshape(2)
    u, v = F.evaluate(point[0], point[1])
    value = np.array([float(u), float(v)])
    if not np.all(np.isfinite(value)):
        raise EvaluationDomainError("求值结果不是有限数", (float(point[0]), float(point[1])))
    return value


def _require_jacobian(F) -> None:
    if not hasattr(F, "jacobian"):
        raise NotDifferentiableError(f"向量场 {F!r} 不提供雅可比矩阵")


def lie_bracket(X: AnyField, Y: AnyField) -> AnyField:
    """
    李括号 [X, Y] = DY·X − DX·Y

    精确多项式输入在系数表上计算并输出规范形式；其它 FieldExpr 走符号求导；
    含数值向量场时返回逐点计算的 NumericField
    """
    _require_jacobian(X)
    _require_jacobian(Y)
    if isinstance(X, FieldExpr) and isinstance(Y, FieldExpr):
        if X.is_polynomial and Y.is_polynomial:
            try:
                (p1, p2), (q1, q2) = X.to_polynomials(), Y.to_polynomials()
            except NotPolynomialError as e:
                raise NotDifferentiableError(str(e)) from e
            # [X, Y] = DY·X - DX·Y
            first = q1.derivative("x") * p1 + q1.derivative("y") * p2
            first = first - (p1.derivative("x") * q1 + p1.derivative("y") * q2)
            second = q2.derivative("x") * p1 + q2.derivative("y") * p2
            second = second - (p2.derivative("x") * q1 + p2.derivative("y") * q2)
            return FieldExpr((first.to_expr(), second.to_expr()))
        xu, xv = X.components
        yu, yv = Y.components
        ax, ay, bx, by = X.partials
        cx, cy, dx, dy = Y.partials
        first = (cx * xu + cy * xv) - (ax * yu + ay * yv)
        second = (dx * xu + dy * xv) - (bx * yu + by * yv)
        return FieldExpr((first, second))

    def func(x, y):
        xu, xv = X.evaluate(x, y)
        yu, yv = Y.evaluate(x, y)
        ax, ay, bx, by = X.jacobian(x, y)
        cx, cy, dx, dy = Y.jacobian(x, y)
        return (cx * xu + cy * xv) - (ax * yu + ay * yv), (dx * xu + dy * xv) - (bx * yu + by * yv)

    return NumericField(func, name="lie_bracket")


def wedge(X: AnyField, Y: AnyField) -> Union[ScalarExpr, NumericScalar]:
    """楔积 X₁Y₂ − X₂Y₁；在 X_p 与 Y_p 线性相关处恰好为零"""
    if isinstance(X, FieldExpr) and isinstance(Y, FieldExpr):
        if X.is_polynomial and Y.is_polynomial:
            (p1, p2), (q1, q2) = X.to_polynomials(), Y.to_polynomials()
            return ScalarExpr((p1 * q2 - p2 * q1).to_expr())
        return ScalarExpr(X.components[0] * Y.components[1] - X.components[1] * Y.components[0])

    def func(x, y):
        xu, xv = X.evaluate(x, y)
        yu, yv = Y.evaluate(x, y)
        return xu * yv - xv * yu

    return NumericScalar(func, name="wedge")


def wedge_values(X: AnyField, Y: AnyField, points) -> np.ndarray:
    a = field_values(X, points)
    b = field_values(Y, points)
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


@dataclass(frozen=True)
class BracketVerdict:
    """
    括号条件 [X, Y] ∧ X = 0 的检查结果

    Attributes:
        holds: 条件是否成立
        exact: 是否由精确系数比较得出
        residual: 最大残差（精确判定成立时为 0）
        witness: 残差最大的样本点
        bracket_text: 李括号的文本形式（数值向量场为 None）
    """

    holds: bool
    exact: bool
    residual: float
    witness: Optional[Tuple[float, float]] = None
    bracket_text: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "exact": self.exact,
            "residual": self.residual,
            "witness": list(self.witness) if self.witness is not None else None,
            "bracket": self.bracket_text,
        }


def check_bracket_condition(X: AnyField, Y: AnyField, S, tol: float = 1e-8, grid: int = 64) -> BracketVerdict:
    """
    检查 [X, Y] ∧ X ≡ 0

    两个精确多项式场按系数比较精确判定；否则在 S 的 grid×grid 网格上采样，残差不超过 tol 时成立

    Raises:
        EvaluationDomainError: 某个样本点不在表达式定义域内
    """
    from .domain import surface_grid

    bracket = lie_bracket(X, Y)
    condition = wedge(bracket, X)
    bracket_text = bracket.to_text() if isinstance(bracket, FieldExpr) else None
    samples = surface_grid(S, grid)

    exact_inputs = (
        isinstance(X, FieldExpr) and isinstance(Y, FieldExpr) and X.is_exact_polynomial() and Y.is_exact_polynomial()
    )
    if exact_inputs and isinstance(condition, ScalarExpr):
        if condition.is_zero():
            logger.debug(f"括号条件精确成立: [X,Y] = {bracket_text}")
            return BracketVerdict(True, True, 0.0, None, bracket_text)
        values = np.abs(condition.evaluate(samples[:, 0], samples[:, 1]))
        worst = int(np.argmax(values))
        return BracketVerdict(
            False, True, float(values[worst]), (float(samples[worst, 0]), float(samples[worst, 1])), bracket_text
        )

    values = np.abs(condition.evaluate(samples[:, 0], samples[:, 1]))
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.isfinite(values)))
        raise EvaluationDomainError("括号条件在样本点上不是有限数", (float(samples[bad, 0]), float(samples[bad, 1])))
    worst = int(np.argmax(values))
    residual = float(values[worst])
    holds = residual <= tol
    logger.debug(f"括号条件采样残差 {residual:.3e}（容差 {tol:.1e}）")
    return BracketVerdict(holds, False, residual, (float(samples[worst, 0]), float(samples[worst, 1])), bracket_text)
