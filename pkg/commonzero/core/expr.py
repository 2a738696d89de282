"""
表达式树模块 - 标量表达式的节点类型、常量折叠构造器、求值、求导与打印

节点种类: 常量、变量、加、减、乘、除、整数次幂、取负、sin/cos/exp/sqrt
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import singledispatch
from typing import Dict, Union

import numpy as np

from .errors import EvaluationDomainError

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]
FUNCTIONS = ("sin", "cos", "exp", "sqrt")
VARIABLES = ("x", "y")


@dataclass(frozen=True)
class Expr:
    """表达式节点基类"""

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: Number


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(value) -> Expr:
    """把数值转换为常量节点；整数和Fraction保持精确"""
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    return Const(float(value))


def is_const(e: Expr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# 常量折叠构造器


def add(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0):
        return b
    if is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if is_const(b, 0):
        return a
    if a == b:
        return ZERO
    if is_const(a, 0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0) or is_const(b, 0):
        return ZERO
    if is_const(a, 1):
        return b
    if is_const(b, 1):
        return a
    if is_const(a, -1):
        return neg(b)
    if is_const(b, -1):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return mul(a.arg, b.arg)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    if a == b:
        return power(a, 2)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0) and not is_const(b, 0):
        return ZERO
    if is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value != 0 or exponent > 0:
            return Const(base.value**exponent)
    if isinstance(base, Pow):
        return power(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"未知函数: {name}")
    return Func(name, arg)


# 求值

Env = Dict[str, np.ndarray]


def _bad_point(env: Env, mask) -> tuple:
    """返回第一个出错样本点的坐标"""
    xs = np.broadcast_to(np.asarray(env["x"], dtype=float), np.shape(mask))
    ys = np.broadcast_to(np.asarray(env["y"], dtype=float), np.shape(mask))
    idx = np.argwhere(np.asarray(mask))
    if idx.size == 0:
        return (float(np.ravel(xs)[0]), float(np.ravel(ys)[0]))
    first = tuple(idx[0])
    return (float(xs[first]), float(ys[first]))


@singledispatch
def evaluate(e: Expr, env: Env):
    """对表达式在环境env（变量名到数组的映射）上做逐点数值求值"""
    raise TypeError(f"无法求值的节点: {type(e).__name__}")


@evaluate.register
def _(e: Const, env: Env):
    return float(e.value)


@evaluate.register
def _(e: Var, env: Env):
    return np.asarray(env[e.name], dtype=float)


@evaluate.register
def _(e: Neg, env: Env):
    return -evaluate(e.arg, env)


@evaluate.register
def _(e: Add, env: Env):
    return evaluate(e.left, env) + evaluate(e.right, env)


@evaluate.register
def _(e: Sub, env: Env):
    return evaluate(e.left, env) - evaluate(e.right, env)


@evaluate.register
def _(e: Mul, env: Env):
    return evaluate(e.left, env) * evaluate(e.right, env)


@evaluate.register
def _(e: Div, env: Env):
    num = evaluate(e.left, env)
    den = evaluate(e.right, env)
    zero = np.asarray(den) == 0
    if np.any(zero):
        mask = np.broadcast_to(zero, np.broadcast(num, den, env["x"], env["y"]).shape)
        raise EvaluationDomainError("除以零", _bad_point(env, mask))
    return num / den


@evaluate.register
def _(e: Pow, env: Env):
    base = evaluate(e.base, env)
    if e.exponent < 0:
        zero = np.asarray(base) == 0
        if np.any(zero):
            mask = np.broadcast_to(zero, np.broadcast(base, env["x"], env["y"]).shape)
            raise EvaluationDomainError("零的负整数次幂", _bad_point(env, mask))
        return 1.0 / np.power(base, -e.exponent)
    return np.power(base, e.exponent)


@evaluate.register
def _(e: Func, env: Env):
    arg = evaluate(e.arg, env)
    if e.name == "sin":
        return np.sin(arg)
    if e.name == "cos":
        return np.cos(arg)
    if e.name == "exp":
        return np.exp(arg)
    negative = np.asarray(arg) < 0
    if np.any(negative):
        mask = np.broadcast_to(negative, np.broadcast(arg, env["x"], env["y"]).shape)
        raise EvaluationDomainError("负数开平方", _bad_point(env, mask))
    return np.sqrt(arg)


# 符号求导


@singledispatch
def derivative(e: Expr, var: str) -> Expr:
    """对变量var求符号偏导数"""
    raise TypeError(f"无法求导的节点: {type(e).__name__}")


@derivative.register
def _(e: Const, var: str) -> Expr:
    return ZERO


@derivative.register
def _(e: Var, var: str) -> Expr:
    return ONE if e.name == var else ZERO


@derivative.register
def _(e: Neg, var: str) -> Expr:
    return neg(derivative(e.arg, var))


@derivative.register
def _(e: Add, var: str) -> Expr:
    return add(derivative(e.left, var), derivative(e.right, var))


@derivative.register
def _(e: Sub, var: str) -> Expr:
    return sub(derivative(e.left, var), derivative(e.right, var))


@derivative.register
def _(e: Mul, var: str) -> Expr:
    return add(
        mul(derivative(e.left, var), e.right),
        mul(e.left, derivative(e.right, var)),
    )


@derivative.register
def _(e: Div, var: str) -> Expr:
    # (u/v)' = (u'v - uv') / v^2
    num = sub(mul(derivative(e.left, var), e.right), mul(e.left, derivative(e.right, var)))
    return div(num, power(e.right, 2))


@derivative.register
def _(e: Pow, var: str) -> Expr:
    inner = derivative(e.base, var)
    return mul(mul(Const(Fraction(e.exponent)), power(e.base, e.exponent - 1)), inner)


@derivative.register
def _(e: Func, var: str) -> Expr:
    inner = derivative(e.arg, var)
    if is_const(inner, 0):
        return ZERO
    if e.name == "sin":
        outer = func("cos", e.arg)
    elif e.name == "cos":
        outer = neg(func("sin", e.arg))
    elif e.name == "exp":
        outer = e
    else:
        outer = div(ONE, mul(Const(Fraction(2)), e))
    return mul(outer, inner)


# 性质


@singledispatch
def is_polynomial(e: Expr) -> bool:
    """只由常量、变量、加减乘和非负整数次幂构成时为真"""
    return False


@is_polynomial.register
def _(e: Const) -> bool:
    return True


@is_polynomial.register
def _(e: Var) -> bool:
    return True


@is_polynomial.register
def _(e: Neg) -> bool:
    return is_polynomial(e.arg)


@is_polynomial.register(Add)
@is_polynomial.register(Sub)
@is_polynomial.register(Mul)
def _(e) -> bool:
    return is_polynomial(e.left) and is_polynomial(e.right)


@is_polynomial.register
def _(e: Pow) -> bool:
    return e.exponent >= 0 and is_polynomial(e.base)


# 打印

_PREC_SUM = 1
_PREC_PRODUCT = 2
_PREC_UNARY = 3
_PREC_POWER = 4
_PREC_ATOM = 5


def _fraction_text(value: Fraction) -> str:
    """分母只含因子2和5时输出精确小数，否则输出带括号的分式"""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"({value.numerator}/{value.denominator})"
    digits = max(twos, fives)
    scaled = abs(value.numerator) * 10**digits // value.denominator
    text = str(scaled).rjust(digits + 1, "0")
    sign = "-" if value < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def _precedence(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_SUM
    if isinstance(e, (Mul, Div)):
        return _PREC_PRODUCT
    if isinstance(e, Neg):
        return _PREC_UNARY
    if isinstance(e, Pow):
        return _PREC_POWER
    if isinstance(e, Const) and e.value < 0:
        return _PREC_UNARY
    return _PREC_ATOM


def _wrap(e: Expr, minimum: int) -> str:
    text = to_text(e)
    return f"({text})" if _precedence(e) < minimum else text


@singledispatch
def to_text(e: Expr) -> str:
    """输出可被解析器重新读入的文本"""
    raise TypeError(f"无法打印的节点: {type(e).__name__}")


@to_text.register
def _(e: Const) -> str:
    if isinstance(e.value, Fraction):
        return _fraction_text(e.value)
    return repr(float(e.value))


@to_text.register
def _(e: Var) -> str:
    return e.name


@to_text.register
def _(e: Neg) -> str:
    return f"-{_wrap(e.arg, _PREC_POWER)}"


@to_text.register
def _(e: Add) -> str:
    return f"{_wrap(e.left, _PREC_SUM)} + {_wrap(e.right, _PREC_SUM)}"


@to_text.register
def _(e: Sub) -> str:
    return f"{_wrap(e.left, _PREC_SUM)} - {_wrap(e.right, _PREC_PRODUCT)}"


@to_text.register
def _(e: Mul) -> str:
    return f"{_wrap(e.left, _PREC_PRODUCT)}*{_wrap(e.right, _PREC_UNARY)}"


@to_text.register
def _(e: Div) -> str:
    return f"{_wrap(e.left, _PREC_PRODUCT)}/{_wrap(e.right, _PREC_POWER)}"


@to_text.register
def _(e: Pow) -> str:
    exponent = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
    return f"{_wrap(e.base, _PREC_ATOM)}^{exponent}"


@to_text.register
def _(e: Func) -> str:
    return f"{e.name}({to_text(e.arg)})"
