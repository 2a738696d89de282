"""
多项式模块 - x, y 的稀疏二元多项式，系数为 Fraction（精确）或 float

多项式恒等式通过比较规范化的单项式系数表来判定
"""

from fractions import Fraction
from functools import singledispatch
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from .errors import NotPolynomialError
from .expr import (
    ZERO,
    Add,
    Const,
    Expr,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    add,
    mul,
    neg,
    power,
    sub,
)

Monomial = Tuple[int, int]


class Polynomial:
    """以 {(i, j): 系数} 表示 sum c * x^i * y^j"""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, object]] = None):
        self.terms: Dict[Monomial, object] = {}
        for mono, coeff in (terms or {}).items():
            if coeff != 0:
                self.terms[mono] = coeff

    @classmethod
    def constant(cls, value) -> "Polynomial":
        return cls({(0, 0): value})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        if name == "x":
            return cls({(1, 0): Fraction(1)})
        if name == "y":
            return cls({(0, 1): Fraction(1)})
        raise NotPolynomialError(f"未知变量: {name}")

    def __iter__(self) -> Iterator[Tuple[Monomial, object]]:
        return iter(sorted(self.terms.items()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self) -> str:
        return f"Polynomial({dict(sorted(self.terms.items()))})"

    def __add__(self, other: "Polynomial") -> "Polynomial":
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            terms[mono] = terms.get(mono, 0) + coeff
        return Polynomial(terms)

    def __neg__(self) -> "Polynomial":
        return Polynomial({mono: -coeff for mono, coeff in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        terms: Dict[Monomial, object] = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                mono = (i1 + i2, j1 + j2)
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return Polynomial(terms)

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise NotPolynomialError("负整数次幂不是多项式")
        result = Polynomial.constant(Fraction(1))
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def derivative(self, var: str) -> "Polynomial":
        """对变量 var 求偏导"""
        terms: Dict[Monomial, object] = {}
        for (i, j), coeff in self.terms.items():
            if var == "x" and i > 0:
                terms[(i - 1, j)] = coeff * i
            elif var == "y" and j > 0:
                terms[(i, j - 1)] = coeff * j
        return Polynomial(terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        """所有系数都是 Fraction 时为真"""
        return all(isinstance(c, Fraction) for c in self.terms.values())

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(i + j for i, j in self.terms)

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape)
        for (i, j), coeff in self.terms.items():
            total = total + float(coeff) * x**i * y**j
        return total

    def to_expr(self) -> Expr:
        """按总次数降序构造表达式树"""
        ordered = sorted(self.terms.items(), key=lambda item: (-(item[0][0] + item[0][1]), -item[0][0]))
        result: Expr = ZERO
        for index, ((i, j), coeff) in enumerate(ordered):
            negative = coeff < 0
            monomial = mul(power(Var("x"), i), power(Var("y"), j))
            term = mul(Const(-coeff if negative else coeff), monomial)
            if index == 0:
                result = neg(term) if negative else term
            elif negative:
                result = sub(result, term)
            else:
                result = add(result, term)
        return result


@singledispatch
def to_polynomial(e: Expr) -> Polynomial:
    """把表达式展开为多项式；出现除法、函数或负整数次幂时抛出 NotPolynomialError"""
    raise NotPolynomialError(f"节点 {type(e).__name__} 不是多项式")


@to_polynomial.register
def _(e: Const) -> Polynomial:
    return Polynomial.constant(e.value)


@to_polynomial.register
def _(e: Var) -> Polynomial:
    return Polynomial.variable(e.name)


@to_polynomial.register
def _(e: Neg) -> Polynomial:
    return -to_polynomial(e.arg)


@to_polynomial.register
def _(e: Add) -> Polynomial:
    return to_polynomial(e.left) + to_polynomial(e.right)


@to_polynomial.register
def _(e: Sub) -> Polynomial:
    return to_polynomial(e.left) - to_polynomial(e.right)


@to_polynomial.register
def _(e: Mul) -> Polynomial:
    return to_polynomial(e.left) * to_polynomial(e.right)


@to_polynomial.register
def _(e: Pow) -> Polynomial:
    return to_polynomial(e.base) ** e.exponent
