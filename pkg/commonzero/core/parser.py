"""
解析器模块 - 向量场文本的词法分析与递归下降语法分析

语法:
    field    := "(" expr "," expr ")"
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := ("+" | "-") unary | power
    power    := atom ("^" exponent)*
    exponent := ["+" | "-"] INTEGER | "(" ["+" | "-"] INTEGER ")"
    atom     := NUMBER | "x" | "y" | FUNC "(" expr ")" | "(" expr ")"
    FUNC     := "sin" | "cos" | "exp" | "sqrt"
"""

import re
from fractions import Fraction
from typing import List, NamedTuple, Tuple

from .errors import FieldSyntaxError, NonIntegerExponentError, UnknownIdentifierError
from .expr import FUNCTIONS, VARIABLES, Const, Expr, Var, add, div, func, mul, neg, power, sub

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(src: str) -> List[Token]:
    """把源文本切分为记号，末尾追加 eof 记号"""
    tokens: List[Token] = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None:
            raise FieldSyntaxError(f"意外的字符 '{src[pos]}'", pos)
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("eof", "", len(src)))
    return tokens


class Parser:
    """递归下降解析器，每个方法对应一条语法规则"""

    def __init__(self, src: str):
        self.src = src
        self.tokens = tokenize(src)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != "eof":
            self.index += 1
        return token

    def accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        token = self.current
        if token.kind == "op" and token.text == text:
            return self.advance()
        raise FieldSyntaxError(f"期望 '{text}'，得到 {self._describe(token)}", token.position)

    @staticmethod
    def _describe(token: Token) -> str:
        return "输入结尾" if token.kind == "eof" else f"'{token.text}'"

    def expect_end(self) -> None:
        token = self.current
        if token.kind != "eof":
            raise FieldSyntaxError(f"多余的输入 {self._describe(token)}", token.position)

    # 语法规则

    def parse_field(self) -> Tuple[Expr, Expr]:
        self.expect("(")
        first = self.expr()
        self.expect(",")
        second = self.expr()
        self.expect(")")
        self.expect_end()
        return first, second

    def parse_scalar(self) -> Expr:
        result = self.expr()
        self.expect_end()
        return result

    def expr(self) -> Expr:
        result = self.term()
        while True:
            if self.accept("+"):
                result = add(result, self.term())
            elif self.accept("-"):
                result = sub(result, self.term())
            else:
                return result

    def term(self) -> Expr:
        result = self.unary()
        while True:
            if self.accept("*"):
                result = mul(result, self.unary())
            elif self.accept("/"):
                result = div(result, self.unary())
            else:
                return result

    def unary(self) -> Expr:
        if self.accept("-"):
            return neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        result = self.atom()
        while self.accept("^"):
            result = power(result, self.exponent())
        return result

    def exponent(self) -> int:
        parenthesized = self.accept("(")
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        token = self.current
        if token.kind != "number":
            raise NonIntegerExponentError(
                f"指数必须是整数字面量，得到 {self._describe(token)}", token.position
            )
        value = Fraction(token.text)
        if value.denominator != 1:
            raise NonIntegerExponentError(f"指数必须是整数，得到 {token.text}", token.position)
        self.advance()
        if parenthesized:
            self.expect(")")
        return sign * value.numerator

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(Fraction(token.text))
        if token.kind == "ident":
            self.advance()
            if token.text in VARIABLES:
                return Var(token.text)
            if token.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(token.text, arg)
            raise UnknownIdentifierError(f"未知的标识符 '{token.text}'", token.position)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        raise FieldSyntaxError(f"意外的 {self._describe(token)}", token.position)


def parse_components(src: str) -> Tuple[Expr, Expr]:
    """解析 "(expr_x, expr_y)" 形式的向量场文本"""
    return Parser(src).parse_field()


def parse_scalar(src: str) -> Expr:
    """解析单个标量表达式"""
    return Parser(src).parse_scalar()
