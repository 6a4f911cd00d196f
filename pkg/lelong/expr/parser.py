"""
表达式 DSL 解析器

文法（EBNF）:
    expr    := sum
    sum     := prod { "+" prod }
    prod    := [ posreal "*" ] atom | "0"
    atom    := "log" "(" powsum ")" | "max" "(" expr { "," expr } ")" | "(" expr ")"
    powsum  := powterm { "+" powterm }
    powterm := "|" poly "|" "^" posreal
    poly    := [ "+" | "-" ] pterm { ( "+" | "-" ) pterm }
    pterm   := pfactor { "*" pfactor }
    pfactor := pbase [ "^" integer ]
    pbase   := number | imaginary | "z1".."zn" | "(" poly ")"

复数字面量写作 (a+bi)，即括号内的多项式表达式，"bi" 为虚数记号。
"0" 表示恒为零的函数。
"""

import re
from dataclasses import dataclass
from typing import List, Optional

from lelong.errors import (
    ExprSyntaxError,
    InputError,
    NonPositiveParameterError,
    UnknownVariableError,
)
from lelong.expr.nodes import LogSumPow, Max, PshExpr, Scale, Sum, zero
from lelong.expr.polynomial import Polynomial

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_VARIABLE = re.compile(r"z(\d+)$")
_SYMBOLS = set("+-*^|(),")


@dataclass
class Token:
    """词法单元"""
    kind: str       # NUMBER / IMAG / IDENT / SYMBOL / END
    text: str
    value: float
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    """
    把输入文本切分为词法单元

    Args:
        text: DSL 文本

    Returns:
        List[Token]: 以 END 结尾的词法单元列表

    Raises:
        ExprSyntaxError: 出现无法识别的字符
    """
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        ch = text[pos]
        column = pos - line_start + 1
        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        match = _NUMBER.match(text, pos)
        if match:
            end = match.end()
            value = float(match.group(0))
            # 紧跟 i 的数字是虚数
            if end < len(text) and text[end] == "i" and not (
                end + 1 < len(text) and (text[end + 1].isalnum() or text[end + 1] == "_")
            ):
                tokens.append(Token("IMAG", text[pos:end + 1], value, line, column))
                pos = end + 1
            else:
                tokens.append(Token("NUMBER", match.group(0), value, line, column))
                pos = end
            continue
        match = _IDENT.match(text, pos)
        if match:
            word = match.group(0)
            if word == "i":
                tokens.append(Token("IMAG", word, 1.0, line, column))
            else:
                tokens.append(Token("IDENT", word, 0.0, line, column))
            pos = match.end()
            continue
        if ch in _SYMBOLS:
            tokens.append(Token("SYMBOL", ch, 0.0, line, column))
            pos += 1
            continue
        raise ExprSyntaxError(f"无法识别的字符 {ch!r}", line, column)
    column = pos - line_start + 1
    tokens.append(Token("END", "", 0.0, line, column))
    return tokens


class Parser:
    """
    递归下降解析器

    先扫描变量确定维数 n，再按文法构造语法树。
    """

    def __init__(self, text: str, n: Optional[int] = None):
        """
        初始化解析器

        Args:
            text: DSL 文本
            n: 维数，缺省时取文本中出现的最大变量下标
        """
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.n = self._resolve_arity(n)

    def _resolve_arity(self, n: Optional[int]) -> int:
        highest = 0
        for idx, tok in enumerate(self.tokens):
            if tok.kind != "IDENT" or tok.text in ("log", "max"):
                continue
            follower = self.tokens[idx + 1]
            if follower.kind == "SYMBOL" and follower.text == "(":
                # 函数调用形式，由文法层报告
                continue
            match = _VARIABLE.match(tok.text)
            if not match or int(match.group(1)) < 1:
                raise UnknownVariableError(
                    f"未知变量 {tok.text!r} (第 {tok.line} 行, 第 {tok.column} 列)"
                )
            highest = max(highest, int(match.group(1)))
        if n is None:
            return max(1, highest)
        if n < 1:
            raise InputError(f"维数必须 >= 1: {n}")
        if highest > n:
            raise UnknownVariableError(f"变量 z{highest} 超出维数 n={n}")
        return n

    # ------------------------------------------------------------------
    # 工具方法
    # ------------------------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def _error(self, message: str, tok: Optional[Token] = None) -> ExprSyntaxError:
        tok = tok or self.current
        found = tok.text or "输入结束"
        return ExprSyntaxError(f"{message}，实际为 {found!r}", tok.line, tok.column)

    def _is_symbol(self, symbol: str) -> bool:
        return self.current.kind == "SYMBOL" and self.current.text == symbol

    def _expect(self, symbol: str) -> Token:
        if not self._is_symbol(symbol):
            raise self._error(f"期望 {symbol!r}")
        tok = self.current
        self.pos += 1
        return tok

    def _posreal(self, what: str) -> float:
        tok = self.current
        if tok.kind == "SYMBOL" and tok.text == "-" and self._peek().kind == "NUMBER":
            raise NonPositiveParameterError(
                f"{what}必须为正数 (第 {tok.line} 行, 第 {tok.column} 列)"
            )
        if tok.kind != "NUMBER":
            raise self._error(f"期望{what}")
        if tok.value <= 0:
            raise NonPositiveParameterError(
                f"{what}必须为正数: {tok.text} (第 {tok.line} 行, 第 {tok.column} 列)"
            )
        self.pos += 1
        return tok.value

    # ------------------------------------------------------------------
    # 表达式层
    # ------------------------------------------------------------------

    def parse(self) -> PshExpr:
        expr = self.parse_sum()
        if self.current.kind != "END":
            raise self._error("表达式之后存在多余内容")
        return expr

    def parse_sum(self) -> PshExpr:
        terms = [self.parse_prod()]
        while self._is_symbol("+"):
            self.pos += 1
            terms.append(self.parse_prod())
        if len(terms) == 1:
            return terms[0]
        return Sum(self.n, tuple(terms))

    def parse_prod(self) -> PshExpr:
        tok = self.current
        if tok.kind == "SYMBOL" and tok.text == "-":
            raise NonPositiveParameterError(
                f"倍数必须为正数 (第 {tok.line} 行, 第 {tok.column} 列)"
            )
        if tok.kind == "NUMBER":
            if self._peek().kind == "SYMBOL" and self._peek().text == "*":
                c = self._posreal("倍数")
                self._expect("*")
                return Scale(self.n, c, self.parse_atom())
            if tok.value == 0:
                self.pos += 1
                return zero(self.n)
            raise self._error("常数倍后需要 '*'", self._peek())
        return self.parse_atom()

    def parse_atom(self) -> PshExpr:
        tok = self.current
        if tok.kind == "IDENT" and tok.text == "log":
            self.pos += 1
            self._expect("(")
            terms = [self.parse_powterm()]
            while self._is_symbol("+"):
                self.pos += 1
                terms.append(self.parse_powterm())
            self._expect(")")
            return LogSumPow(self.n, tuple(terms))
        if tok.kind == "IDENT" and tok.text == "max":
            self.pos += 1
            self._expect("(")
            args = [self.parse_sum()]
            while self._is_symbol(","):
                self.pos += 1
                args.append(self.parse_sum())
            self._expect(")")
            return Max(self.n, tuple(args))
        if self._is_symbol("("):
            self.pos += 1
            inner = self.parse_sum()
            self._expect(")")
            return inner
        if tok.kind == "IDENT":
            raise self._error("未知函数，只允许 log 或 max")
        raise self._error("期望 log(...)、max(...) 或括号表达式")

    def parse_powterm(self):
        start = self.current
        self._expect("|")
        poly = self.parse_poly()
        self._expect("|")
        self._expect("^")
        alpha = self._posreal("指数")
        if poly.is_zero:
            raise InputError(f"多项式恒为零 (第 {start.line} 行, 第 {start.column} 列)")
        return poly, alpha

    # ------------------------------------------------------------------
    # 多项式层
    # ------------------------------------------------------------------

    def parse_poly(self) -> Polynomial:
        negate = False
        if self._is_symbol("-") or self._is_symbol("+"):
            negate = self.current.text == "-"
            self.pos += 1
        result = self.parse_pterm()
        if negate:
            result = -result
        while self._is_symbol("+") or self._is_symbol("-"):
            sign = self.current.text
            self.pos += 1
            term = self.parse_pterm()
            result = result + term if sign == "+" else result - term
        return result

    def parse_pterm(self) -> Polynomial:
        result = self.parse_pfactor()
        while self._is_symbol("*"):
            self.pos += 1
            result = result * self.parse_pfactor()
        return result

    def parse_pfactor(self) -> Polynomial:
        base = self.parse_pbase()
        if self._is_symbol("^"):
            self.pos += 1
            tok = self.current
            if tok.kind != "NUMBER" or not float(tok.value).is_integer():
                raise self._error("多项式的幂必须是非负整数")
            self.pos += 1
            base = base ** int(tok.value)
        return base

    def parse_pbase(self) -> Polynomial:
        tok = self.current
        if tok.kind == "NUMBER":
            self.pos += 1
            return Polynomial.constant(self.n, tok.value)
        if tok.kind == "IMAG":
            self.pos += 1
            return Polynomial.constant(self.n, complex(0.0, tok.value))
        if tok.kind == "IDENT":
            match = _VARIABLE.match(tok.text)
            if not match:
                raise UnknownVariableError(
                    f"未知变量 {tok.text!r} (第 {tok.line} 行, 第 {tok.column} 列)"
                )
            self.pos += 1
            return Polynomial.variable(self.n, int(match.group(1)) - 1)
        if self._is_symbol("("):
            self.pos += 1
            inner = self.parse_poly()
            self._expect(")")
            return inner
        raise self._error("期望数字、变量或括号")


def parse(text: str, n: Optional[int] = None) -> PshExpr:
    """
    解析 DSL 文本为表达式

    Args:
        text: DSL 文本
        n: 维数，缺省时由出现的最大变量下标决定

    Returns:
        PshExpr: 语法树

    Raises:
        ExprSyntaxError: 语法错误（含行列位置）
        UnknownVariableError: 未知变量或变量超出维数
        NonPositiveParameterError: 指数或倍数不是正数
    """
    return Parser(text, n).parse()
