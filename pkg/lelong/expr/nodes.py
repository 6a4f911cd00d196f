"""
多重次调和表达式语法树

节点只允许保持多重次调和性的构造：多项式模的幂和的对数、正数倍、
求和、取最大值以及与全纯多项式映射的复合。所有节点都是不可变值，
携带变量个数 n。−∞ 是合法的求值结果。
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from lelong.errors import ArityMismatchError, InputError, NonPositiveParameterError
from lelong.expr.polynomial import PolyMap, Polynomial, format_real


def _positive(value: float, what: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise NonPositiveParameterError(f"{what}必须为有限正数: {value}")
    return value


@dataclass(frozen=True)
class PshExpr(ABC):
    """表达式基类，n 为变量个数"""
    n: int

    @abstractmethod
    def _eval(self, Z: np.ndarray) -> np.ndarray:
        """在 (N, n) 的点集上求值，返回 (N,) 的实数组（可含 -inf）"""

    def children(self) -> Tuple["PshExpr", ...]:
        return ()

    def evaluate(self, z: Sequence[complex]) -> float:
        return evaluate(self, z)

    def evaluate_many(self, Z: np.ndarray) -> np.ndarray:
        return evaluate_many(self, Z)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class LogSumPow(PshExpr):
    """log(Σ |p_i|^{α_i})"""
    terms: Tuple[Tuple[Polynomial, float], ...]

    def __post_init__(self):
        if not self.terms:
            raise InputError("log(...) 至少需要一项")
        for poly, alpha in self.terms:
            if poly.n != self.n:
                raise ArityMismatchError(f"多项式变量个数 {poly.n} 与表达式维数 {self.n} 不一致")
            _positive(alpha, "指数")

    def _eval(self, Z: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = [alpha * np.log(np.abs(poly.evaluate_many(Z))) for poly, alpha in self.terms]
            if len(logs) == 1:
                return logs[0]
            return logsumexp(np.stack(logs), axis=0)


@dataclass(frozen=True)
class Scale(PshExpr):
    """c · child，c > 0"""
    c: float
    child: PshExpr

    def __post_init__(self):
        _positive(self.c, "倍数")
        if self.child.n != self.n:
            raise ArityMismatchError(f"子表达式维数 {self.child.n} 与 {self.n} 不一致")

    def children(self):
        return (self.child,)

    def _eval(self, Z: np.ndarray) -> np.ndarray:
        return self.c * self.child._eval(Z)


@dataclass(frozen=True)
class Sum(PshExpr):
    """子表达式之和；空和表示恒为零的函数"""
    terms: Tuple[PshExpr, ...] = ()

    def __post_init__(self):
        for child in self.terms:
            if child.n != self.n:
                raise ArityMismatchError(f"子表达式维数 {child.n} 与 {self.n} 不一致")

    def children(self):
        return self.terms

    def _eval(self, Z: np.ndarray) -> np.ndarray:
        out = np.zeros(Z.shape[0])
        for child in self.terms:
            out = out + child._eval(Z)
        return out


@dataclass(frozen=True)
class Max(PshExpr):
    """子表达式逐点最大值"""
    terms: Tuple[PshExpr, ...]

    def __post_init__(self):
        if not self.terms:
            raise InputError("max(...) 至少需要一个参数")
        for child in self.terms:
            if child.n != self.n:
                raise ArityMismatchError(f"子表达式维数 {child.n} 与 {self.n} 不一致")

    def children(self):
        return self.terms

    def _eval(self, Z: np.ndarray) -> np.ndarray:
        return np.max(np.stack([child._eval(Z) for child in self.terms]), axis=0)


@dataclass(frozen=True)
class Compose(PshExpr):
    """child ∘ f，其中 n = f.n_in 且 child.n = f.n_out"""
    child: PshExpr
    pmap: PolyMap

    def __post_init__(self):
        if self.pmap.n_out != self.child.n:
            raise ArityMismatchError(
                f"映射输出维数 {self.pmap.n_out} 与表达式维数 {self.child.n} 不一致"
            )
        if self.pmap.n_in != self.n:
            raise ArityMismatchError(f"映射输入维数 {self.pmap.n_in} 与 {self.n} 不一致")

    def children(self):
        return (self.child,)

    def _eval(self, Z: np.ndarray) -> np.ndarray:
        return self.child._eval(self.pmap.evaluate_many(Z))


# ----------------------------------------------------------------------
# 构造与变换
# ----------------------------------------------------------------------

def zero(n: int) -> Sum:
    """恒为零的函数"""
    return Sum(n, ())


def evaluate_many(expr: PshExpr, Z: np.ndarray) -> np.ndarray:
    """
    在多个点上求值

    Args:
        expr: 表达式
        Z: 形状为 (N, n) 的复数组

    Returns:
        np.ndarray: (N,) 实数组，奇点处为 -inf

    Raises:
        ArityMismatchError: 点的维数与表达式不一致
    """
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 1:
        Z = Z.reshape(1, -1)
    if Z.shape[1] != expr.n:
        raise ArityMismatchError(f"点的维数 {Z.shape[1]} 与表达式维数 {expr.n} 不一致")
    return np.asarray(expr._eval(Z), dtype=float)


def evaluate(expr: PshExpr, z: Sequence[complex]) -> float:
    """在单点求值，返回实数或 -inf"""
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != expr.n:
        raise ArityMismatchError(f"点的维数 {z.shape[0]} 与表达式维数 {expr.n} 不一致")
    return float(evaluate_many(expr, z.reshape(1, -1))[0])


def compose(expr: PshExpr, f: PolyMap) -> Compose:
    """
    与多项式映射复合

    Args:
        expr: 表达式，维数须等于 f.n_out
        f: 多项式映射

    Returns:
        Compose: 逐点等于 expr(f(z)) 的表达式
    """
    if f.n_out != expr.n:
        raise ArityMismatchError(f"映射输出维数 {f.n_out} 与表达式维数 {expr.n} 不一致")
    return Compose(f.n_in, expr, f)


def _substitute(expr: PshExpr, f: PolyMap) -> PshExpr:
    if isinstance(expr, LogSumPow):
        return LogSumPow(f.n_in, tuple((p.substitute(f.components), a) for p, a in expr.terms))
    if isinstance(expr, Scale):
        return Scale(f.n_in, expr.c, _substitute(expr.child, f))
    if isinstance(expr, Sum):
        return Sum(f.n_in, tuple(_substitute(c, f) for c in expr.terms))
    if isinstance(expr, Max):
        return Max(f.n_in, tuple(_substitute(c, f) for c in expr.terms))
    if isinstance(expr, Compose):
        return _substitute(expr.child, expr.pmap.after(f))
    raise InputError(f"未知节点类型: {type(expr).__name__}")


def expand(expr: PshExpr) -> PshExpr:
    """把所有 Compose 节点代入多项式，得到不含 Compose 的等价表达式"""
    if isinstance(expr, Compose):
        return _substitute(expr.child, expr.pmap)
    if isinstance(expr, Scale):
        return Scale(expr.n, expr.c, expand(expr.child))
    if isinstance(expr, Sum):
        return Sum(expr.n, tuple(expand(c) for c in expr.terms))
    if isinstance(expr, Max):
        return Max(expr.n, tuple(expand(c) for c in expr.terms))
    return expr


def iter_polynomials(expr: PshExpr) -> Iterator[Polynomial]:
    """遍历展开后表达式中出现的全部多项式"""
    expr = expand(expr)
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, LogSumPow):
            for poly, _ in node.terms:
                yield poly
        stack.extend(node.children())


def is_constant(expr: PshExpr) -> bool:
    """表达式是否为常数函数"""
    return all(p.is_constant for p in iter_polynomials(expr))


def _atom_text(expr: PshExpr) -> str:
    if isinstance(expr, (LogSumPow, Max)):
        return to_text(expr)
    return f"({to_text(expr)})"


def to_text(expr: PshExpr) -> str:
    """
    输出 DSL 文本；Compose 以展开形式输出

    Args:
        expr: 表达式

    Returns:
        str: 可被 parse 读回的文本
    """
    if isinstance(expr, Compose):
        return to_text(expand(expr))
    if isinstance(expr, LogSumPow):
        inner = " + ".join(f"|{p.to_text()}|^{format_real(a)}" for p, a in expr.terms)
        return f"log({inner})"
    if isinstance(expr, Scale):
        child = expr.child
        if isinstance(child, Compose):
            child = expand(child)
        return f"{format_real(expr.c)}*{_atom_text(child)}"
    if isinstance(expr, Sum):
        if not expr.terms:
            return "0"
        parts = []
        for child in expr.terms:
            if isinstance(child, Compose):
                child = expand(child)
            parts.append(f"({to_text(child)})" if isinstance(child, Sum) else to_text(child))
        return " + ".join(parts)
    if isinstance(expr, Max):
        return "max(" + ", ".join(to_text(c) for c in expr.terms) + ")"
    raise InputError(f"未知节点类型: {type(expr).__name__}")
