"""
环面标准形识别

三类具有闭式广义 Lelong 数的函数族：
- SumSquares(k, n):  ½log(|z_1|² + ... + |z_k|²)
- Monomial(α, n):    log|z_1^{α_1} ... z_k^{α_k}|
- TwoVarCusp(a):     log(|z_1|² + |z_2|^{2a})，n = 2

标准形采用 ½log 约定，其他倍数由 scale 表示。
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from lelong.errors import InputError
from lelong.expr.nodes import LogSumPow, PshExpr, Scale, Sum, expand
from lelong.expr.polynomial import Polynomial


@dataclass(frozen=True)
class SumSquares:
    """½log(|z_1|² + ... + |z_k|²) in C^n"""
    k: int
    n: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise InputError(f"SumSquares 要求 1 <= k <= n: k={self.k}, n={self.n}")


@dataclass(frozen=True)
class Monomial:
    """log|z^α|，α 为 k 个正整数"""
    alpha: Tuple[int, ...]
    n: int

    def __post_init__(self):
        if not 1 <= len(self.alpha) <= self.n:
            raise InputError(f"Monomial 要求 1 <= k <= n: k={len(self.alpha)}, n={self.n}")
        if any(int(a) != a or a < 1 for a in self.alpha):
            raise InputError(f"Monomial 指数必须为正整数: {self.alpha}")

    @property
    def k(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class TwoVarCusp:
    """log(|z_1|² + |z_2|^{2a})，n = 2"""
    a: float
    n: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise InputError(f"TwoVarCusp 要求 a > 0: {self.a}")
        if self.n != 2:
            raise InputError("TwoVarCusp 只定义在 n = 2")

    @property
    def k(self) -> int:
        return 2


Variant = Union[SumSquares, Monomial, TwoVarCusp]


@dataclass(frozen=True)
class ToricForm:
    """
    环面标准形

    Attributes:
        variant: 函数族及其参数
        scale: 正倍数
        variables: 参与的变量下标（从 0 开始），缺省为前 k 个变量；
            TwoVarCusp 中第一个为平方项变量，第二个为尖点变量
    """
    variant: Variant
    scale: float = 1.0
    variables: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise InputError(f"scale 必须为正数: {self.scale}")
        if not self.variables:
            object.__setattr__(self, "variables", tuple(range(self.variant.k)))
        if len(self.variables) != self.variant.k or len(set(self.variables)) != len(self.variables):
            raise InputError(f"变量下标与形式不匹配: {self.variables}")
        if any(not 0 <= v < self.n for v in self.variables):
            raise InputError(f"变量下标超出维数: {self.variables}")

    @property
    def n(self) -> int:
        return self.variant.n

    @property
    def k(self) -> int:
        return self.variant.k

    def with_scale(self, c: float) -> "ToricForm":
        """返回 c 倍后的形式"""
        return ToricForm(self.variant, self.scale * c, self.variables)

    def to_expr(self) -> PshExpr:
        """实现为表达式"""
        n = self.n
        z = [Polynomial.variable(n, v) for v in self.variables]
        variant = self.variant
        if isinstance(variant, SumSquares):
            core = LogSumPow(n, tuple((p, 2.0) for p in z))
            factor = self.scale * 0.5
        elif isinstance(variant, Monomial):
            exp = [0] * n
            for v, a in zip(self.variables, variant.alpha):
                exp[v] = int(a)
            core = LogSumPow(n, ((Polynomial.monomial(n, exp), 1.0),))
            factor = self.scale
        else:
            core = LogSumPow(n, ((z[0], 2.0), (z[1], 2.0 * variant.a)))
            factor = self.scale
        if factor == 1.0:
            return core
        return Scale(n, factor, core)

    def describe(self) -> str:
        variant = self.variant
        if isinstance(variant, SumSquares):
            body = f"SumSquares(k={variant.k}, n={variant.n})"
        elif isinstance(variant, Monomial):
            body = f"Monomial(alpha={tuple(variant.alpha)}, n={variant.n})"
        else:
            body = f"TwoVarCusp(a={variant.a})"
        return f"{body} x {self.scale}"


def _close(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=1e-12, abs_tol=0.0)


def classify_toric(expr: PshExpr) -> Optional[ToricForm]:
    """
    识别三类环面标准形（允许倍数折叠与变量重排）

    Args:
        expr: 表达式

    Returns:
        Optional[ToricForm]: 识别出的形式，不属于任何一类时返回 None
    """
    node = expand(expr)
    c = 1.0
    while True:
        if isinstance(node, Scale):
            c *= node.c
            node = node.child
        elif isinstance(node, Sum) and len(node.terms) == 1:
            node = node.terms[0]
        else:
            break
    if not isinstance(node, LogSumPow):
        return None

    n = node.n
    items = []
    for poly, beta in node.terms:
        single = poly.single_term()
        if single is None:
            return None
        exp, coeff = single
        if not _close(abs(coeff), 1.0):
            return None
        used = [j for j, e in enumerate(exp) if e]
        if not used:
            return None
        items.append((exp, used, beta))

    if len(items) == 1:
        exp, used, beta = items[0]
        alpha = tuple(exp[j] for j in used)
        return ToricForm(Monomial(alpha, n), scale=c * beta, variables=tuple(used))

    if any(len(used) != 1 for _, used, _ in items):
        return None
    variables = [used[0] for _, used, _ in items]
    if len(set(variables)) != len(variables):
        return None
    effective = [exp[v] * beta for (exp, _, beta), v in zip(items, variables)]

    if all(_close(e, 2.0) for e in effective):
        return ToricForm(SumSquares(len(variables), n), scale=2.0 * c, variables=tuple(variables))

    if len(items) == 2 and n == 2:
        if _close(effective[0], 2.0):
            return ToricForm(TwoVarCusp(effective[1] / 2.0), scale=c, variables=(variables[0], variables[1]))
        if _close(effective[1], 2.0):
            return ToricForm(TwoVarCusp(effective[0] / 2.0), scale=c, variables=(variables[1], variables[0]))
    return None
