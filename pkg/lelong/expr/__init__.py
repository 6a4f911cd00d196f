"""
表达式模块

提供多重次调和表达式的表示、解析、求值与环面标准形识别：
- polynomial: 稀疏多项式与多项式映射
- nodes: 语法树节点与求值、复合、展开、打印
- parser: DSL 解析器
- toric_forms: 环面标准形识别
"""

from lelong.expr.polynomial import PolyMap, Polynomial, linear_map, monomial_power_map
from lelong.expr.nodes import (
    Compose,
    LogSumPow,
    Max,
    PshExpr,
    Scale,
    Sum,
    compose,
    evaluate,
    evaluate_many,
    expand,
    is_constant,
    iter_polynomials,
    to_text,
    zero,
)
from lelong.expr.parser import parse, tokenize
from lelong.expr.toric_forms import (
    Monomial,
    SumSquares,
    ToricForm,
    TwoVarCusp,
    classify_toric,
)

__all__ = [
    "Polynomial",
    "PolyMap",
    "linear_map",
    "monomial_power_map",
    "PshExpr",
    "LogSumPow",
    "Scale",
    "Sum",
    "Max",
    "Compose",
    "compose",
    "evaluate",
    "evaluate_many",
    "expand",
    "is_constant",
    "iter_polynomials",
    "to_text",
    "zero",
    "parse",
    "tokenize",
    "ToricForm",
    "SumSquares",
    "Monomial",
    "TwoVarCusp",
    "classify_toric",
]
