"""
环面函数族的精确广义 Lelong 数

SumSquares 与 Monomial 在有理数上精确计算（fractions.Fraction），
TwoVarCusp 参数 a 可能是无理数，使用浮点数。
复合表达式（Sum/Max）只给出由性质推出的区间界。
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from lelong.errors import NonPositiveParameterError, UnsupportedFormError, WeightRangeError
from lelong.expr import (
    Compose,
    Max,
    Monomial,
    PshExpr,
    Scale,
    Sum,
    SumSquares,
    ToricForm,
    TwoVarCusp,
    classify_toric,
    expand,
)

Number = Union[Fraction, float]


def as_fraction(x: Union[int, float, str, Fraction]) -> Fraction:
    """
    转为有理数；浮点数按其十进制表示转换，0.05 得到 1/20

    Args:
        x: 数值

    Returns:
        Fraction: 有理数
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise WeightRangeError(f"数值必须有限: {x}")
        return Fraction(repr(x))
    return Fraction(str(x))


def exact_t_grid(lo: Union[str, float], hi: Union[str, float], step: Union[str, float]) -> List[Fraction]:
    """
    构造精确的 t 网格 lo, lo+step, ..., <= hi

    Args:
        lo: 起点
        hi: 终点（含）
        step: 步长

    Returns:
        List[Fraction]: 网格点
    """
    lo_q, hi_q, step_q = as_fraction(lo), as_fraction(hi), as_fraction(step)
    if step_q <= 0:
        raise NonPositiveParameterError(f"步长必须为正数: {step}")
    grid = []
    t = lo_q
    while t <= hi_q:
        grid.append(t)
        t += step_q
    return grid


def _is_exact(form: ToricForm) -> bool:
    return not isinstance(form.variant, TwoVarCusp)


def _scale(form: ToricForm) -> Number:
    return as_fraction(form.scale) if _is_exact(form) else float(form.scale)


def nu_exact(form: ToricForm, t: Union[int, float, str, Fraction]) -> Number:
    """
    环面族的闭式广义 Lelong 数 ν_{0,t}

    Args:
        form: 环面标准形
        t: 径向权重参数，0 <= t < n

    Returns:
        Fraction（SumSquares/Monomial）或 float（TwoVarCusp）

    Raises:
        WeightRangeError: t 不在 [0, n)
        UnsupportedFormError: TwoVarCusp 在 t ∉ {0, 1} 处没有闭式
    """
    n = form.n
    t_q = as_fraction(t)
    if not 0 <= t_q < n:
        raise WeightRangeError(f"t 必须满足 0 <= t < n={n}: {t}")
    variant = form.variant
    if isinstance(variant, SumSquares):
        return _scale(form) * max(Fraction(1, variant.k), 1 / (n - t_q))
    if isinstance(variant, Monomial):
        total = sum(variant.alpha)
        return _scale(form) * max(Fraction(total, variant.k), total / (n - t_q))
    a = float(variant.a)
    if t_q == 0:
        return _scale(form) * 2.0 / (1.0 + 1.0 / a)
    if t_q == 1:
        return _scale(form) * 2.0 * min(1.0, a)
    raise UnsupportedFormError(f"TwoVarCusp 在 t={t} 处没有闭式")


def classical_lelong(form: ToricForm) -> Number:
    """经典 Lelong 数 ν_{0,n-1}，即球面上确界对 log r 的斜率"""
    variant = form.variant
    if isinstance(variant, SumSquares):
        return _scale(form) * 1
    if isinstance(variant, Monomial):
        return _scale(form) * sum(variant.alpha)
    return _scale(form) * 2.0 * min(1.0, float(variant.a))


def relative_type_radial(form: ToricForm, t: Union[int, float, str, Fraction]) -> Number:
    """
    相对于 ψ = t·log|z| 的相对型 liminf φ/ψ

    Args:
        form: 环面标准形
        t: 正数

    Returns:
        经典 Lelong 数除以 t

    Raises:
        WeightRangeError: t <= 0
    """
    t_q = as_fraction(t)
    if t_q <= 0:
        raise WeightRangeError(f"相对型要求 t > 0: {t}")
    value = classical_lelong(form)
    if isinstance(value, Fraction):
        return value / t_q
    return value / float(t_q)


def property5_bound(nu0: Union[int, float, Fraction], sigma: Union[int, float, Fraction]) -> Number:
    """
    由积分指数与相对型给出的界 ν0 / (1 - ν0/σ)

    Args:
        nu0: 积分指数 ν_{a,0}
        sigma: 相对型 σ

    Returns:
        ν0 < σ 时为 ν0/(1-ν0/σ)；ν0 > σ 时为 0；相等时为 +inf
    """
    nu0_q, sigma_q = as_fraction(nu0), as_fraction(sigma)
    if nu0_q <= 0 or sigma_q <= 0:
        raise NonPositiveParameterError(f"nu0 与 sigma 必须为正数: {nu0}, {sigma}")
    if nu0_q == sigma_q:
        return math.inf
    if nu0_q > sigma_q:
        return Fraction(0)
    return nu0_q / (1 - nu0_q / sigma_q)


def _le(x: Number, y: Number) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x <= y
    return float(x) <= float(y) + 1e-12 * max(1.0, abs(float(y)))


def _eq(x: Number, y: Number) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return math.isclose(float(x), float(y), rel_tol=1e-12, abs_tol=1e-12)


def _num(x: Number) -> Any:
    return str(x) if isinstance(x, Fraction) else float(x)


@dataclass
class SkodaReport:
    """
    广义 Skoda 链检查结果

    Attributes:
        form: 形式描述
        rows: 每个 t 的各项数值
        violations: 违反的不等式描述（必须为空）
        sharp_left: ν_{0,n-1} = (n-t)ν_{0,t} 成立的 t
        sharp_right: (n-t)ν_{0,t} = n·ν_{0,0} 成立的 t
        skipped: 没有闭式而跳过的 t
    """
    form: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    sharp_left: List[Any] = field(default_factory=list)
    sharp_right: List[Any] = field(default_factory=list)
    skipped: List[Any] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "form": self.form,
            "ok": self.ok,
            "rows": self.rows,
            "violations": self.violations,
            "sharp_left": [_num(t) for t in self.sharp_left],
            "sharp_right": [_num(t) for t in self.sharp_right],
            "skipped": [_num(t) for t in self.skipped],
        }


def _values_on_grid(form: ToricForm, t_grid: Iterable, report_skipped: List) -> List:
    values = []
    for t in sorted(as_fraction(t) for t in t_grid):
        try:
            values.append((t, nu_exact(form, t)))
        except UnsupportedFormError:
            report_skipped.append(t)
    return values


def _convex_violations(points: Sequence, label: str, concave: bool = False) -> List[str]:
    """相邻三点的弦不等式检查（等距时即中点检查）"""
    found = []
    for (t0, v0), (t1, v1), (t2, v2) in zip(points, points[1:], points[2:]):
        span = t2 - t0
        if isinstance(v0, Fraction) and isinstance(v2, Fraction):
            chord = v0 * (t2 - t1) / span + v2 * (t1 - t0) / span
        else:
            w = float((t2 - t1) / span)
            chord = float(v0) * w + float(v2) * (1 - w)
        ok = _le(chord, v1) if concave else _le(v1, chord)
        if not ok:
            found.append(f"{label}: t={_num(t1)} 处 {'凹性' if concave else '凸性'}不成立")
    return found


def skoda_chain_check(form: ToricForm, t_grid: Iterable) -> SkodaReport:
    """
    检查 ν0,0 <= ν0,n-1 <= (n-t)ν0,t <= n·ν0,0，(n-t)ν 单调不增以及 ν 关于 t 的凸性

    Args:
        form: 环面标准形
        t_grid: t 的网格，包含于 [0, n)

    Returns:
        SkodaReport: 检查报告，violations 必须为空
    """
    n = form.n
    report = SkodaReport(form=form.describe())
    nu_00 = nu_exact(form, 0)
    nu_n1 = nu_exact(form, n - 1)
    points = _values_on_grid(form, t_grid, report.skipped)

    weighted_prev = None
    for t, nu_t in points:
        weighted = (n - t) * nu_t if isinstance(nu_t, Fraction) else float(n - t) * nu_t
        top = n * nu_00
        report.rows.append({
            "t": _num(t),
            "nu_t": _num(nu_t),
            "nu_00": _num(nu_00),
            "nu_0n1": _num(nu_n1),
            "weighted": _num(weighted),
            "n_nu_00": _num(top),
        })
        if not _le(nu_00, nu_n1):
            report.violations.append(f"t={_num(t)}: ν0,0 > ν0,n-1")
        if not _le(nu_n1, weighted):
            report.violations.append(f"t={_num(t)}: ν0,n-1 > (n-t)ν0,t")
        if not _le(weighted, top):
            report.violations.append(f"t={_num(t)}: (n-t)ν0,t > n·ν0,0")
        if _eq(nu_n1, weighted):
            report.sharp_left.append(t)
        if _eq(weighted, top):
            report.sharp_right.append(t)
        if weighted_prev is not None and not _le(weighted, weighted_prev):
            report.violations.append(f"t={_num(t)}: (n-t)ν0,t 不是单调不增")
        weighted_prev = weighted

    report.violations.extend(_convex_violations(points, "ν0,t"))
    return report


@dataclass
class ConvexityReport:
    """t -> ν 的凸性与 t -> 1/ν 的凹性检查结果"""
    form: str
    checked: int
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"form": self.form, "checked": self.checked, "ok": self.ok, "violations": self.violations}


def concavity_check(form: ToricForm, t_grid: Iterable) -> ConvexityReport:
    """
    在网格上做中点检查：ν 关于 t 凸，1/ν 关于 t 凹

    Args:
        form: 环面标准形
        t_grid: t 网格（建议用 exact_t_grid 构造）

    Returns:
        ConvexityReport: 检查报告
    """
    skipped: List = []
    points = _values_on_grid(form, t_grid, skipped)
    inverse = [(t, (1 / v) if isinstance(v, Fraction) else 1.0 / v) for t, v in points]
    violations = _convex_violations(points, "ν0,t")
    violations += _convex_violations(inverse, "1/ν0,t", concave=True)
    return ConvexityReport(form=form.describe(), checked=max(0, len(points) - 2), violations=violations)


def codimension_signal(form: ToricForm, t_grid: Iterable) -> Optional[Fraction]:
    """
    ν 离开其 t=0 平台的第一个网格点

    对 SumSquares(k, n) 该点是第一个大于 n-k 的网格点。

    Args:
        form: 环面标准形
        t_grid: t 网格

    Returns:
        Optional[Fraction]: 网格点，始终在平台上时返回 None
    """
    base = nu_exact(form, 0)
    for t, value in _values_on_grid(form, t_grid, []):
        if not _eq(value, base) and _le(base, value):
            return t
    return None


@dataclass(frozen=True)
class NuInterval:
    """广义 Lelong 数的区间界"""
    lo: float
    hi: float
    exact: bool = False

    def scaled(self, c: float) -> "NuInterval":
        return NuInterval(self.lo * c, self.hi * c, self.exact)

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack

    def to_dict(self) -> Dict[str, Any]:
        return {"lo": self.lo, "hi": self.hi, "exact": self.exact}


def _cusp_interval(form: ToricForm, t: Fraction) -> NuInterval:
    """由单调性与 Skoda 链给出尖点族在中间 t 的界"""
    n = form.n
    nu0 = float(nu_exact(form, 0))
    nu1 = float(nu_exact(form, n - 1))
    rest = float(n - t)
    lo = max(nu0, nu1 / rest)
    hi = n * nu0 / rest
    if t <= n - 1:
        hi = min(hi, nu1)
    else:
        lo = max(lo, nu1)
    return NuInterval(lo, hi, exact=False)


def interval_bounds(expr: PshExpr, t: Union[int, float, str, Fraction]) -> NuInterval:
    """
    ν_{0,t}(expr) 的区间界

    可识别的环面形式给出精确值；c·φ 按倍数缩放；和的下界取各项下界最大值、
    上界取各项上界之和；最大值的下界取各项下界最小值、上界取各项上界最小值。

    Args:
        expr: 表达式
        t: 径向权重参数

    Returns:
        NuInterval: 区间界
    """
    t_q = as_fraction(t)
    form = classify_toric(expr)
    if form is not None:
        if not 0 <= t_q < form.n:
            raise WeightRangeError(f"t 必须满足 0 <= t < n={form.n}: {t}")
        try:
            value = float(nu_exact(form, t_q))
            return NuInterval(value, value, exact=True)
        except UnsupportedFormError:
            return _cusp_interval(form, t_q)
    node = expr
    if isinstance(node, Compose):
        node = expand(node)
    if isinstance(node, Scale):
        return interval_bounds(node.child, t_q).scaled(node.c)
    if isinstance(node, Sum):
        if not node.terms:
            return NuInterval(0.0, 0.0, exact=True)
        parts = [interval_bounds(child, t_q) for child in node.terms]
        return NuInterval(max(p.lo for p in parts), sum(p.hi for p in parts), exact=False)
    if isinstance(node, Max):
        parts = [interval_bounds(child, t_q) for child in node.terms]
        return NuInterval(min(p.lo for p in parts), min(p.hi for p in parts), exact=False)
    return NuInterval(0.0, math.inf, exact=False)
