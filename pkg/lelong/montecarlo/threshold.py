"""
广义 Lelong 数的阈值估计

ν_{a,ψ}(φ) = inf{s > 0 : e^{-2φ/s - 2ψ(·-a)} 在 a 附近可积}。
样本云与 φ、ψ 的取值只计算一次，二分过程中对每个 s 复用。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from lelong.config import config
from lelong.errors import ArityMismatchError, InputError, UnsupportedFormError
from lelong.expr import PshExpr, classify_toric
from lelong.log import logger
from lelong.montecarlo.cloud import CloudValues, SampleCloud, build_cloud, evaluate_cloud
from lelong.montecarlo.profile import ConvergenceVerdict, integrability_verdict
from lelong.toric import nu_exact
from lelong.weights import WeightSpec, make_radial

Z95 = 1.96


@dataclass
class ThresholdEstimate:
    """
    阈值估计结果

    Attributes:
        nu_hat: 估计值（>= 0）
        ci: 95% 区间 (lo, hi)
        exponent_curve: 已探测的 (s, e(s), stderr)，按 s 升序
        bisection_trace: 按探测顺序记录的 s
        seed: 随机种子
        warnings: 警告
        verdicts: 每个探测点的判定摘要
    """
    nu_hat: float
    ci: Tuple[float, float]
    exponent_curve: List[Tuple[float, float, float]] = field(default_factory=list)
    bisection_trace: List[float] = field(default_factory=list)
    seed: int = 0
    warnings: List[str] = field(default_factory=list)
    verdicts: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.ci[1] - self.ci[0]

    @property
    def half_width(self) -> float:
        return max(self.nu_hat - self.ci[0], self.ci[1] - self.nu_hat)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nu_hat": self.nu_hat,
            "ci": list(self.ci),
            "exponent_curve": [list(row) for row in self.exponent_curve],
            "bisection_trace": self.bisection_trace,
            "seed": self.seed,
            "warnings": self.warnings,
            "verdicts": self.verdicts,
        }


class ThresholdOracle:
    """
    基于共享样本云的收敛判定器

    对同一 (φ, ψ, 样本云) 缓存每个 s 的判定结果。
    """

    def __init__(self, cloud: SampleCloud, values: CloudValues):
        self.cloud = cloud
        self.values = values
        self._cache: Dict[float, ConvergenceVerdict] = {}
        self.trace: List[float] = []

    def verdict(self, s: float) -> ConvergenceVerdict:
        s = float(s)
        if s not in self._cache:
            self._cache[s] = integrability_verdict(self.cloud, self.values.log_integrand(s), s)
        self.trace.append(s)
        return self._cache[s]

    def converges(self, s: float) -> bool:
        return self.verdict(s).converges

    def curve(self) -> List[Tuple[float, float, float]]:
        return [(s, v.exponent, v.stderr) for s, v in sorted(self._cache.items())]


def _ci_end(oracle: ThresholdOracle, inside: float, bound: float, level: float, tol: float) -> float:
    """
    从 inside 向 bound 倍增步长，找到判定间隔越过 level 的 s，再二分到 tol

    bound < inside 时寻找 margin <= level 的点（下端），否则寻找 margin >= level 的点（上端）。
    返回越过 level 的一侧；直到 bound 都没有越过时返回 bound。
    """
    downward = bound < inside

    def crossed(s: float) -> bool:
        margin = oracle.verdict(s).margin
        return margin <= level if downward else margin >= level

    if crossed(inside):
        return inside
    near, step = inside, tol
    while True:
        far = inside - step if downward else inside + step
        if (far <= bound) if downward else (far >= bound):
            far = bound
            if not crossed(far):
                return bound
            break
        if crossed(far):
            break
        near, step = far, 2.0 * step
    while abs(far - near) > tol:
        mid = 0.5 * (near + far)
        if crossed(mid):
            far = mid
        else:
            near = mid
    return far


def bisect_threshold(
    oracle: ThresholdOracle,
    bracket: Tuple[float, float],
    tol: float,
    seed: int = 0,
) -> ThresholdEstimate:
    """
    在 s 上二分，收敛性关于 s 单调

    Args:
        oracle: 收敛判定器
        bracket: (s_lo, s_hi)
        tol: 终止区间宽度
        seed: 记录用的种子

    Returns:
        ThresholdEstimate: 估计结果
    """
    s_lo, s_hi = float(bracket[0]), float(bracket[1])
    if not 0 < s_lo < s_hi:
        raise InputError(f"二分区间必须满足 0 < s_lo < s_hi: {bracket}")
    if not tol > 0:
        raise InputError(f"tol 必须为正数: {tol}")

    warnings: List[str] = []
    if oracle.converges(s_lo):
        warnings.append(f"threshold below s_lo: 在 s_lo={s_lo} 处已收敛")
        nu_hat, ci = 0.0, (0.0, s_lo)
    elif not oracle.converges(s_hi):
        warnings.append(f"threshold above s_hi: 在 s_hi={s_hi} 处仍发散")
        nu_hat, ci = s_hi, (s_hi, math.inf)
    else:
        lo, hi = s_lo, s_hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if oracle.converges(mid):
                hi = mid
            else:
                lo = mid
        nu_hat = 0.5 * (lo + hi)
        # 区间为判定间隔落在 ±1.96 个标准误之内的 s
        ci = (_ci_end(oracle, lo, s_lo, -Z95, tol), _ci_end(oracle, hi, s_hi, Z95, tol))

    for message in warnings:
        logger.warning(message)

    curve = oracle.curve()
    verdicts = [
        {"s": s, "converges": v.converges, "reason": v.reason, "margin": v.margin,
         "kappa": None if v.profile.tail is None else v.profile.tail.tail.kappa}
        for s, v in sorted(oracle._cache.items())
    ]
    return ThresholdEstimate(
        nu_hat=nu_hat,
        ci=ci,
        exponent_curve=curve,
        bisection_trace=list(oracle.trace),
        seed=seed,
        warnings=warnings,
        verdicts=verdicts,
    )


def _resolve_budget(bracket, tol):
    bracket = (config.BRACKET_LO, config.BRACKET_HI) if bracket is None else bracket
    tol = config.TOL if tol is None else tol
    return bracket, tol


def estimate_threshold(
    expr: PshExpr,
    w: WeightSpec,
    a: Optional[Sequence[complex]] = None,
    bracket: Optional[Tuple[float, float]] = None,
    tol: Optional[float] = None,
    seed: int = 0,
    k_min: Optional[int] = None,
    k_max: Optional[int] = None,
    n_samples: Optional[int] = None,
    batches: Optional[int] = None,
    workers: Optional[int] = None,
    cloud: Optional[SampleCloud] = None,
) -> ThresholdEstimate:
    """
    用二分法估计 ν_{a,ψ}(φ)

    Args:
        expr: φ
        w: ψ
        a: 中心，缺省为 w.center
        bracket: (s_lo, s_hi)，缺省 (0.05, 8)
        tol: 二分容差，缺省 0.02
        seed: 随机种子
        k_min, k_max, n_samples, batches, workers: 采样预算
        cloud: 预先构造的样本云（用于多个估计共享）

    Returns:
        ThresholdEstimate: 估计结果
    """
    if a is not None:
        w = w.recentered(a)
    if expr.n != w.n:
        raise ArityMismatchError(f"表达式维数 {expr.n} 与权函数维数 {w.n} 不一致")
    bracket, tol = _resolve_budget(bracket, tol)
    if cloud is None:
        cloud = build_cloud(expr.n, k_min, k_max, n_samples, seed, batches, workers=workers)

    logger.info(f"开始阈值估计: φ = {expr}, ψ = {w.describe()}, seed={seed}")
    oracle = ThresholdOracle(cloud, evaluate_cloud(cloud, expr, w))
    estimate = bisect_threshold(oracle, bracket, tol, seed)
    logger.info(f"阈值估计完成: ν ≈ {estimate.nu_hat:.4f}, ci = ({estimate.ci[0]:.4f}, {estimate.ci[1]:.4f})")
    return estimate


@dataclass
class ScanRow:
    """scan_t 的一行"""
    t: float
    nu_hat: float
    ci_lo: float
    ci_hi: float
    exact: Optional[float]
    flags: str

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "nu_hat": self.nu_hat, "ci_lo": self.ci_lo,
                "ci_hi": self.ci_hi, "exact": self.exact, "flags": self.flags}


def bracket_flags(estimate: ThresholdEstimate) -> str:
    """二分区间告警的简写，分号分隔"""
    flags = []
    for message in estimate.warnings:
        if message.startswith("threshold below"):
            flags.append("below_bracket")
        elif message.startswith("threshold above"):
            flags.append("above_bracket")
    return ";".join(flags)


def scan_t(
    expr: PshExpr,
    t_grid: Sequence[float],
    a: Optional[Sequence[complex]] = None,
    seed: int = 0,
    bracket: Optional[Tuple[float, float]] = None,
    tol: Optional[float] = None,
    k_min: Optional[int] = None,
    k_max: Optional[int] = None,
    n_samples: Optional[int] = None,
    batches: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[ScanRow]:
    """
    在 t 网格上估计 ν_{a,t}(φ)

    所有 t 共享同一个样本云；能识别为环面形式时 exact 列给出闭式值。

    Args:
        expr: φ
        t_grid: t 值
        a: 中心，缺省为原点
        seed: 随机种子
        bracket, tol, k_min, k_max, n_samples, batches, workers: 同 estimate_threshold

    Returns:
        List[ScanRow]: 每个 t 一行
    """
    a = (0j,) * expr.n if a is None else a
    cloud = build_cloud(expr.n, k_min, k_max, n_samples, seed, batches, workers=workers)
    form = classify_toric(expr) if all(abs(complex(c)) == 0 for c in a) else None
    rows = []
    for t in t_grid:
        w = make_radial(t, a)
        estimate = estimate_threshold(expr, w, bracket=bracket, tol=tol, seed=seed, cloud=cloud)
        exact = None
        if form is not None:
            try:
                exact = float(nu_exact(form, t))
            except UnsupportedFormError:
                exact = None
        rows.append(ScanRow(
            t=float(t),
            nu_hat=estimate.nu_hat,
            ci_lo=estimate.ci[0],
            ci_hi=estimate.ci[1],
            exact=exact,
            flags=bracket_flags(estimate),
        ))
    return rows
