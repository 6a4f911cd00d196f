"""
Kiselman 方向 Lelong 数

ν_w(φ, a) = lim_{r→0} sup{φ(z) : |z_i - w_i| = r^{a_i}} / log r

壳上确界由低差异（Halton）环面样本的最大值估计，极限由最小 6 个壳上的斜率拟合给出。
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from lelong.config import config
from lelong.errors import ArityMismatchError, InputError
from lelong.estimators import SE_FLOOR, fit_slope
from lelong.expr import (
    LogSumPow,
    Polynomial,
    PshExpr,
    Scale,
    Sum,
    compose,
    evaluate_many,
    linear_map,
    monomial_power_map,
)
from lelong.geometry import UnitaryMatrix
from lelong.log import logger
from lelong.montecarlo import cloud_for_budget, integrability_verdict
from lelong.sampling import TAG_TORUS, substream

SHELL_SAMPLES = 4096
FIT_SHELLS = 6
DEFAULT_SHELLS = 12
RESCALE_SLACK = 0.03
MONOTONE_TOL = 1e-2


@dataclass(frozen=True)
class DirectionSpec:
    """
    方向 (a_1, ..., a_n)

    Attributes:
        a_dirs: 非负实数，至少一个为正
        rational: 可选 (p, q)，a_i = p_i / q
    """
    a_dirs: Tuple[float, ...]
    rational: Optional[Tuple[Tuple[int, ...], int]] = None

    def __post_init__(self):
        if not self.a_dirs:
            raise InputError("方向不能为空")
        if any(not (math.isfinite(a) and a >= 0) for a in self.a_dirs):
            raise InputError(f"方向分量必须是非负实数: {self.a_dirs}")
        if not any(a > 0 for a in self.a_dirs):
            raise InputError("方向至少需要一个正分量")
        if self.rational is not None:
            p, q = self.rational
            if len(p) != len(self.a_dirs):
                raise ArityMismatchError(f"p 的长度 {len(p)} 与方向维数 {len(self.a_dirs)} 不一致")
            for a, pi in zip(self.a_dirs, p):
                if abs(a - pi / q) > 1e-12:
                    raise InputError(f"有理形式与方向不一致: {a} != {pi}/{q}")

    @classmethod
    def from_rational(cls, p: Sequence[int], q: int) -> "DirectionSpec":
        """a_i = p_i / q，p_i 与 q 为正整数"""
        if int(q) != q or q < 1:
            raise InputError(f"q 必须是正整数: {q}")
        if any(int(pi) != pi or pi < 1 for pi in p):
            raise InputError(f"p 必须是正整数: {list(p)}")
        p = tuple(int(pi) for pi in p)
        return cls(tuple(pi / int(q) for pi in p), (p, int(q)))

    @classmethod
    def parse(cls, text: str) -> "DirectionSpec":
        """逗号分隔的方向，如 "1,1/2"；全为有理数时记录有理形式"""
        parts = [s.strip() for s in text.split(",") if s.strip()]
        try:
            fracs = [Fraction(s) for s in parts]
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"无法解析方向: {text}") from e
        q = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
        p = tuple(int(f * q) for f in fracs)
        if all(pi >= 1 for pi in p):
            return cls(tuple(float(f) for f in fracs), (p, q))
        return cls(tuple(float(f) for f in fracs))

    @property
    def n(self) -> int:
        return len(self.a_dirs)

    @property
    def is_rational(self) -> bool:
        return self.rational is not None

    def scaled(self, c: float) -> "DirectionSpec":
        if not c > 0:
            raise InputError(f"倍数必须为正数: {c}")
        return DirectionSpec(tuple(c * a for a in self.a_dirs))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "a_dirs": list(self.a_dirs),
            "p": None if self.rational is None else list(self.rational[0]),
            "q": None if self.rational is None else self.rational[1],
        }


@dataclass
class ShellRow:
    """一个壳上的估计"""
    r: float
    shell_sup: float
    quotient: float

    def to_dict(self) -> Dict[str, Any]:
        return {"r": self.r, "shell_sup": self.shell_sup, "quotient": self.quotient}


@dataclass
class DirectionalEstimate:
    """
    方向 Lelong 数估计

    Attributes:
        nu: 最小若干壳上 S_j 对 log r_j 的斜率
        stderr: 斜率标准误
        shells: 壳表（r, shell_sup, quotient）
        monotone_violations: 商 S_j/log r_j 随 r 减小而增大的壳
        warnings: 警告
    """
    nu: float
    stderr: float
    dirs: DirectionSpec
    shells: List[ShellRow] = field(default_factory=list)
    monotone_violations: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nu": self.nu,
            "stderr": self.stderr,
            "dirs": self.dirs.to_dict(),
            "shells": [s.to_dict() for s in self.shells],
            "monotone_violations": self.monotone_violations,
            "warnings": self.warnings,
        }


def default_radii(count: int = DEFAULT_SHELLS) -> List[float]:
    """r_j = 2^{-j-1}，j = 1..count"""
    return [2.0 ** (-j - 1) for j in range(1, count + 1)]


def _torus_angles(seed: int, index: int, n: int, size: int) -> np.ndarray:
    sampler = qmc.Halton(d=n, scramble=True, seed=substream(seed, TAG_TORUS, index))
    return 2.0 * math.pi * sampler.random(size)


def _shell_sup(expr: PshExpr, w: np.ndarray, dirs: DirectionSpec, r: float, angles: np.ndarray) -> float:
    moduli = np.array([r ** a for a in dirs.a_dirs])
    Z = w + moduli * np.exp(1j * angles)
    values = evaluate_many(expr, Z)
    finite = values[np.isfinite(values)]
    return float(np.max(finite)) if finite.size else -math.inf


def directional_nu(
    expr: PshExpr,
    dirs: DirectionSpec,
    w_point: Optional[Sequence[complex]] = None,
    radii: Optional[Sequence[float]] = None,
    samples_per_shell: int = SHELL_SAMPLES,
    seed: int = 0,
    workers: Optional[int] = None,
) -> DirectionalEstimate:
    """
    方向 Lelong 数

    Args:
        expr: φ
        dirs: 方向
        w_point: 点 w，缺省为原点
        radii: 递减的半径表（>= 6 个）
        samples_per_shell: 每个环面上的样本数
        seed: 随机种子
        workers: 并行线程数

    Returns:
        DirectionalEstimate: 估计与壳表
    """
    n = expr.n
    if dirs.n != n:
        raise ArityMismatchError(f"方向维数 {dirs.n} 与表达式维数 {n} 不一致")
    w = np.zeros(n, dtype=complex) if w_point is None else np.asarray([complex(c) for c in w_point])
    if w.shape != (n,):
        raise ArityMismatchError(f"点的维数 {w.shape[0]} 与表达式维数 {n} 不一致")
    radii = default_radii() if radii is None else [float(r) for r in radii]
    if len(radii) < FIT_SHELLS:
        raise InputError(f"至少需要 {FIT_SHELLS} 个半径: {len(radii)}")
    if any(not 0 < r < 1 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise InputError("半径必须在 (0, 1) 内且严格递减")
    workers = config.WORKERS if workers is None else int(workers)

    def task(j: int) -> float:
        return _shell_sup(expr, w, dirs, radii[j], _torus_angles(seed, j, n, samples_per_shell))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sups = list(pool.map(task, range(len(radii))))
    else:
        sups = [task(j) for j in range(len(radii))]

    estimate = DirectionalEstimate(nu=math.nan, stderr=math.nan, dirs=dirs)
    for r, s in zip(radii, sups):
        if not math.isfinite(s):
            message = f"r={r:.3e}: 壳上全部样本为 -∞，跳过"
            estimate.warnings.append(message)
            logger.warning(message)
            continue
        estimate.shells.append(ShellRow(r, s, s / math.log(r)))

    used = estimate.shells[-FIT_SHELLS:]
    if len(used) < 4:
        raise InputError("有效的壳不足，无法拟合斜率")
    fit = fit_slope([math.log(row.r) for row in used], [row.shell_sup for row in used])
    estimate.nu = fit.slope
    estimate.stderr = max(fit.stderr, SE_FLOOR)

    for prev, cur in zip(estimate.shells, estimate.shells[1:]):
        if cur.quotient > prev.quotient + MONOTONE_TOL * max(1.0, abs(prev.quotient)):
            estimate.monotone_violations.append(cur.r)
    logger.debug(f"方向 Lelong 数 (a={dirs.a_dirs}): {estimate.nu:.4f} ± {estimate.stderr:.4f}")
    return estimate


@dataclass
class IdentityReport:
    """两侧数值比较"""
    name: str
    lhs: float
    rhs: float
    tolerance: float
    values: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return abs(self.lhs - self.rhs) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "tolerance": self.tolerance,
                "passed": self.passed, "values": self.values}


def rescale_identity_check(
    expr: PshExpr,
    p: Sequence[int],
    q: int,
    seed: int = 0,
    w_point: Optional[Sequence[complex]] = None,
    **kwargs,
) -> IdentityReport:
    """
    ν_w(φ, p/q) = q^{-1}·ν_w(φ(w_1 + (z_1-w_1)^{p_1}, ...), (1, ..., 1))

    Args:
        expr: φ
        p: 正整数 p_i
        q: 正整数
        seed: 随机种子
        w_point: 点 w
        **kwargs: 传给 directional_nu

    Returns:
        IdentityReport: 容差为两侧标准误的三倍加 0.03
    """
    dirs = DirectionSpec.from_rational(p, q)
    lhs = directional_nu(expr, dirs, w_point, seed=seed, **kwargs)
    pulled = compose(expr, monomial_power_map(dirs.rational[0], w_point))
    rhs = directional_nu(pulled, DirectionSpec((1.0,) * expr.n), w_point, seed=seed, **kwargs)
    tolerance = 3.0 * (lhs.stderr + rhs.stderr / q) + RESCALE_SLACK
    report = IdentityReport("rescale", lhs.nu, rhs.nu / q, tolerance, {"p": list(dirs.rational[0]), "q": q})
    logger.info(f"重标度恒等式: {report.lhs:.4f} vs {report.rhs:.4f} (容差 {tolerance:.4f})")
    return report


def homogeneity_check(
    expr: PshExpr,
    dirs: DirectionSpec,
    c: float,
    seed: int = 0,
    w_point: Optional[Sequence[complex]] = None,
    **kwargs,
) -> IdentityReport:
    """ν_w(φ, c·a) = c·ν_w(φ, a)"""
    base = directional_nu(expr, dirs, w_point, seed=seed, **kwargs)
    scaled = directional_nu(expr, dirs.scaled(c), w_point, seed=seed, **kwargs)
    tolerance = 3.0 * (c * base.stderr + scaled.stderr) + RESCALE_SLACK * max(1.0, c)
    return IdentityReport("homogeneity", scaled.nu, c * base.nu, tolerance, {"c": c})


@dataclass
class DirectionalIntegralReport:
    """
    方向数与加权积分判定的比较

    Attributes:
        nu: φ∘U 的方向 Lelong 数
        converges: 积分判定
        axes_integrable: φ∘U 在经过 w 的每条坐标轴上不恒为 -∞
    """
    nu: float
    nu_stderr: float
    converges: bool
    exponent: float
    exponent_stderr: float
    axes_integrable: bool
    rotated: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return (self.nu < 1.0) == self.converges

    @property
    def non_generic(self) -> bool:
        return not self.axes_integrable

    @property
    def passed(self) -> bool:
        return self.agree or self.non_generic

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nu": self.nu,
            "nu_stderr": self.nu_stderr,
            "converges": self.converges,
            "exponent": self.exponent,
            "exponent_stderr": self.exponent_stderr,
            "axes_integrable": self.axes_integrable,
            "rotated": self.rotated,
            "agree": self.agree,
            "non_generic": self.non_generic,
            "warnings": self.warnings,
        }


def _axis_weight(n: int, p: Sequence[int]) -> Optional[PshExpr]:
    """Σ (1 - 1/(n p_i))·log|z_i|"""
    terms = []
    for i, pi in enumerate(p):
        c = 1.0 - 1.0 / (n * pi)
        if c > 0:
            terms.append(Scale(n, c, LogSumPow(n, ((Polynomial.variable(n, i), 1.0),))))
    return Sum(n, tuple(terms)) if terms else None


def _axes_hypothesis(expr: PshExpr, w: np.ndarray, seed: int) -> bool:
    """φ 在 w + ζ·e_i 上取若干点检查是否恒为 -∞"""
    n = expr.n
    rng = substream(seed, TAG_TORUS, 10_000)
    zeta = 0.5 * np.exp(2j * math.pi * rng.random(8))
    for i in range(n):
        Z = np.tile(w, (zeta.size, 1))
        Z[:, i] = Z[:, i] + zeta
        if not np.any(np.isfinite(evaluate_many(expr, Z))):
            return False
    return True


def directional_integral_check(
    expr: PshExpr,
    dirs: DirectionSpec,
    rotation: Optional[UnitaryMatrix] = None,
    seed: int = 0,
    w_point: Optional[Sequence[complex]] = None,
    **budget,
) -> DirectionalIntegralReport:
    """
    比较 ν_w(φ∘U, p/q) < 1 与 ∫ e^{-2φ∘U/q - 2Σ(1 - 1/(n p_i))·log|z_i - w_i|} < ∞

    Args:
        expr: φ
        dirs: 有理方向
        rotation: 酉矩阵 U，None 表示不旋转
        seed: 随机种子
        w_point: 点 w
        **budget: 采样预算（k_min, k_max, n_samples, batches, workers）

    Returns:
        DirectionalIntegralReport: 两个布尔值与坐标轴假设

    Raises:
        InputError: 方向不是有理数
    """
    if not dirs.is_rational:
        raise InputError("积分判定只支持有理方向 a_i = p_i/q")
    n = expr.n
    if dirs.n != n:
        raise ArityMismatchError(f"方向维数 {dirs.n} 与表达式维数 {n} 不一致")
    w = np.zeros(n, dtype=complex) if w_point is None else np.asarray([complex(c) for c in w_point])
    p, q = dirs.rational

    rotated = expr
    if rotation is not None:
        if rotation.n != n:
            raise ArityMismatchError(f"旋转维数 {rotation.n} 与表达式维数 {n} 不一致")
        # φ∘U 以 w 为不动点：z ↦ w + U(z - w)
        rotated = compose(expr, linear_map(rotation.entries, w - rotation.entries @ w))

    directional = directional_nu(rotated, dirs, w, seed=seed, workers=budget.get("workers"))

    cloud = cloud_for_budget(n, seed, budget)
    shape = cloud.points.shape[:2]
    flat = cloud.flat_points()
    with np.errstate(invalid="ignore"):
        log_f = -2.0 * evaluate_many(rotated, flat + w) / q
        axis = _axis_weight(n, p)
        if axis is not None:
            log_f = log_f - 2.0 * evaluate_many(axis, flat)
    verdict = integrability_verdict(cloud, log_f.reshape(shape))

    report = DirectionalIntegralReport(
        nu=directional.nu,
        nu_stderr=directional.stderr,
        converges=verdict.converges,
        exponent=verdict.exponent,
        exponent_stderr=verdict.stderr,
        axes_integrable=_axes_hypothesis(rotated, w, seed),
        rotated=rotation is not None,
        warnings=list(directional.warnings),
    )
    if report.non_generic:
        report.warnings.append("φ∘U 在某条坐标轴上恒为 -∞，属于非一般情形")
    if not report.agree:
        logger.warning(f"方向数 {report.nu:.4f} 与积分判定 (收敛={report.converges}) 不一致")
    return report
