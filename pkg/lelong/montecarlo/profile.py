"""
环带质量剖面与收敛判定

质量 m_k = vol(A(k)) · 中位数均值(e^{L})，在对数域累积。
收敛判定结合两个信号：
- 环带质量的几何衰减指数 e（−log2 m_k 对 k 的加权斜率，带 log2 k 修正项）；
- 环带内部的尾指数 κ（Hill 估计），κ <= 1 说明单个环带上的积分已经发散。
若重尾完全来自单个坐标轴方向且该方向深层贡献可求和，则重尾被"轴解释"。
每个信号折算成以标准误为单位的间隔，判定取两者中较小的一个。
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from lelong.errors import InputError
from lelong.estimators import (
    SE_FLOOR,
    TailIndex,
    fit_decay,
    fit_slope,
    hill_tail_index,
    log_median_of_means,
    z_margin,
)
from lelong.expr import PshExpr
from lelong.log import logger
from lelong.montecarlo.cloud import SampleCloud, build_cloud, evaluate_cloud
from lelong.sampling import LN2, pure_axis_weight
from lelong.weights import WeightSpec

CLAMP = 700.0
MIN_ANNULI = 6
# 不少于这么多环带时衰减拟合带 log2 k 项
LOG_CORRECTION_ANNULI = 8
SINGLE_AXIS_RATIO = 0.1
SINGLE_AXIS_SHARE = 0.9
AXIS_HOST_SHARE = 0.05
# 深层取最深的 1/4 层
DEEP_FRACTION = 4
LEVEL_BIN = 4
# 一个标准误以内的平局计为发散
TIE = 1.0


def _deep_annuli(cloud: SampleCloud) -> np.ndarray:
    """靠近中心的一半环带（k 较大者），重尾诊断只在这些环带上进行"""
    mask = np.zeros(len(cloud.ks), dtype=bool)
    mask[len(cloud.ks) // 2:] = True
    return mask[:, None]


@dataclass
class AxisDepth:
    """轴 j 深层贡献的衰减指数 d_j（−log2 C_i 对层 i 的斜率）"""
    axis: int
    exponent: float
    stderr: float
    tail_share: float

    @property
    def margin(self) -> float:
        return z_margin(self.exponent, self.stderr)

    @property
    def summable(self) -> bool:
        return self.margin > TIE


@dataclass
class TailDiagnostics:
    """
    环带内部的重尾诊断

    Attributes:
        tail: 均匀分量上的 Hill 尾指数
        single_axis_share: 尾部样本中单轴样本的比例
        axes: 承载尾部的坐标轴及其深层指数
    """
    tail: TailIndex
    single_axis_share: float = 0.0
    axes: List[AxisDepth] = field(default_factory=list)

    @property
    def heavy(self) -> bool:
        return self.tail.heavy

    @property
    def axis_margin(self) -> float:
        """承载尾部的各轴中最小的深层间隔；尾部不是单轴时为 −inf"""
        if not self.axes or self.single_axis_share < SINGLE_AXIS_SHARE:
            return -math.inf
        return min(a.margin for a in self.axes)

    @property
    def margin(self) -> float:
        """环带内部可积的间隔：尾指数与轴解释中较强的一个"""
        return max(self.tail.margin, self.axis_margin)

    @property
    def explained(self) -> bool:
        return self.heavy and self.axis_margin > TIE

    @property
    def diverges(self) -> bool:
        return self.margin <= TIE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tail": self.tail.to_dict(),
            "single_axis_share": self.single_axis_share,
            "axes": [asdict(a) for a in self.axes],
            "explained": self.explained,
            "margin": self.margin,
        }


@dataclass
class AnnulusProfile:
    """
    环带质量剖面

    Attributes:
        s: 探测的尺度 s
        seed: 随机种子
        n: 复维数
        k_range: (k_min, k_max)
        ks: 环带编号
        log2_masses: log2 m_k
        log2_stderr: log2 m_k 的标准误
        clipped: 非有限或超出 ±700 的对数样本数
        samples_per_annulus: 每个环带的样本数
        tail: 环带内部重尾诊断
    """
    s: Optional[float]
    seed: int
    n: int
    k_range: Tuple[int, int]
    ks: List[int]
    log2_masses: List[float]
    log2_stderr: List[float]
    clipped: int = 0
    samples_per_annulus: int = 0
    tail: Optional[TailDiagnostics] = None

    @property
    def masses(self) -> List[float]:
        """线性尺度的质量（指数部分截断到 ±700）"""
        return [math.exp(max(-CLAMP, min(CLAMP, x * LN2))) for x in self.log2_masses]

    @property
    def stderr(self) -> List[float]:
        return [m * LN2 * se for m, se in zip(self.masses, self.log2_stderr)]

    @property
    def tail_index(self) -> Optional[TailIndex]:
        return None if self.tail is None else self.tail.tail

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "seed": self.seed,
            "n": self.n,
            "k_range": list(self.k_range),
            "ks": self.ks,
            "log2_masses": self.log2_masses,
            "log2_stderr": self.log2_stderr,
            "masses": self.masses,
            "stderr": self.stderr,
            "clipped": self.clipped,
            "samples_per_annulus": self.samples_per_annulus,
            "tail": None if self.tail is None else self.tail.to_dict(),
        }


def _sanitize(cloud: SampleCloud, weighted: np.ndarray) -> Tuple[np.ndarray, int]:
    """
    替换非有限的对数样本，返回新数组与非有限或超出 ±700 的样本数

    有限值原样保留，质量在对数域累积不会溢出；φ = −∞ 的命中取为现有最大值与 700 中的较大者。
    """
    has_weight = np.isfinite(cloud.log_weight)
    finite = np.isfinite(weighted)
    clipped = int(np.sum((~finite | (np.abs(weighted) > CLAMP)) & has_weight))
    top, bottom = CLAMP, -CLAMP
    if np.any(finite):
        top = max(CLAMP, float(np.max(weighted[finite])))
        bottom = min(-CLAMP, float(np.min(weighted[finite])))
    safe = np.where(has_weight, weighted, bottom)
    return np.nan_to_num(safe, nan=top, posinf=top, neginf=bottom), clipped


def _radial_trend(cloud: SampleCloud, log_f: np.ndarray) -> np.ndarray:
    """
    每个环带上均匀分量的 log f 对 log|z| 的线性趋势，(K, N)

    扣除趋势后的残差只随方向变化，不同半径的样本可以合并做尾部诊断。
    """
    log_r = np.log(np.linalg.norm(cloud.points, axis=2))
    uniform = cloud.uniform_mask & np.isfinite(log_f)
    trend = np.zeros(log_f.shape)
    for i in range(len(cloud.ks)):
        x, y = log_r[i][uniform[i]], log_f[i][uniform[i]]
        if x.size >= 3 and np.ptp(x) > 0:
            slope, intercept = np.polyfit(x, y, 1)
            trend[i] = intercept + slope * log_r[i]
        elif y.size:
            trend[i] = np.median(y)
    return trend


def _axis_depth(cloud: SampleCloud, normalized: np.ndarray, axis: int, tail_share: float) -> AxisDepth:
    """
    轴 j 最深 1/4 层的贡献衰减指数

    使用纯轴提议权重 (n-1)(1-u)^{n-2}·u·T·ln2，把各环带归一化后的贡献合并，
    按每 4 层分箱后拟合 −log2 C 对层号的斜率。
    """
    n, depth = cloud.n, cloud.depth
    mask = (cloud.component == axis) & np.isfinite(normalized) & _deep_annuli(cloud)
    u = cloud.axis_moduli()[..., axis]
    levels = cloud.level
    total = max(int(np.sum(cloud.component == axis)), 1)

    centers, values = [], []
    for start in range(depth - depth // DEEP_FRACTION, depth, LEVEL_BIN):
        in_bin = mask & (levels >= start) & (levels < start + LEVEL_BIN)
        if not np.any(in_bin):
            continue
        with np.errstate(divide="ignore"):
            log_pure = np.log(pure_axis_weight(u[in_bin], n, depth))
        log_c = logsumexp(normalized[in_bin] + log_pure) - math.log(total)
        centers.append(start + LEVEL_BIN / 2.0)
        values.append(-log_c / LN2)
    if len(centers) < 4 or not np.all(np.isfinite(values)):
        return AxisDepth(axis, math.nan, math.inf, tail_share)
    fit = fit_slope(centers, values)
    return AxisDepth(axis, fit.slope, fit.stderr, tail_share)


def tail_diagnostics(cloud: SampleCloud, log_f: np.ndarray) -> TailDiagnostics:
    """
    环带内部重尾诊断

    在靠近中心的一半环带上，对均匀分量扣除各环带的径向趋势后合并，取顶部 3%（至少 20 个）做 Hill 估计；
    再检查尾部样本是否集中在单个坐标轴附近（最小 u_j 不超过次小值的 0.1 倍），
    若是则对承载尾部的轴计算深层指数。

    Args:
        cloud: 样本云
        log_f: (K, N) 被积函数的对数（不含重要性权重）

    Returns:
        TailDiagnostics: 诊断结果
    """
    normalized = log_f - _radial_trend(cloud, log_f)
    # φ = −∞ 的命中视为极端值
    normalized = np.where(np.isposinf(normalized), CLAMP, normalized)

    uniform = cloud.uniform_mask & np.isfinite(normalized) & _deep_annuli(cloud)
    pooled = normalized[uniform]
    tail = hill_tail_index(pooled)
    diagnostics = TailDiagnostics(tail=tail)
    if cloud.n < 2:
        return diagnostics

    # 尾部样本的单轴性
    order = np.argsort(pooled)[::-1][:tail.tail_size]
    moduli = cloud.axis_moduli()[uniform][order]
    sorted_u = np.sort(moduli, axis=1)
    single = sorted_u[:, 0] <= SINGLE_AXIS_RATIO * sorted_u[:, 1]
    hosts = np.argmin(moduli, axis=1)
    diagnostics.single_axis_share = float(np.mean(single))
    if diagnostics.single_axis_share < SINGLE_AXIS_SHARE:
        return diagnostics

    for axis in range(cloud.n):
        share = float(np.mean(single & (hosts == axis)))
        if share >= AXIS_HOST_SHARE:
            diagnostics.axes.append(_axis_depth(cloud, normalized, axis, share))
    return diagnostics


def profile_from_log_integrand(
    cloud: SampleCloud,
    log_f: np.ndarray,
    s: Optional[float] = None,
    with_tail: bool = True,
) -> AnnulusProfile:
    """
    由被积函数对数构造环带质量剖面

    Args:
        cloud: 样本云
        log_f: (K, N) 被积函数的对数（不含重要性权重）
        s: 记录在剖面中的尺度
        with_tail: 是否计算重尾诊断

    Returns:
        AnnulusProfile: 剖面
    """
    weighted, clipped = _sanitize(cloud, log_f + cloud.log_weight)
    log_volumes = cloud.log_volumes
    log2_masses, log2_stderr = [], []
    for i in range(len(cloud.ks)):
        log_mean, log_se = log_median_of_means(weighted[i], cloud.batches)
        log2_masses.append(float((log_volumes[i] + log_mean) / LN2))
        log2_stderr.append(float(max(log_se / LN2, SE_FLOOR)))
    if clipped:
        logger.debug(f"s={s}: {clipped} 个对数样本非有限或超出 ±{CLAMP:.0f}")
    return AnnulusProfile(
        s=s,
        seed=cloud.seed,
        n=cloud.n,
        k_range=(cloud.ks[0], cloud.ks[-1]),
        ks=list(cloud.ks),
        log2_masses=log2_masses,
        log2_stderr=log2_stderr,
        clipped=clipped,
        samples_per_annulus=cloud.samples_per_annulus,
        tail=tail_diagnostics(cloud, log_f) if with_tail else None,
    )


def integral_profile(
    expr: PshExpr,
    w: WeightSpec,
    s: float,
    k_min: Optional[int] = None,
    k_max: Optional[int] = None,
    n_samples: Optional[int] = None,
    seed: int = 0,
    batches: Optional[int] = None,
    workers: Optional[int] = None,
) -> AnnulusProfile:
    """
    I(s) = ∫ e^{-2φ/s - 2ψ(· - a)} 在各二进环带上的质量

    Args:
        expr: φ
        w: ψ，中心 a 取自 w.center
        s: 正数
        k_min, k_max: 环带范围
        n_samples: 每个环带的样本数
        seed: 随机种子
        batches: 批数
        workers: 并行线程数

    Returns:
        AnnulusProfile: 剖面（相同种子逐位相同）
    """
    cloud = build_cloud(expr.n, k_min, k_max, n_samples, seed, batches, workers=workers)
    values = evaluate_cloud(cloud, expr, w)
    return profile_from_log_integrand(cloud, values.log_integrand(s), s)


def divergence_exponent(profile: AnnulusProfile) -> Tuple[float, float]:
    """
    −log2 m_k 对 k 的加权最小二乘斜率

    e > 0 对应质量几何可求和。不少于 8 个环带时模型带 log2 k 项，
    使极点附近 k^γ 形式的多项式因子不计入斜率。

    Args:
        profile: 剖面

    Returns:
        (e, stderr)；质量全为 0 时返回 (+inf, 0) 并记录警告

    Raises:
        InputError: 环带少于 6 个
    """
    if len(profile.ks) < MIN_ANNULI:
        raise InputError(f"至少需要 {MIN_ANNULI} 个环带: {len(profile.ks)}")
    y = -np.asarray(profile.log2_masses, dtype=float)
    finite = np.isfinite(y)
    if not np.any(finite):
        logger.warning("所有环带质量均为 0，衰减指数记为 +inf")
        return math.inf, 0.0
    if np.sum(finite) < MIN_ANNULI:
        raise InputError(f"质量为正的环带少于 {MIN_ANNULI} 个")
    ks = np.asarray(profile.ks, dtype=float)[finite]
    se = np.asarray(profile.log2_stderr, dtype=float)[finite]
    fit = fit_decay(ks, y[finite], se) if ks.size >= LOG_CORRECTION_ANNULI else fit_slope(ks, y[finite], se)
    return fit.slope, fit.stderr


def tail_index(profile: AnnulusProfile) -> Optional[TailIndex]:
    """剖面上的 Hill 尾指数"""
    return profile.tail_index


@dataclass
class ConvergenceVerdict:
    """
    收敛判定

    margin 为衰减间隔 e/stderr 与环带内部间隔中较小的一个；
    收敛当且仅当 margin > 1，即一个标准误以内的平局计为发散。
    """
    s: Optional[float]
    exponent: float
    stderr: float
    converges: bool
    reason: str
    profile: AnnulusProfile
    margin: float = math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "exponent": self.exponent,
            "stderr": self.stderr,
            "converges": self.converges,
            "reason": self.reason,
            "margin": self.margin,
        }


def integrability_verdict(cloud: SampleCloud, log_f: np.ndarray, s: Optional[float] = None) -> ConvergenceVerdict:
    """
    任意被积函数在样本云上的收敛/发散判定

    Args:
        cloud: 样本云
        log_f: (K, N) 被积函数的对数（不含重要性权重）
        s: 记录用的尺度

    Returns:
        ConvergenceVerdict: 判定结果
    """
    profile = profile_from_log_integrand(cloud, log_f, s)
    e, se = divergence_exponent(profile)
    tail = profile.tail
    decay_margin = z_margin(e, se)
    tail_margin = tail.margin if tail is not None else math.inf
    margin = min(decay_margin, tail_margin)
    if decay_margin <= TIE:
        converges, reason = False, "decay"
    elif tail_margin <= TIE:
        converges, reason = False, "tail"
    else:
        converges, reason = True, "explained" if tail is not None and tail.explained else "decay"
    kappa = tail.tail.kappa if tail is not None else math.nan
    logger.debug(f"s={s}: e={e:.4f}±{se:.4f}, κ={kappa:.3f}, 间隔={margin:.2f}, 收敛={converges} ({reason})")
    return ConvergenceVerdict(s, e, se, converges, reason, profile, margin)
