"""
稳健统计估计模块

- 分批中位数均值（对数域）
- 基于 MAD 的标准误
- 加权最小二乘斜率拟合
- Hill 尾指数估计
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from lelong.errors import InputError

# 正态分布下 MAD -> 标准差
MAD_SCALE = 1.4826
# 中位数相对于均值的渐近效率修正 sqrt(π/2)
MEDIAN_SE_FACTOR = 1.2533
SE_FLOOR = 1e-6


def mad(values: np.ndarray) -> float:
    """中位数绝对偏差"""
    values = np.asarray(values, dtype=float)
    return float(np.median(np.abs(values - np.median(values))))


def median_of_means(values: np.ndarray, batches: int) -> Tuple[float, float]:
    """
    分批中位数均值

    Args:
        values: 一维样本
        batches: 批数

    Returns:
        (估计值, 标准误)
    """
    values = np.asarray(values, dtype=float)
    if batches < 1 or values.size < batches:
        raise InputError(f"批数不合法: batches={batches}, 样本数={values.size}")
    means = np.array([chunk.mean() for chunk in np.array_split(values, batches)])
    center = float(np.median(means))
    se = MEDIAN_SE_FACTOR * MAD_SCALE * mad(means) / math.sqrt(batches)
    return center, se


def log_median_of_means(log_values: np.ndarray, batches: int) -> Tuple[float, float]:
    """
    对数域分批中位数均值

    每批均值在对数域用 logsumexp 计算，取中位数；
    标准误为对数尺度上的 1.2533·1.4826·MAD/√B。

    Args:
        log_values: 一维对数样本（已含重要性权重）
        batches: 批数

    Returns:
        (log 均值估计, log 尺度标准误)
    """
    log_values = np.asarray(log_values, dtype=float)
    if batches < 1 or log_values.size < batches:
        raise InputError(f"批数不合法: batches={batches}, 样本数={log_values.size}")
    batch_logs = np.array([
        logsumexp(chunk) - math.log(chunk.size) for chunk in np.array_split(log_values, batches)
    ])
    center = float(np.median(batch_logs))
    se = MEDIAN_SE_FACTOR * MAD_SCALE * mad(batch_logs) / math.sqrt(batches)
    return center, max(se, SE_FLOOR)


@dataclass
class SlopeFit:
    """线性拟合结果 y ≈ slope·x + intercept"""
    slope: float
    intercept: float
    stderr: float
    points: int


def fit_slope(x: Sequence[float], y: Sequence[float], sigma: Optional[Sequence[float]] = None) -> SlopeFit:
    """
    加权最小二乘斜率

    给定 sigma 时标准误取残差缩放协方差与未缩放协方差中的较大者，
    否则只用残差缩放协方差。

    Args:
        x: 自变量
        y: 因变量
        sigma: 每点的标准误，缺省为等权

    Returns:
        SlopeFit: 拟合结果
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise InputError(f"拟合至少需要 4 个点: {x.size}")
    if sigma is None:
        coeffs, cov_scaled = np.polyfit(x, y, 1, cov=True)
        stderr = math.sqrt(max(cov_scaled[0, 0], 0.0))
        return SlopeFit(float(coeffs[0]), float(coeffs[1]), stderr, int(x.size))
    weights = 1.0 / np.maximum(np.asarray(sigma, dtype=float), SE_FLOOR)
    coeffs, cov_scaled = np.polyfit(x, y, 1, w=weights, cov=True)
    _, cov_raw = np.polyfit(x, y, 1, w=weights, cov="unscaled")
    stderr = math.sqrt(max(cov_scaled[0, 0], cov_raw[0, 0], 0.0))
    return SlopeFit(float(coeffs[0]), float(coeffs[1]), stderr, int(x.size))


def fit_decay(x: Sequence[float], y: Sequence[float], sigma: Optional[Sequence[float]] = None) -> SlopeFit:
    """
    带 log2 x 修正项的加权最小二乘斜率

    模型为 y = c + e·x + γ·log2 x，返回 e。二进壳层质量在极点附近形如 C·k^γ·2^{-ek}，
    γ 吸收多项式因子后 e 的符号只由指数部分决定。标准误的取法与 fit_slope 相同。

    Args:
        x: 正的自变量
        y: 因变量
        sigma: 每点的标准误，缺省为等权

    Returns:
        SlopeFit: 拟合结果，intercept 为 c
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 6:
        raise InputError(f"拟合至少需要 6 个点: {x.size}")
    if np.any(x <= 0):
        raise InputError("自变量必须为正")
    weights = np.ones_like(x) if sigma is None else 1.0 / np.maximum(np.asarray(sigma, dtype=float), SE_FLOOR)
    design = np.column_stack([x, np.log2(x), np.ones_like(x)]) * weights[:, None]
    target = y * weights
    coeffs, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coeffs
    cov_raw = np.linalg.pinv(design.T @ design)
    scale = float(resid @ resid) / (x.size - 3)
    variance = cov_raw[0, 0] * scale
    if sigma is not None:
        variance = max(variance, cov_raw[0, 0])
    return SlopeFit(float(coeffs[0]), float(coeffs[2]), math.sqrt(max(variance, 0.0)), int(x.size))


def z_margin(value: float, stderr: float) -> float:
    """
    以标准误为单位的间隔 value/stderr

    NaN 记为 −inf；标准误为 0 时按 value 的符号取 ±inf。
    """
    if math.isnan(value):
        return -math.inf
    if math.isinf(value):
        return value
    if math.isinf(stderr):
        return 0.0
    if not stderr > 0:
        return math.copysign(math.inf, value) if value else 0.0
    return value / stderr


@dataclass
class TailIndex:
    """
    Hill 尾指数估计

    Attributes:
        kappa: 尾指数 κ，P(X > x) ~ x^{-κ}；均值有限当且仅当 κ > 1
        stderr: κ/√m
        tail_size: 参与估计的顶部样本数 m
    """
    kappa: float
    stderr: float
    tail_size: int

    @property
    def heavy(self) -> bool:
        """κ 在一个标准误内不大于 1 视为重尾"""
        return self.margin <= 1.0

    @property
    def margin(self) -> float:
        """(κ − 1) 以标准误为单位"""
        return z_margin(self.kappa - 1.0, self.stderr)

    def to_dict(self):
        return {"kappa": self.kappa, "stderr": self.stderr, "tail_size": self.tail_size, "heavy": self.heavy}


def hill_tail_index(log_values: np.ndarray, fraction: float = 0.03, minimum: int = 20) -> TailIndex:
    """
    对数样本上的 Hill 估计

    Args:
        log_values: log X 的样本
        fraction: 顶部样本比例
        minimum: 顶部样本数下限

    Returns:
        TailIndex: 尾指数
    """
    log_values = np.asarray(log_values, dtype=float)
    log_values = log_values[np.isfinite(log_values)]
    m = max(minimum, int(fraction * log_values.size))
    if log_values.size <= m + 1:
        raise InputError(f"样本太少，无法估计尾指数: {log_values.size}")
    ordered = np.sort(log_values)[::-1]
    excess = ordered[:m] - ordered[m]
    mean_excess = float(np.mean(excess))
    if mean_excess <= 0:
        return TailIndex(math.inf, 0.0, m)
    kappa = 1.0 / mean_excess
    return TailIndex(kappa, kappa / math.sqrt(m), m)
