"""
环带样本云

样本云只依赖 (n, 环带范围, 样本数, 批数, 种子)，与被积函数无关。
φ 与 ψ 在云上只求值一次，之后对每个 s 复用。
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from lelong.config import config
from lelong.errors import ArityMismatchError, InputError, NonPositiveParameterError
from lelong.expr import PshExpr, evaluate_many
from lelong.log import logger
from lelong.sampling import (
    TAG_ANNULUS,
    annulus_bounds,
    annulus_radii,
    cusp_depth,
    draw_mixture_directions,
    log_annulus_volume,
    substream,
)
from lelong.weights import WeightSpec

DEFAULT_CUSP_SHARE = 0.5


@dataclass
class SampleCloud:
    """
    各环带上的样本

    Attributes:
        n: 复维数
        ks: 环带编号 k_min..k_max
        points: (K, N, n) 相对中心的位移 z − a
        log_weight: (K, N) 混合重要性权重的对数
        component: (K, N) -1 为均匀分量，j 为轴 j 提议
        level: (K, N) 轴提议样本的深度层
        batches: 每个环带的批数（批在 N 维上连续存放）
        seed: 随机种子
        depth: 轴提议深度 T
        cusp_share: 轴提议比例
    """
    n: int
    ks: List[int]
    points: np.ndarray
    log_weight: np.ndarray
    component: np.ndarray
    level: np.ndarray
    batches: int
    seed: int
    depth: int
    cusp_share: float

    @property
    def samples_per_annulus(self) -> int:
        return int(self.points.shape[1])

    @property
    def log_volumes(self) -> np.ndarray:
        return np.array([log_annulus_volume(self.n, k) for k in self.ks])

    @property
    def uniform_mask(self) -> np.ndarray:
        return self.component == -1

    def axis_moduli(self) -> np.ndarray:
        """(K, N, n) 方向分量的模平方 u_j = |ω_j|²"""
        sq = np.abs(self.points) ** 2
        return sq / np.sum(sq, axis=2, keepdims=True)

    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, self.n)


def _annulus_block(n: int, k: int, per_batch: int, batches: int, seed: int,
                   cusp_share: float, depth: int) -> Tuple[np.ndarray, ...]:
    r_in, r_out = annulus_bounds(k)
    parts = []
    for b in range(batches):
        rng = substream(seed, TAG_ANNULUS, k, b)
        draw = draw_mixture_directions(rng, per_batch, n, cusp_share, depth)
        radii = annulus_radii(rng, per_batch, n, r_in, r_out)
        parts.append((radii[:, None] * draw.directions, draw.log_weight, draw.component, draw.level))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


def build_cloud(
    n: int,
    k_min: Optional[int] = None,
    k_max: Optional[int] = None,
    n_samples: Optional[int] = None,
    seed: int = 0,
    batches: Optional[int] = None,
    cusp_share: float = DEFAULT_CUSP_SHARE,
    workers: Optional[int] = None,
) -> SampleCloud:
    """
    在 A(k_min), ..., A(k_max) 上采样

    每个 (环带, 批) 使用由 (seed, k, batch) 派生的独立子流，
    结果与线程数无关。

    Args:
        n: 复维数
        k_min, k_max: 环带范围（含端点）
        n_samples: 每个环带的样本数（>= 64）
        seed: 随机种子
        batches: 中位数均值的批数
        cusp_share: 轴提议比例（n = 1 时不使用）
        workers: 并行线程数

    Returns:
        SampleCloud: 样本云
    """
    k_min = config.K_MIN if k_min is None else int(k_min)
    k_max = config.K_MAX if k_max is None else int(k_max)
    n_samples = config.SAMPLES if n_samples is None else int(n_samples)
    batches = config.BATCHES if batches is None else int(batches)
    workers = config.WORKERS if workers is None else int(workers)

    if n < 1:
        raise InputError(f"维数必须 >= 1: {n}")
    if not 0 <= k_min < k_max:
        raise InputError(f"环带范围必须满足 0 <= k_min < k_max: {k_min}, {k_max}")
    if n_samples < 64:
        raise InputError(f"每个环带至少需要 64 个样本: {n_samples}")
    if batches < 2 or n_samples < 4 * batches:
        raise InputError(f"批数不合法: batches={batches}, samples={n_samples}")

    per_batch = n_samples // batches
    depth = cusp_depth(k_max)
    ks = list(range(k_min, k_max + 1))

    def task(k: int):
        return _annulus_block(n, k, per_batch, batches, seed, cusp_share, depth)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(task, ks))
    else:
        blocks = [task(k) for k in ks]

    cloud = SampleCloud(
        n=n,
        ks=ks,
        points=np.stack([b[0] for b in blocks]),
        log_weight=np.stack([b[1] for b in blocks]),
        component=np.stack([b[2] for b in blocks]),
        level=np.stack([b[3] for b in blocks]),
        batches=batches,
        seed=seed,
        depth=depth,
        cusp_share=cusp_share if n >= 2 else 0.0,
    )
    logger.debug(f"样本云: n={n}, k=[{k_min}, {k_max}], 每环带 {per_batch * batches} 个样本")
    return cloud


@dataclass
class CloudValues:
    """φ(a + z) 与 ψ(z) 在样本云上的取值"""
    phi: np.ndarray
    psi: np.ndarray

    def log_integrand(self, s: float) -> np.ndarray:
        """
        log(e^{-2φ/s - 2ψ}) = -2φ/s - 2ψ（不含重要性权重）

        Args:
            s: 正数

        Returns:
            np.ndarray: (K, N)
        """
        if not (math.isfinite(s) and s > 0):
            raise NonPositiveParameterError(f"s 必须为正数: {s}")
        with np.errstate(invalid="ignore"):
            return -2.0 * self.phi / s - 2.0 * self.psi


def evaluate_cloud(cloud: SampleCloud, expr: PshExpr, w: WeightSpec) -> CloudValues:
    """
    在样本云上求 φ(a + z) 与 ψ(z)，a 为权函数中心

    Args:
        cloud: 样本云
        expr: 多重次调和表达式 φ
        w: 权函数 ψ

    Returns:
        CloudValues: (K, N) 取值
    """
    if expr.n != cloud.n or w.n != cloud.n:
        raise ArityMismatchError(f"维数不一致: 表达式 {expr.n}, 权函数 {w.n}, 样本云 {cloud.n}")
    shape = cloud.points.shape[:2]
    flat = cloud.flat_points()
    phi = evaluate_many(expr, flat + np.asarray(w.center)).reshape(shape)
    psi = w.psi_many(flat).reshape(shape)
    return CloudValues(phi=phi, psi=psi)


def cloud_for_budget(n: int, seed: int, budget: Dict[str, Any]) -> SampleCloud:
    """按预算字典（k_min, k_max, n_samples, batches, workers）构造样本云，缺省取配置值"""
    return build_cloud(
        n,
        budget.get("k_min"),
        budget.get("k_max"),
        budget.get("n_samples"),
        seed,
        budget.get("batches"),
        workers=budget.get("workers"),
    )
