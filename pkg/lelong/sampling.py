"""
采样工具模块

提供随机数子流、二进环带体积、球面/环带均匀采样，以及环带上的
坐标尖点混合重要性采样（用于分辨 log(|z1|² + |z2|^{2a}) 这类各向异性奇点）。
"""

import math
import zlib
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from lelong.errors import InputError

LN2 = math.log(2.0)

# 子流标签
TAG_ANNULUS = "annulus"
TAG_AUDIT = "audit"
TAG_HAAR = "haar"
TAG_LINES = "lines"
TAG_GRAM = "gram"
TAG_TORUS = "torus"
TAG_GRASSMANN = "grassmann"


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed: int, tag: str, *key: int) -> np.random.Generator:
    """
    由 (seed, tag, key...) 派生独立的随机数子流

    同一组参数总是得到同一子流，与调度顺序和线程数无关。

    Args:
        seed: 全局种子
        tag: 用途标签
        *key: 额外的非负整数键（环带编号、批次编号等）

    Returns:
        np.random.Generator: 随机数生成器
    """
    if seed < 0 or any(k < 0 for k in key):
        raise InputError(f"种子与子流键必须非负: seed={seed}, key={key}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(_tag_key(tag),) + tuple(int(k) for k in key))
    return np.random.default_rng(sequence)


def log_ball_volume(n: int, r: float) -> float:
    """ℂⁿ 中半径 r 的球体积的对数：π^n r^{2n} / n!"""
    return n * math.log(math.pi) + 2 * n * math.log(r) - math.lgamma(n + 1)


def log_annulus_volume(n: int, k: int) -> float:
    """
    二进环带 A(k) = {2^{-k-1} <= |z| <= 2^{-k}} 体积的对数

    vol(A(k)) = π^n / n! · 2^{-2nk} · (1 - 2^{-2n})
    """
    return (
        n * math.log(math.pi) - math.lgamma(n + 1)
        - 2 * n * k * LN2 + math.log1p(-2.0 ** (-2 * n))
    )


def sphere_area(n: int) -> float:
    """单位球面 S^{2n-1} 的面积 c_n = 2π^n / (n-1)!"""
    return 2.0 * math.pi ** n / math.factorial(n - 1)


def uniform_sphere(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    """S^{2n-1} ⊂ ℂⁿ 上的均匀采样，返回 (size, n) 复数组"""
    g = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def annulus_radii(
    rng: np.random.Generator, size: int, n: int, r_in: float, r_out: float
) -> np.ndarray:
    """按 r^{2n-1} 的逆分布函数采样半径"""
    u = rng.random(size)
    lo, hi = r_in ** (2 * n), r_out ** (2 * n)
    return (lo + u * (hi - lo)) ** (1.0 / (2 * n))


def uniform_annulus(
    rng: np.random.Generator, size: int, n: int, r_in: float, r_out: float
) -> np.ndarray:
    """
    环带 {r_in <= |z| <= r_out} 内的均匀采样

    Args:
        rng: 随机数生成器
        size: 样本数
        n: 复维数
        r_in: 内半径（0 表示球）
        r_out: 外半径

    Returns:
        np.ndarray: (size, n) 复数组
    """
    if not 0 <= r_in < r_out:
        raise InputError(f"环带半径必须满足 0 <= r_in < r_out: {r_in}, {r_out}")
    radii = annulus_radii(rng, size, n, r_in, r_out)
    return radii[:, None] * uniform_sphere(rng, size, n)


def uniform_ball(rng: np.random.Generator, size: int, n: int, r: float) -> np.ndarray:
    """球 B(0, r) 内的均匀采样"""
    return uniform_annulus(rng, size, n, 0.0, r)


def cusp_depth(k_max: int) -> int:
    """坐标尖点提议分布的深度 T：|ω_j|² 在 [2^{-T}, 1] 上对数均匀"""
    return 12 * int(k_max) + 24


def _axis_density_ratio(u: np.ndarray, n: int, depth: int) -> np.ndarray:
    """
    轴 j 提议分布相对于球面均匀分布的密度比 g(u)，u = |ω_j|²

    均匀分布下 u ~ Beta(1, n-1)，密度 (n-1)(1-u)^{n-2}；
    提议分布下 u 在 [2^{-T}, 1] 上对数均匀，密度 1/(u·T·ln2)。
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        uniform = (n - 1) * (1.0 - u) ** (n - 2)
        ratio = 1.0 / (u * depth * LN2 * uniform)
    inside = (u >= 2.0 ** (-depth)) & (u <= 1.0)
    return np.where(inside, ratio, 0.0)


def pure_axis_weight(u: np.ndarray, n: int, depth: int) -> np.ndarray:
    """只使用轴提议分布时的重要性权重 1/g(u) = (n-1)(1-u)^{n-2}·u·T·ln2"""
    return (n - 1) * (1.0 - u) ** (n - 2) * u * depth * LN2


@dataclass
class MixtureDraw:
    """
    一批混合采样结果

    Attributes:
        directions: (N, n) 单位球面上的方向
        log_weight: (N,) 相对于均匀分布的对数重要性权重
        component: (N,) -1 表示均匀分量，j >= 0 表示轴 j 提议
        level: (N,) 轴提议样本的深度层 floor(-log2 u_j)，均匀样本为 -1
    """
    directions: np.ndarray
    log_weight: np.ndarray
    component: np.ndarray
    level: np.ndarray


def draw_mixture_directions(
    rng: np.random.Generator, size: int, n: int, cusp_share: float, depth: int
) -> MixtureDraw:
    """
    分层混合方向采样

    (1 - cusp_share) 的样本来自球面均匀分布，其余平均分给 n 个坐标轴提议。
    权重使用实际分配比例下的混合密度 w = 1/[(1-ρ) + (ρ/n)·Σ_j g(u_j)]，
    因此对任意被积函数都是无偏的。n = 1 时只有均匀分量。

    Args:
        rng: 随机数生成器
        size: 样本数
        n: 复维数
        cusp_share: 尖点提议所占比例 ρ ∈ [0, 1)
        depth: 对数均匀提议的深度 T

    Returns:
        MixtureDraw: 方向、权重、分量与深度层
    """
    if not 0.0 <= cusp_share < 1.0:
        raise InputError(f"cusp_share 必须在 [0, 1) 内: {cusp_share}")

    per_axis = int(cusp_share * size) // n if n >= 2 else 0
    n_uniform = size - per_axis * n
    directions = np.empty((size, n), dtype=complex)
    component = np.full(size, -1, dtype=int)
    level = np.full(size, -1, dtype=int)

    directions[:n_uniform] = uniform_sphere(rng, n_uniform, n)
    start = n_uniform
    for j in range(n if per_axis else 0):
        stop = start + per_axis
        u = 2.0 ** (-depth * rng.random(per_axis))
        phase = np.exp(2j * np.pi * rng.random(per_axis))
        rest = uniform_sphere(rng, per_axis, n - 1) * np.sqrt(1.0 - u)[:, None]
        block = np.empty((per_axis, n), dtype=complex)
        block[:, j] = np.sqrt(u) * phase
        block[:, [i for i in range(n) if i != j]] = rest
        directions[start:stop] = block
        component[start:stop] = j
        level[start:stop] = np.minimum(np.floor(-np.log2(u)).astype(int), depth - 1)
        start = stop

    if per_axis == 0:
        log_weight = np.zeros(size)
    else:
        share = per_axis * n / size
        u_all = np.abs(directions) ** 2
        ratios = np.sum(_axis_density_ratio(u_all, n, depth), axis=1)
        mixture = (1.0 - share) + (share / n) * ratios
        with np.errstate(divide="ignore"):
            log_weight = -np.log(mixture)
    return MixtureDraw(directions, log_weight, component, level)


def annulus_bounds(k: int) -> Tuple[float, float]:
    """A(k) 的内外半径 (2^{-k-1}, 2^{-k})"""
    return 2.0 ** (-k - 1), 2.0 ** (-k)
