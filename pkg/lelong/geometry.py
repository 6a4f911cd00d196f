"""
Haar 随机酉矩阵、k 维子空间与限制定理的数值检查

- haar_unitary / random_subspace: U(n) 上的 Haar 测度及其在 G(k, n) 上的像
- restrict: 表达式在子空间上的限制（一次映射复合）
- polar_grassmann_check: 极坐标 Grassmann 公式
- lelong_via_lines: 经过一点的一般复直线上的 Lelong 数
- plane_restriction_index: k 维平面限制命题
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.linalg import qr

from lelong.config import config
from lelong.errors import ArityMismatchError, InputError
from lelong.estimators import MAD_SCALE, mad
from lelong.expr import Compose, PolyMap, PshExpr, compose, linear_map
from lelong.log import logger
from lelong.montecarlo import cloud_for_budget, estimate_threshold
from lelong.sampling import TAG_GRASSMANN, TAG_HAAR, TAG_LINES, sphere_area, substream, uniform_ball
from lelong.weights import make_radial

UNITARY_TOL = 1e-12
MIN_LINES = 3
DEFAULT_LINES = 11
MULTIMODAL_GAP = 0.25


@dataclass(frozen=True)
class UnitaryMatrix:
    """n×n 酉矩阵"""
    entries: np.ndarray

    def __post_init__(self):
        residual = self.residual()
        if residual > UNITARY_TOL * max(1, self.n):
            raise InputError(f"矩阵不是酉矩阵: ‖U*U - I‖ = {residual:.3e}")

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    def residual(self) -> float:
        """算子范数意义下的 ‖U*U - I‖"""
        gram = self.entries.conj().T @ self.entries
        return float(np.linalg.norm(gram - np.eye(self.entries.shape[0]), ord=2))

    def as_map(self) -> PolyMap:
        return linear_map(self.entries)


@dataclass(frozen=True)
class Subspace:
    """
    ℂⁿ 中的 k 维子空间

    Attributes:
        frame: (n, k) 列正交的标架
    """
    frame: np.ndarray

    def __post_init__(self):
        if self.frame.ndim != 2:
            raise InputError("标架必须是二维数组")
        n, k = self.frame.shape
        if not 1 <= k <= n:
            raise InputError(f"子空间维数必须满足 1 <= k <= n: k={k}, n={n}")
        residual = float(np.linalg.norm(self.frame.conj().T @ self.frame - np.eye(k), ord=2))
        if residual > UNITARY_TOL * max(1, n):
            raise InputError(f"标架列不正交: 残差 {residual:.3e}")

    @property
    def n(self) -> int:
        return int(self.frame.shape[0])

    @property
    def k(self) -> int:
        return int(self.frame.shape[1])

    @classmethod
    def span(cls, n: int, indices: Sequence[int]) -> "Subspace":
        """坐标向量 e_i (i ∈ indices) 张成的子空间"""
        frame = np.zeros((n, len(indices)), dtype=complex)
        for col, i in enumerate(indices):
            frame[i, col] = 1.0
        return cls(frame)

    def embed(self, w: np.ndarray) -> np.ndarray:
        """w ∈ ℂᵏ ↦ frame·w，支持 (N, k) 批量"""
        return np.asarray(w, dtype=complex) @ self.frame.T


def _haar_from_rng(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_unitary(n: int, seed: int, index: int = 0) -> UnitaryMatrix:
    """
    按 Haar 测度采样 U(n) 中的元素

    复高斯矩阵做 QR 分解后，用 R 对角元的相位修正 Q 的各列。

    Args:
        n: 维数
        seed: 随机种子
        index: 同一种子下的第几个样本

    Returns:
        UnitaryMatrix: 酉矩阵
    """
    if n < 1:
        raise InputError(f"维数必须 >= 1: {n}")
    return UnitaryMatrix(_haar_from_rng(substream(seed, TAG_HAAR, index), n))


def random_subspace(k: int, n: int, seed: int, index: int = 0) -> Subspace:
    """取 haar_unitary(n) 的前 k 列作为 G(k, n) 中的随机点"""
    if not 1 <= k <= n:
        raise InputError(f"子空间维数必须满足 1 <= k <= n: k={k}, n={n}")
    return Subspace(haar_unitary(n, seed, index).entries[:, :k].copy())


def haar_rotation_map(n: int, seed: int, index: int = 0) -> PolyMap:
    """Haar 随机酉变换 z ↦ Uz 作为多项式映射"""
    return haar_unitary(n, seed, index).as_map()


def restrict(expr: PshExpr, T: Subspace) -> Compose:
    """
    表达式在子空间上的限制 w ↦ φ(frame·w)

    Args:
        expr: n 元表达式
        T: 子空间

    Returns:
        Compose: k 元表达式
    """
    if expr.n != T.n:
        raise ArityMismatchError(f"表达式维数 {expr.n} 与子空间外围维数 {T.n} 不一致")
    return compose(expr, linear_map(T.frame))


# ----------------------------------------------------------------------
# 极坐标 Grassmann 公式
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """
    ℂⁿ 上的可积检验函数

    Attributes:
        name: 名称
        n: 维数
        fn: 向量化求值 (N, n) -> (N,)
        integral: ∫ g dλ_n 的精确值
        proposal: ("gaussian", 方差) 或 ("ball", 半径)，用于平面上的重要性采样
        radial: 是否只依赖 |z|
    """
    name: str
    n: int
    fn: Callable[[np.ndarray], np.ndarray]
    integral: float
    proposal: Tuple[str, float]
    radial: bool = False


def gaussian_test(n: int, scales: Optional[Sequence[float]] = None) -> TestFunction:
    """
    各向异性高斯 g(z) = exp(-Σ σ_i |z_i|²)，∫ g = π^n / Π σ_i

    Args:
        n: 维数
        scales: σ_i > 0，缺省全为 1

    Returns:
        TestFunction: 检验函数
    """
    sigma = np.ones(n) if scales is None else np.asarray(scales, dtype=float)
    if sigma.shape != (n,) or np.any(sigma <= 0):
        raise InputError(f"高斯尺度必须是 {n} 个正数: {scales}")

    def fn(Z: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum(sigma * np.abs(Z) ** 2, axis=1))

    return TestFunction(
        name="gaussian",
        n=n,
        fn=fn,
        integral=float(math.pi ** n / np.prod(sigma)),
        proposal=("gaussian", float(1.0 / sigma.min())),
        radial=bool(np.all(sigma == sigma[0])),
    )


def _bump(r2: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r2, dtype=float)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def ball_bump_test(n: int) -> TestFunction:
    """单位球示性函数的光滑化 g(z) = exp(-1/(1-|z|²))，积分由径向求积给出"""
    radial_part, _ = integrate.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (2 * n - 1), 0.0, 1.0)

    def fn(Z: np.ndarray) -> np.ndarray:
        return _bump(np.sum(np.abs(Z) ** 2, axis=1))

    return TestFunction(
        name="ball_bump",
        n=n,
        fn=fn,
        integral=sphere_area(n) * radial_part,
        proposal=("ball", 1.0),
        radial=True,
    )


def _plane_draws(g: TestFunction, k: int, size: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """ℂᵏ 上的提议样本及其对数密度"""
    rng = substream(seed, TAG_GRASSMANN, k)
    kind, scale = g.proposal
    if kind == "gaussian":
        w = (rng.standard_normal((size, k)) + 1j * rng.standard_normal((size, k))) * math.sqrt(scale / 2.0)
        log_density = -np.sum(np.abs(w) ** 2, axis=1) / scale - k * math.log(math.pi * scale)
    elif kind == "ball":
        w = uniform_ball(rng, size, k, scale)
        log_density = np.full(size, -(k * math.log(math.pi) - math.lgamma(k + 1) + 2 * k * math.log(scale)))
    else:
        raise InputError(f"未知的提议分布: {kind}")
    return w, log_density


@dataclass
class GrassmannReport:
    """极坐标 Grassmann 公式的检查结果"""
    n: int
    k: int
    test: str
    lhs: float
    rhs: float
    rel_error: float
    plane_std: float
    planes: int
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "test": self.test,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rel_error": self.rel_error,
            "plane_std": self.plane_std,
            "planes": self.planes,
            "samples": self.samples,
        }


def polar_grassmann_check(
    g: TestFunction,
    k: int,
    n: int,
    n_planes: int = 200,
    n_samples: int = 10_000,
    seed: int = 0,
    workers: Optional[int] = None,
) -> GrassmannReport:
    """
    检查 ∫_{ℂⁿ} g dλ_n = (c_n / c_k) · E_T ∫_T |z|^{2(n-k)} g dλ_k

    c_j = 2π^j/(j-1)! 为 S^{2j-1} 的面积，T 按 G(k, n) 上的不变测度采样。
    所有平面共用同一组 ℂᵏ 样本，径向 g 的平面间方差因此为零。

    Args:
        g: 检验函数
        k: 平面维数
        n: 外围维数
        n_planes: 平面个数
        n_samples: 每个平面上的样本数
        seed: 随机种子
        workers: 并行线程数

    Returns:
        GrassmannReport: 含相对误差 |LHS - RHS| / LHS
    """
    if g.n != n:
        raise ArityMismatchError(f"检验函数维数 {g.n} 与 n={n} 不一致")
    if not 1 <= k <= n:
        raise InputError(f"平面维数必须满足 1 <= k <= n: k={k}, n={n}")
    if n_planes < 1 or n_samples < 1:
        raise InputError("平面数与样本数必须为正")
    workers = config.WORKERS if workers is None else int(workers)

    w, log_density = _plane_draws(g, k, n_samples, seed)
    radial_factor = np.sum(np.abs(w) ** 2, axis=1) ** (n - k)
    log_ratio = np.log(radial_factor, where=radial_factor > 0, out=np.full(n_samples, -np.inf)) - log_density

    def plane_integral(index: int) -> float:
        T = random_subspace(k, n, seed, index)
        values = g.fn(T.embed(w))
        return float(np.mean(values * np.exp(log_ratio)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            inner = np.array(list(pool.map(plane_integral, range(n_planes))))
    else:
        inner = np.array([plane_integral(i) for i in range(n_planes)])

    rhs = sphere_area(n) / sphere_area(k) * float(np.mean(inner))
    lhs = g.integral
    report = GrassmannReport(
        n=n,
        k=k,
        test=g.name,
        lhs=lhs,
        rhs=rhs,
        rel_error=abs(lhs - rhs) / abs(lhs),
        plane_std=float(np.std(inner)),
        planes=n_planes,
        samples=n_samples,
    )
    logger.info(f"Grassmann 公式 (n={n}, k={k}, {g.name}): LHS={lhs:.6f}, RHS={rhs:.6f}, 相对误差 {report.rel_error:.4f}")
    return report


# ----------------------------------------------------------------------
# 一般直线与一般平面
# ----------------------------------------------------------------------

@dataclass
class LineRow:
    """一条直线上的估计"""
    line_index: int
    nu_hat: float
    ci_lo: float
    ci_hi: float

    def to_dict(self) -> Dict[str, Any]:
        return {"line_index": self.line_index, "nu_hat": self.nu_hat, "ci_lo": self.ci_lo, "ci_hi": self.ci_hi}


@dataclass
class LineEstimate:
    """
    沿一般直线估计 Lelong 数的结果

    Attributes:
        median: 各直线估计的中位数
        spread: 1.4826·MAD
        multimodal: 估计值呈多峰分布（点可能位于例外集上）
        rows: 每条直线一行
        warnings: 警告
    """
    median: float
    spread: float
    multimodal: bool
    rows: List[LineRow] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "median": self.median,
            "spread": self.spread,
            "multimodal": self.multimodal,
            "rows": [r.to_dict() for r in self.rows],
            "warnings": self.warnings,
        }


def _is_multimodal(values: np.ndarray) -> bool:
    """相邻排序值之间存在大间隔，且两侧各至少两个值"""
    ordered = np.sort(values)
    finite = ordered[np.isfinite(ordered)]
    if finite.size < 4:
        return False
    threshold = MULTIMODAL_GAP * max(1.0, float(np.median(finite)))
    gaps = np.diff(finite)
    for i in np.flatnonzero(gaps > threshold):
        if 2 <= i + 1 <= finite.size - 2:
            return True
    return False


def lelong_via_lines(
    expr: PshExpr,
    a: Optional[Sequence[complex]] = None,
    n_lines: int = DEFAULT_LINES,
    seed: int = 0,
    **budget,
) -> LineEstimate:
    """
    经过 a 的 Haar 随机复直线上 φ|_L 的可积指数，取中位数

    一维时 Lelong 数与可积指数一致，直线上的估计使用 t = 0 的一维阈值估计。
    所有直线共享同一个一维样本云。

    Args:
        expr: φ
        a: 点，缺省为原点
        n_lines: 直线条数（>= 3）
        seed: 随机种子
        **budget: 采样预算（k_min, k_max, n_samples, batches, workers, bracket, tol）

    Returns:
        LineEstimate: 中位数、MAD 离散度与逐条结果
    """
    if n_lines < MIN_LINES:
        raise InputError(f"直线条数必须 >= {MIN_LINES}: {n_lines}")
    n = expr.n
    a = (0j,) * n if a is None else tuple(complex(z) for z in a)
    if len(a) != n:
        raise ArityMismatchError(f"点的维数 {len(a)} 与表达式维数 {n} 不一致")

    cloud = cloud_for_budget(1, seed, budget)
    weight = make_radial(0.0, (0j,))
    rows = []
    for i in range(n_lines):
        direction = Subspace(_haar_from_rng(substream(seed, TAG_LINES, i), n)[:, :1].copy())
        line = compose(expr, linear_map(direction.frame, offset=a))
        est = estimate_threshold(line, weight, bracket=budget.get("bracket"), tol=budget.get("tol"),
                                 seed=seed, cloud=cloud)
        rows.append(LineRow(i, est.nu_hat, est.ci[0], est.ci[1]))

    values = np.array([r.nu_hat for r in rows])
    result = LineEstimate(
        median=float(np.median(values)),
        spread=float(MAD_SCALE * mad(values)),
        multimodal=_is_multimodal(values),
        rows=rows,
    )
    if result.multimodal:
        result.warnings.append("直线估计呈多峰分布，点可能位于例外集上")
        logger.warning(f"lelong_via_lines: 多峰分布 {np.round(np.sort(values), 3).tolist()}")
    logger.info(f"直线估计: 中位数 {result.median:.4f}, 离散度 {result.spread:.4f} ({n_lines} 条)")
    return result


@dataclass
class PlaneRestrictionReport:
    """k 维平面限制命题的检查结果"""
    k: int
    n: int
    nu_ambient: float
    ci_ambient: Tuple[float, float]
    restricted_median: float
    restricted_values: List[float]
    ambient_below_one: bool
    restricted_below_one: bool
    decided: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return self.ambient_below_one == self.restricted_below_one

    @property
    def passed(self) -> bool:
        return self.agree or not self.decided

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "n": self.n,
            "nu_ambient": self.nu_ambient,
            "ci_ambient": list(self.ci_ambient),
            "restricted_median": self.restricted_median,
            "restricted_values": self.restricted_values,
            "ambient_below_one": self.ambient_below_one,
            "restricted_below_one": self.restricted_below_one,
            "decided": self.decided,
            "agree": self.agree,
            "warnings": self.warnings,
        }


def plane_restriction_index(
    expr: PshExpr,
    k: int,
    seed: int = 0,
    n_planes: int = DEFAULT_LINES,
    **budget,
) -> PlaneRestrictionReport:
    """
    检查 ν_{0,n-k}(φ) < 1 ⇔ 一般 k 维平面 T 上 ν_{0,0}(φ|_T) < 1

    Args:
        expr: φ
        k: 平面维数
        seed: 随机种子
        n_planes: 平面个数
        **budget: 采样预算

    Returns:
        PlaneRestrictionReport: 两侧布尔值；任一侧区间包含 1 时不作判定
    """
    n = expr.n
    if not 1 <= k <= n:
        raise InputError(f"平面维数必须满足 1 <= k <= n: k={k}, n={n}")
    bracket, tol = budget.get("bracket"), budget.get("tol")

    ambient = estimate_threshold(expr, make_radial(n - k, (0j,) * n), bracket=bracket, tol=tol,
                                 seed=seed, cloud=cloud_for_budget(n, seed, budget))
    plane_cloud = cloud_for_budget(k, seed, budget)
    weight = make_radial(0.0, (0j,) * k)
    estimates = [
        estimate_threshold(restrict(expr, random_subspace(k, n, seed, index=i)), weight,
                           bracket=bracket, tol=tol, seed=seed, cloud=plane_cloud)
        for i in range(n_planes)
    ]
    values = [e.nu_hat for e in estimates]
    median = float(np.median(values))
    median_est = min(estimates, key=lambda e: abs(e.nu_hat - median))

    decided = not (ambient.ci[0] <= 1.0 <= ambient.ci[1] or median_est.ci[0] <= 1.0 <= median_est.ci[1])
    report = PlaneRestrictionReport(
        k=k,
        n=n,
        nu_ambient=ambient.nu_hat,
        ci_ambient=ambient.ci,
        restricted_median=median,
        restricted_values=values,
        ambient_below_one=ambient.nu_hat < 1.0,
        restricted_below_one=median < 1.0,
        decided=decided,
    )
    if not decided:
        report.warnings.append("估计区间包含 1，不作判定")
    return report
