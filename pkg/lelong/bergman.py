"""
截断加权 Bergman 函数

在 B(o, r) 上取总次数 <= D 的单项式 (z - o)^α 为基，
权为 e^{-2mφ(z) - 2ψ(z - a)}，由 Gram 矩阵 G 给出

    B(z) = v(z)* G^{-1} v(z) = sup{|h(z)|² : h ∈ span, ‖h‖ <= 1}
    Ψ(z) = (1/2m) · log B(z)

Gram 矩阵由环带样本云上的分层蒙特卡洛估计；φ 为常数且 ψ 为以 o 为中心的
径向权时使用极坐标闭式；n <= 2 且权在闭球上光滑时使用张量 Gauss 求积。
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from lelong.config import config
from lelong.errors import ArityMismatchError, DomainError, InputError, NumericalFailure
from lelong.estimators import fit_slope, hill_tail_index
from lelong.expr import (
    LogSumPow,
    Max,
    Polynomial,
    PshExpr,
    Scale,
    Sum,
    evaluate,
    evaluate_many,
    expand,
    is_constant,
)
from lelong.log import logger
from lelong.montecarlo import SampleCloud, build_cloud, estimate_threshold, integrability_verdict
from lelong.sampling import TAG_GRAM, log_annulus_volume, substream, uniform_ball, uniform_sphere
from lelong.weights import WeightKind, WeightSpec, audit_admissibility, make_radial

Exponent = Tuple[int, ...]

EIGEN_FLOOR = 1e-12
HERMITIAN_TOL = 1e-10
GRAM_K_MAX = 10
GRAM_SAMPLES = 1024
LOG_CLAMP = 700.0
# 张量 Gauss 求积只用于 n <= 2
GAUSS_MAX_DIM = 2
POSITIVE_SLOPE = 0.5


def default_degree(n: int) -> int:
    """n <= 2 时为 6，否则为 4"""
    return 6 if n <= 2 else 4


def monomial_basis(n: int, degree: int) -> List[Exponent]:
    """总次数 <= degree 的多重指标，按次数分级、同次按字典序"""
    if degree < 0:
        raise InputError(f"次数必须 >= 0: {degree}")
    basis: List[Exponent] = []
    for d in range(degree + 1):
        level = []
        for combo in combinations_with_replacement(range(n), d):
            exp = [0] * n
            for i in combo:
                exp[i] += 1
            level.append(tuple(exp))
        basis.extend(sorted(set(level), reverse=True))
    return basis


def basis_matrix(basis: Sequence[Exponent], Z: np.ndarray, origin: Sequence[complex]) -> np.ndarray:
    """(N, d) 矩阵，第 j 列为 (z - o)^{α_j}"""
    Z = np.asarray(Z, dtype=complex) - np.asarray(origin, dtype=complex)
    if not basis:
        return np.zeros((Z.shape[0], 0), dtype=complex)
    top = max(max(exp) for exp in basis)
    powers = Z[:, :, None] ** np.arange(top + 1)[None, None, :]
    cols = [np.prod(powers[:, np.arange(Z.shape[1]), list(exp)], axis=1) for exp in basis]
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class QuadratureSpec:
    """Gram 矩阵的求积方式"""
    method: str
    samples: int
    seed: int
    batches: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"method": self.method, "samples": self.samples, "seed": self.seed, "batches": self.batches}


@dataclass(frozen=True)
class BergmanModel:
    """
    截断 Bergman 模型

    Attributes:
        n: 复维数
        center: 权函数中心 a
        origin: 区域中心 o
        m: 乘数
        degree: 截断次数 D
        radius: 区域半径 r
        basis: 保留的多重指标
        gram: Hermite 正定 Gram 矩阵
        factor: G = L L* 的下三角因子
        quadrature: 求积方式
        pruned: 因加权范数无穷而移除的多重指标
        expr_text: φ 的文本
        weight_text: ψ 的描述
    """
    n: int
    center: Tuple[complex, ...]
    origin: Tuple[complex, ...]
    m: int
    degree: int
    radius: float
    basis: Tuple[Exponent, ...]
    gram: np.ndarray
    factor: np.ndarray
    quadrature: QuadratureSpec
    pruned: Tuple[Exponent, ...] = ()
    expr_text: str = ""
    weight_text: str = ""

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def vector(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z, dtype=complex).reshape(1, -1)
        if z.shape[1] != self.n:
            raise ArityMismatchError(f"点的维数 {z.shape[1]} 与模型维数 {self.n} 不一致")
        if np.linalg.norm(z[0] - np.asarray(self.origin)) > self.radius * (1 + 1e-12):
            raise DomainError(f"点 {z[0].tolist()} 不在 B(o, {self.radius}) 内")
        return basis_matrix(self.basis, z, self.origin)[0]

    def solve(self, v: np.ndarray) -> np.ndarray:
        """G^{-1} v"""
        return linalg.cho_solve((self.factor, True), v)

    def truncated(self, degree: int) -> "BergmanModel":
        """取总次数 <= degree 的主子矩阵（同一组样本，嵌套上确界）"""
        if not 0 <= degree <= self.degree:
            raise InputError(f"截断次数必须在 [0, {self.degree}] 内: {degree}")
        keep = [i for i, exp in enumerate(self.basis) if sum(exp) <= degree]
        if not keep:
            raise NumericalFailure(f"次数 {degree} 以内没有加权范数有限的基函数")
        gram = self.gram[np.ix_(keep, keep)]
        return BergmanModel(
            n=self.n, center=self.center, origin=self.origin, m=self.m, degree=degree,
            radius=self.radius, basis=tuple(self.basis[i] for i in keep), gram=gram,
            factor=linalg.cholesky(gram, lower=True), quadrature=self.quadrature,
            pruned=tuple(e for e in self.pruned if sum(e) <= degree),
            expr_text=self.expr_text, weight_text=self.weight_text,
        )

    def as_expr(self) -> Scale:
        """
        Ψ = (1/2m)·log Σ|q_j|²，q = L^{-1} v

        Returns:
            Scale: 与 psi_m 逐点一致的表达式
        """
        inv = linalg.solve_triangular(self.factor, np.eye(self.dimension), lower=True)
        terms = []
        for row in inv:
            mapping = _shifted_poly(self.n, self.basis, row, self.origin)
            poly = Polynomial.from_terms(self.n, mapping)
            if not poly.is_zero:
                terms.append((poly, 2.0))
        return Scale(self.n, 1.0 / (2 * self.m), LogSumPow(self.n, tuple(terms)))

    def to_dict(self) -> Dict[str, Any]:
        def pairs(M):
            return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(M)]

        return {
            "n": self.n,
            "center": [[z.real, z.imag] for z in self.center],
            "origin": [[z.real, z.imag] for z in self.origin],
            "m": self.m,
            "degree": self.degree,
            "radius": self.radius,
            "basis": [list(e) for e in self.basis],
            "pruned": [list(e) for e in self.pruned],
            "gram": pairs(self.gram),
            "factor": pairs(self.factor),
            "quadrature": self.quadrature.to_dict(),
            "expr": self.expr_text,
            "weight": self.weight_text,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


def _shifted_poly(n: int, basis: Sequence[Exponent], coeffs: np.ndarray,
                  origin: Sequence[complex]) -> Dict[Exponent, complex]:
    """Σ c_j (z - o)^{α_j} 展开为 z 的多项式系数"""
    total = Polynomial.constant(n, 0.0)
    shifted = [Polynomial.variable(n, i) - complex(origin[i]) for i in range(n)]
    for exp, c in zip(basis, coeffs):
        if c == 0:
            continue
        term = Polynomial.constant(n, complex(c))
        for i, p in enumerate(exp):
            if p:
                term = term * (shifted[i] ** p)
        total = total + term
    return total.as_dict()


def _exact_polar_gram(basis: Sequence[Exponent], n: int, t: float, r: float, log_scale: float) -> np.ndarray:
    """
    常数权 e^{log_scale}·|z - o|^{-2t} 在 B(o, r) 上的 Gram 矩阵（对角）

    ∫_{S^{2n-1}} |ω^α|² dσ = 2π^n α! / (|α|+n-1)!
    """
    diag = []
    for exp in basis:
        deg = sum(exp)
        log_sphere = (math.log(2.0) + n * math.log(math.pi) + sum(math.lgamma(a + 1) for a in exp)
                      - math.lgamma(deg + n))
        p = deg + n - t
        log_radial = 2 * p * math.log(r) - math.log(2 * p)
        diag.append(math.exp(log_sphere + log_radial + log_scale))
    return np.diag(np.array(diag, dtype=complex))


def _zero_free(poly: Polynomial, origin: Sequence[complex], r: float) -> bool:
    """|p(o)| 大于其余系数在半径 r 上的界时，p 在闭球 B(o, r) 上没有零点"""
    n = poly.n
    shifted = poly.substitute([Polynomial.variable(n, i) + complex(origin[i]) for i in range(n)])
    coeffs = shifted.as_dict()
    c0 = abs(coeffs.pop((0,) * n, 0.0))
    return c0 > sum(abs(c) * r ** sum(exp) for exp, c in coeffs.items())


def smooth_on_ball(expr: PshExpr, origin: Sequence[complex], r: float) -> bool:
    """
    φ 在闭球 B(o, r) 上光滑的充分条件

    log(Σ|p_i|^{α_i}) 需要至少一项在球上无零点，其余项的指数为偶数；
    和式要求每一项光滑，max 只接受单个参数。
    """
    node = expand(expr)
    if is_constant(node):
        return math.isfinite(evaluate(node, origin))
    if isinstance(node, LogSumPow):
        free = [_zero_free(p, origin, r) for p, _ in node.terms]
        even = [float(alpha) % 2 == 0 for _, alpha in node.terms]
        return any(free) and all(f or e for f, e in zip(free, even))
    if isinstance(node, Scale):
        return smooth_on_ball(node.child, origin, r)
    if isinstance(node, Sum):
        return all(smooth_on_ball(c, origin, r) for c in node.terms)
    if isinstance(node, Max):
        return len(node.terms) == 1 and smooth_on_ball(node.terms[0], origin, r)
    return False


def _weight_smooth(w: WeightSpec, origin: np.ndarray, r: float) -> bool:
    """ψ(z − a) 在 B(o, r) 上是否光滑"""
    center = np.asarray(w.center, dtype=complex)
    if w.kind == WeightKind.RADIAL:
        return w.t == 0 or float(np.linalg.norm(center - origin)) > r
    return smooth_on_ball(w.expr, origin - center, r)


def gauss_polar_nodes(n: int, origin: Sequence[complex], r: float, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    B(o, r) 上的张量求积节点与权

    z_j = o_j + √s_j·e^{iθ_j}。s 所在单纯形 Σ s_j <= r² 经 Duffy 变换映到单位立方体，
    每个方向取 D + 12 个 Gauss–Legendre 节点；每个 θ_j 取 2D + 8 点梯形公式。
    体积元 dλ = 2^{-n} ds dθ。

    Args:
        n: 复维数
        origin: 球心 o
        r: 半径
        degree: 基的截断次数 D

    Returns:
        (Z, W)：(N, n) 节点与 (N,) 权
    """
    x, wx = leggauss(degree + 12)
    y, wy = 0.5 * (x + 1.0), 0.5 * wx
    Y = np.stack(np.meshgrid(*([y] * n), indexing="ij"), axis=-1).reshape(-1, n)
    WY = np.prod(np.stack(np.meshgrid(*([wy] * n), indexing="ij"), axis=-1).reshape(-1, n), axis=1)

    s = np.empty_like(Y)
    remaining = np.full(Y.shape[0], r * r)
    jacobian = np.full(Y.shape[0], (r * r) ** n)
    for j in range(n):
        s[:, j] = remaining * Y[:, j]
        jacobian *= (1.0 - Y[:, j]) ** (n - 1 - j)
        remaining = remaining * (1.0 - Y[:, j])

    m_ang = 2 * degree + 8
    theta = 2.0 * math.pi * np.arange(m_ang) / m_ang
    T = np.stack(np.meshgrid(*([theta] * n), indexing="ij"), axis=-1).reshape(-1, n)

    Z = np.asarray(origin, dtype=complex) + np.sqrt(s)[:, None, :] * np.exp(1j * T)[None, :, :]
    W = (WY * jacobian * 2.0 ** (-n))[:, None] * np.full(T.shape[0], (2.0 * math.pi / m_ang) ** n)[None, :]
    return Z.reshape(-1, n), W.reshape(-1)


def _gauss_gram(V: np.ndarray, W: np.ndarray, log_rho: np.ndarray) -> np.ndarray:
    weights = W * np.exp(np.clip(log_rho, -LOG_CLAMP, LOG_CLAMP))
    gram = (V * weights[:, None]).T @ V.conj()
    return 0.5 * (gram + gram.conj().T)


def _trimmed_mean(mats: List[np.ndarray]) -> np.ndarray:
    """迹落在四分位区间内的批 Gram 矩阵取平均"""
    traces = np.array([np.real(np.trace(M)) for M in mats])
    q1, q3 = np.percentile(traces, [25, 75])
    keep = [M for M, tr in zip(mats, traces) if q1 <= tr <= q3]
    if not keep:
        keep = mats
    return sum(keep) / len(keep)


@dataclass
class _CloudSamples:
    """样本云映射到区域上的点与各环带对数体积"""
    points: np.ndarray
    log_volumes: np.ndarray
    inside: np.ndarray


def _map_cloud(cloud: SampleCloud, center: np.ndarray, origin: np.ndarray, r: float) -> _CloudSamples:
    scale = r + float(np.linalg.norm(center - origin))
    points = center + scale * cloud.points
    inside = np.linalg.norm(points - origin, axis=2) <= r
    log_volumes = np.array([log_annulus_volume(cloud.n, k) for k in cloud.ks]) + 2 * cloud.n * math.log(scale)
    return _CloudSamples(points, log_volumes, inside)


def _norm_finite(cloud: SampleCloud, log_g: np.ndarray) -> bool:
    """加权范数是否有限：中心处衰减判定加上全部环带的合并尾指数"""
    if not integrability_verdict(cloud, log_g).converges:
        return False
    pooled = []
    weighted = log_g + cloud.log_weight
    for i in range(len(cloud.ks)):
        values = weighted[i][cloud.uniform_mask[i] & np.isfinite(weighted[i])]
        if values.size:
            pooled.append(values - np.median(values))
    pooled = np.concatenate(pooled) if pooled else np.zeros(0)
    if pooled.size < 64:
        return True
    return not hill_tail_index(pooled).heavy


def _mc_gram(cloud: SampleCloud, samples: _CloudSamples, V: np.ndarray, log_rho: np.ndarray,
             workers: int) -> np.ndarray:
    K, N = cloud.points.shape[:2]
    d = V.shape[-1]
    per_batch = N // cloud.batches
    log_w = np.clip(np.where(samples.inside, log_rho + cloud.log_weight, -np.inf), -LOG_CLAMP, LOG_CLAMP)
    weights = np.where(samples.inside, np.exp(log_w), 0.0)

    def stratum(i: int) -> np.ndarray:
        mats = []
        for b in range(cloud.batches):
            sl = slice(b * per_batch, (b + 1) * per_batch)
            Vb = V[i, sl]
            mats.append((Vb * weights[i, sl, None]).T @ Vb.conj() / per_batch)
        return math.exp(samples.log_volumes[i]) * _trimmed_mean(mats)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(stratum, range(K)))
    else:
        blocks = [stratum(i) for i in range(K)]
    gram = sum(blocks) if blocks else np.zeros((d, d), dtype=complex)
    return 0.5 * (gram + gram.conj().T)


def _factorize(gram: np.ndarray) -> np.ndarray:
    if np.max(np.abs(gram - gram.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(gram))):
        raise NumericalFailure("Gram 矩阵不是 Hermite 矩阵")
    eig = linalg.eigvalsh(gram)
    floor = EIGEN_FLOOR * float(np.real(np.trace(gram)))
    if not eig[0] > floor:
        raise NumericalFailure(
            f"Gram 矩阵近奇异: 最小特征值 {eig[0]:.3e} <= {floor:.3e}，样本不足或权不可积"
        )
    return linalg.cholesky(gram, lower=True)


def build_model(
    expr: PshExpr,
    w: WeightSpec,
    a: Optional[Sequence[complex]] = None,
    m: int = 1,
    degree: Optional[int] = None,
    r: float = 1.0,
    origin: Optional[Sequence[complex]] = None,
    samples: Optional[int] = None,
    seed: int = 0,
    batches: Optional[int] = None,
    k_max: int = GRAM_K_MAX,
    workers: Optional[int] = None,
    cloud: Optional[SampleCloud] = None,
    prune: bool = True,
) -> BergmanModel:
    """
    构造截断 Bergman 模型

    Args:
        expr: φ
        w: ψ
        a: 权函数中心，缺省为 w.center
        m: 正整数乘数
        degree: 截断次数 D，缺省 6（n <= 2）或 4
        r: 区域半径
        origin: 区域中心，缺省为原点
        samples: 每个环带的样本数
        seed: 随机种子
        batches: 批数
        k_max: 环带层数上限
        workers: 并行线程数
        cloud: 预先构造的样本云（环带以 a 为中心、以 r + |a - o| 为单位半径）
        prune: 是否移除加权范数无穷的基函数

    Returns:
        BergmanModel: 已分解的模型

    Raises:
        NumericalFailure: Gram 矩阵奇异或没有可用的基函数
    """
    n = expr.n
    if w.n != n:
        raise ArityMismatchError(f"表达式维数 {n} 与权函数维数 {w.n} 不一致")
    if int(m) != m or m < 1:
        raise InputError(f"乘数 m 必须是正整数: {m}")
    if not r > 0:
        raise InputError(f"区域半径必须为正数: {r}")
    m = int(m)
    degree = default_degree(n) if degree is None else int(degree)
    w = w if a is None else w.recentered(a)
    center = np.asarray(w.center, dtype=complex)
    origin = np.zeros(n, dtype=complex) if origin is None else np.asarray(origin, dtype=complex)
    if origin.shape != (n,):
        raise ArityMismatchError(f"区域中心维数 {origin.shape} 与 {n} 不一致")
    basis = monomial_basis(n, degree)
    workers = config.WORKERS if workers is None else int(workers)

    exact = (
        is_constant(expr) and w.kind == WeightKind.RADIAL
        and np.array_equal(center, origin)
    )
    if exact:
        level = evaluate(expr, origin)
        if not math.isfinite(level):
            raise NumericalFailure("常数 φ 的取值不是有限数")
        gram = _exact_polar_gram(basis, n, w.t, r, -2.0 * m * level)
        quadrature = QuadratureSpec("exact", 0, seed)
        kept, pruned = basis, []
    elif n <= GAUSS_MAX_DIM and smooth_on_ball(expr, origin, r) and _weight_smooth(w, origin, r):
        Z, W = gauss_polar_nodes(n, origin, r, degree)
        log_rho = -2.0 * m * evaluate_many(expr, Z) - 2.0 * w.psi_many(Z - center)
        gram = _gauss_gram(basis_matrix(basis, Z, origin), W, log_rho)
        quadrature = QuadratureSpec("gauss_polar", int(W.size), seed)
        kept, pruned = basis, []
    else:
        if cloud is None:
            cloud = build_cloud(n, 0, k_max, samples or GRAM_SAMPLES, seed, batches, workers=workers)
        mapped = _map_cloud(cloud, center, origin, r)
        flat = mapped.points.reshape(-1, n)
        with np.errstate(invalid="ignore"):
            log_rho = (-2.0 * m * evaluate_many(expr, flat) - 2.0 * w.psi_many(flat - center)).reshape(
                cloud.points.shape[:2]
            )
        log_rho = np.where(mapped.inside, log_rho, -np.inf)
        V = basis_matrix(basis, flat, origin).reshape(cloud.points.shape[0], cloud.points.shape[1], -1)

        keep_idx, pruned = [], []
        for j, exp in enumerate(basis):
            if not prune:
                keep_idx.append(j)
                continue
            with np.errstate(divide="ignore"):
                log_g = 2.0 * np.log(np.abs(V[..., j])) + log_rho
            if _norm_finite(cloud, log_g):
                keep_idx.append(j)
            else:
                pruned.append(exp)
        if pruned:
            logger.info(f"移除 {len(pruned)} 个加权范数无穷的基函数: {pruned}")
        if not keep_idx:
            raise NumericalFailure("没有加权范数有限的基函数，权在中心附近不可积")
        kept = [basis[j] for j in keep_idx]
        gram = _mc_gram(cloud, mapped, V[..., keep_idx], log_rho, workers)
        quadrature = QuadratureSpec("annulus_mc", cloud.samples_per_annulus, seed, cloud.batches)

    factor = _factorize(gram)
    model = BergmanModel(
        n=n,
        center=tuple(complex(z) for z in center),
        origin=tuple(complex(z) for z in origin),
        m=m,
        degree=degree,
        radius=float(r),
        basis=tuple(kept),
        gram=gram,
        factor=factor,
        quadrature=quadrature,
        pruned=tuple(pruned),
        expr_text=str(expr),
        weight_text=w.describe(),
    )
    logger.debug(f"Bergman 模型: n={n}, m={m}, D={degree}, 维数 {model.dimension}, 求积 {quadrature.method}")
    return model


def bergman_value(model: BergmanModel, z: Sequence[complex]) -> float:
    """B(z) = v(z)* G^{-1} v(z)"""
    v = model.vector(z)
    return float(np.real(v.conj() @ model.solve(v)))


def eigen_oracle_value(model: BergmanModel, z: Sequence[complex]) -> float:
    """广义特征值问题 (v v*) x = λ G x 的最大特征值，即单位范数 h 上 |h(z)|² 的上确界"""
    v = model.vector(z)
    values = linalg.eigh(np.outer(v, v.conj()), model.gram, eigvals_only=True)
    return float(values[-1])


def psi_m(model: BergmanModel, z: Sequence[complex]) -> float:
    """
    Ψ(z) = (1/2m)·log B(z)

    Raises:
        NumericalFailure: B(z) = 0
    """
    value = bergman_value(model, z)
    if not value > 0:
        raise NumericalFailure(f"Bergman 函数在 {list(z)} 处为零")
    return math.log(value) / (2 * model.m)


def kernel(model: BergmanModel, z: Sequence[complex], w: Sequence[complex]) -> complex:
    """K(z, w) = Σ q_j(z)·conj(q_j(w))，q 为单位正交基"""
    vz, vw = model.vector(z), model.vector(w)
    return complex(np.conj(vz.conj() @ model.solve(vw)))


def reproducing_check(model: BergmanModel, z: Sequence[complex], trials: int = 8, seed: int = 0) -> float:
    """
    检查 ⟨h, K(·, z)⟩ = h(z)

    h = Σ c_α (ζ - o)^α 取随机系数，内积由模型的 Gram 矩阵给出。

    Returns:
        float: 最大相对误差
    """
    rng = substream(seed, TAG_GRAM, 1)
    v = model.vector(z)
    reproduced = model.gram @ model.solve(v)
    worst = 0.0
    for _ in range(trials):
        c = rng.standard_normal(model.dimension) + 1j * rng.standard_normal(model.dimension)
        direct = c @ v
        inner = c @ reproduced
        worst = max(worst, abs(inner - direct) / max(abs(direct), 1e-300))
    return float(worst)


# ----------------------------------------------------------------------
# 数值探针
# ----------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    """B 关于截断次数单调不减的检查"""
    degrees: List[int]
    points: int
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"degrees": self.degrees, "points": self.points, "violations": self.violations, "passed": self.passed}


def degree_monotonicity_check(model: BergmanModel, points: Sequence[Sequence[complex]]) -> MonotonicityReport:
    """在各点上检查 B_0 <= B_1 <= ... <= B_D"""
    lowest = min(sum(e) for e in model.basis)
    degrees = list(range(lowest, model.degree + 1))
    models = [model.truncated(d) for d in degrees]
    report = MonotonicityReport(degrees=degrees, points=len(points))
    for z in points:
        values = [bergman_value(mod, z) for mod in models]
        for d, lo, hi in zip(degrees[1:], values[:-1], values[1:]):
            if hi < lo * (1 - 1e-9) - 1e-300:
                report.violations.append(f"z={list(z)}: B_{d} = {hi:.6e} < B_{d - 1} = {lo:.6e}")
    return report


@dataclass
class SandwichRow:
    """一个 (点, m) 组合"""
    point: Tuple[complex, ...]
    m: int
    phi: float
    psi: float
    sup_phi: float

    def to_dict(self) -> Dict[str, Any]:
        return {"point": [[z.real, z.imag] for z in self.point], "m": self.m,
                "phi": self.phi, "psi": self.psi, "sup_phi": self.sup_phi}


@dataclass
class SandwichReport:
    """
    φ(z) - c1/m <= Ψ_z(z) <= sup_{B(z, r')} φ + (l - n)·log r'/m + c2/m 的拟合结果

    Attributes:
        c1, c2: 拟合常数
        violations: 非有限值或被拒绝的模型
        non_decreasing: |Ψ - φ| 随 m 不减的点
    """
    c1: float
    c2: float
    rows: List[SandwichRow] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    non_decreasing: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "rows": [r.to_dict() for r in self.rows],
            "violations": self.violations,
            "non_decreasing": self.non_decreasing,
            "warnings": self.warnings,
            "passed": self.passed,
        }


def sandwich_check(
    expr: PshExpr,
    points: Sequence[Sequence[complex]],
    m_list: Sequence[int] = (1, 2, 4, 8),
    degree: Optional[int] = None,
    r: float = 0.25,
    t: Optional[float] = None,
    l: Optional[float] = None,
    delta: Optional[float] = None,
    seed: int = 0,
    samples: Optional[int] = None,
    workers: Optional[int] = None,
) -> SandwichReport:
    """
    Ψ_z^m(z) 与 φ(z) 的夹逼关系

    区域取 B(z, r)，ψ = t·log|ζ - z|，要求 l <= t <= n - δ（|ζ - z| < 1 时
    l·log|ζ| >= ψ >= (n - δ)·log|ζ|）。

    Args:
        expr: φ
        points: 测试点（φ 有限）
        m_list: 乘数
        degree: 截断次数
        r: 区域半径，亦作为上界中的 r'
        t: 径向参数，缺省 n - 1
        l: 缺省为 t
        delta: 缺省为 n - t
        seed: 随机种子
        samples: 每个环带的样本数
        workers: 并行线程数

    Returns:
        SandwichReport: 拟合常数与违反项
    """
    n = expr.n
    t = float(n - 1) if t is None else float(t)
    l = t if l is None else float(l)
    delta = n - t if delta is None else float(delta)
    if not (0 <= t < n and l <= t <= n - delta + 1e-12 and delta > 0):
        raise InputError(f"径向参数需满足 l <= t <= n - δ: l={l}, t={t}, δ={delta}")
    m_list = sorted(int(m) for m in m_list)
    if not m_list or m_list[0] < 1:
        raise InputError(f"m 必须是正整数: {m_list}")

    report = SandwichReport(c1=0.0, c2=-math.inf)
    cloud = build_cloud(n, 0, GRAM_K_MAX, samples or GRAM_SAMPLES, seed, workers=workers)
    for idx, raw in enumerate(points):
        z = tuple(complex(c) for c in raw)
        phi_z = evaluate(expr, z)
        if not math.isfinite(phi_z):
            report.warnings.append(f"跳过 φ = -∞ 的点 {list(z)}")
            continue
        ball = np.asarray(z) + uniform_ball(substream(seed, TAG_GRAM, 2, idx), 512, n, r)
        sup_phi = float(np.max(evaluate_many(expr, ball)))
        gaps = []
        for m in m_list:
            try:
                model = build_model(expr, make_radial(t, z), m=m, degree=degree, r=r,
                                    origin=z, seed=seed, workers=workers, cloud=cloud)
                value = psi_m(model, z)
            except NumericalFailure as e:
                report.violations.append(f"z={list(z)}, m={m}: {e}")
                continue
            report.rows.append(SandwichRow(z, m, phi_z, value, sup_phi))
            report.c1 = max(report.c1, m * (phi_z - value))
            report.c2 = max(report.c2, m * (value - sup_phi) - (l - n) * math.log(r))
            gaps.append(abs(value - phi_z))
        if any(b > a * 1.1 + 1e-9 for a, b in zip(gaps, gaps[1:])):
            report.non_decreasing.append(f"z={list(z)}: |Ψ - φ| = {np.round(gaps, 4).tolist()}")
    if not report.rows:
        report.c2 = 0.0
    logger.info(f"夹逼检查: c1={report.c1:.4f}, c2={report.c2:.4f}, 违反 {len(report.violations)} 项")
    return report


@dataclass
class AttenuationPoint:
    """
    z ↦ log B_z(z) 在网格点处的 Lelong 数

    Attributes:
        point: 网格点
        slope: 壳上确界对 log ρ 的斜率
        stderr: 斜率标准误
        nu: ν_{p,ψ}(φ)
        predicted_positive: ν > 1
        measured_positive: 斜率显著为正
    """
    point: Tuple[complex, ...]
    slope: float
    stderr: float
    nu: float
    predicted_positive: bool
    measured_positive: bool

    @property
    def agree(self) -> bool:
        return self.predicted_positive == self.measured_positive

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": [[z.real, z.imag] for z in self.point],
            "slope": self.slope,
            "stderr": self.stderr,
            "nu": self.nu,
            "predicted_positive": self.predicted_positive,
            "measured_positive": self.measured_positive,
            "agree": self.agree,
        }


def attenuation_probe(
    expr: PshExpr,
    w: WeightSpec,
    grid: Sequence[Sequence[complex]],
    m: int = 1,
    degree: Optional[int] = None,
    r: float = 0.5,
    seed: int = 0,
    shells: int = 6,
    per_shell: int = 8,
    nu: Optional[Sequence[float]] = None,
    samples: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[AttenuationPoint]:
    """
    log B_z(z) 在网格点 p 处 Lelong 数的符号

    ρ_j = r·2^{-j-1}，S_j = max_{|z - p| = ρ_j} log B_z(z)，斜率 dS/d(log ρ)
    即 Lelong 数估计；ν_{p,ψ}(φ) > 1 时应为正，< 1 时应为零。

    Args:
        expr: φ
        w: ψ
        grid: 网格点
        m: 乘数
        degree: 截断次数
        r: 区域 B(p, r) 的半径
        seed: 随机种子
        shells: 壳数（>= 4）
        per_shell: 每个壳上的点数
        nu: 各点已知的 ν_{p,ψ}(φ)，缺省由阈值估计给出
        samples: 每个环带的样本数
        workers: 并行线程数

    Returns:
        List[AttenuationPoint]: 每个网格点一行
    """
    n = expr.n
    if shells < 4:
        raise InputError(f"壳数必须 >= 4: {shells}")
    if nu is not None and len(nu) != len(grid):
        raise InputError("nu 的长度必须与网格点数一致")
    report = audit_admissibility(w, seed=seed, workers=workers or 1)
    if not report.admissible:
        raise InputError(f"权函数未通过可容许性审计: {w.describe()}, {report.warnings}")
    cloud = build_cloud(n, 0, GRAM_K_MAX, samples or GRAM_SAMPLES, seed, workers=workers)
    results = []
    for idx, raw in enumerate(grid):
        p = np.asarray([complex(c) for c in raw])
        nu_p = float(nu[idx]) if nu is not None else estimate_threshold(expr, w.recentered(p), seed=seed).nu_hat
        radii, sups = [], []
        for j in range(1, shells + 1):
            rho = r * 2.0 ** (-j - 1)
            dirs = uniform_sphere(substream(seed, TAG_GRAM, 3, idx, j), per_shell, n)
            values = []
            for z in p + rho * dirs:
                try:
                    model = build_model(expr, w.recentered(z), m=m, degree=degree, r=r, origin=p,
                                        seed=seed, workers=workers, cloud=cloud)
                    values.append(math.log(bergman_value(model, z)))
                except NumericalFailure as e:
                    logger.warning(f"衰减探针: 点 {z.tolist()} 处模型被拒绝: {e}")
            if values:
                radii.append(math.log(rho))
                sups.append(max(values))
        if len(radii) < 4:
            raise NumericalFailure(f"网格点 {p.tolist()} 处可用的壳不足")
        fit = fit_slope(radii, sups)
        measured = fit.slope > max(POSITIVE_SLOPE, 2 * fit.stderr)
        results.append(AttenuationPoint(tuple(p), fit.slope, fit.stderr, nu_p, nu_p > 1.0, measured))
    agree = sum(1 for row in results if row.agree)
    logger.info(f"衰减探针: {agree}/{len(results)} 个网格点符号一致")
    return results
