"""
权函数模块

表示权函数 ψ（径向 t·log|z−a| 或一般表达式权），并在二进球面壳上
数值审计可容许权类 W(τ, l, M, α) 的四个条件。审计结论只作参考，
不阻止后续估计。
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lelong.errors import ArityMismatchError, NonPositiveParameterError, WeightRangeError
from lelong.estimators import fit_slope, log_median_of_means
from lelong.expr import LogSumPow, PshExpr, Scale, Sum, evaluate_many, expand, to_text
from lelong.log import logger
from lelong.sampling import (
    TAG_AUDIT,
    annulus_bounds,
    annulus_radii,
    cusp_depth,
    draw_mixture_directions,
    log_annulus_volume,
    substream,
    uniform_sphere,
)

AUDIT_SHELLS = tuple(range(4, 21))


class WeightKind(Enum):
    """权函数类型"""
    RADIAL = "radial"
    EXPR = "expr"


@dataclass(frozen=True)
class AdmissibleParams:
    """
    声明的可容许参数

    Attributes:
        tau: 可积裕度，e^{-2(1+τ)ψ} 局部可积
        l: ψ 在原点的 Lelong 数
        M: 孤立奇点指数，ψ >= M·log|z|
        alpha: e^{2ψ} 的 Hölder 指数，取值 (0, 1]
    """
    tau: float
    l: float
    M: float
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("tau", "l", "M", "alpha"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise NonPositiveParameterError(f"参数 {name} 必须为正数: {value}")
        if self.alpha > 1:
            raise WeightRangeError(f"Hölder 指数必须在 (0, 1] 内: {self.alpha}")


def _as_point(a: Sequence[complex]) -> Tuple[complex, ...]:
    return tuple(complex(c) for c in np.asarray(a, dtype=complex).reshape(-1))


@dataclass(frozen=True)
class WeightSpec:
    """
    权函数 ψ

    Attributes:
        kind: RADIAL 表示 t·log|z−a|，EXPR 表示 expr(z−a)
        center: 中心 a
        t: 径向参数
        expr: 表达式权
        params: 声明的可容许参数（径向 t = 0 时为空）
    """
    kind: WeightKind
    center: Tuple[complex, ...]
    t: float = 0.0
    expr: Optional[PshExpr] = None
    params: Optional[AdmissibleParams] = None

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def is_zero(self) -> bool:
        return self.kind == WeightKind.RADIAL and self.t == 0

    def psi_many(self, D: np.ndarray) -> np.ndarray:
        """
        在位移 D = z − a 上求 ψ

        Args:
            D: (N, n) 复数组

        Returns:
            np.ndarray: (N,) 实数组
        """
        D = np.asarray(D, dtype=complex)
        if D.ndim == 1:
            D = D.reshape(1, -1)
        if D.shape[1] != self.n:
            raise ArityMismatchError(f"点的维数 {D.shape[1]} 与权函数维数 {self.n} 不一致")
        if self.kind == WeightKind.RADIAL:
            if self.t == 0:
                return np.zeros(D.shape[0])
            with np.errstate(divide="ignore"):
                return self.t * np.log(np.linalg.norm(D, axis=1))
        return evaluate_many(self.expr, D)

    def log_weight_many(self, Z: np.ndarray) -> np.ndarray:
        """在点 Z 上求 ψ(Z − a)"""
        Z = np.asarray(Z, dtype=complex)
        if Z.ndim == 1:
            Z = Z.reshape(1, -1)
        return self.psi_many(Z - np.asarray(self.center))

    def evaluate(self, z: Sequence[complex]) -> float:
        return float(self.log_weight_many(np.asarray(z, dtype=complex).reshape(1, -1))[0])

    def recentered(self, a: Sequence[complex]) -> "WeightSpec":
        """同一 ψ 换到新的中心"""
        a = _as_point(a)
        if len(a) != self.n:
            raise ArityMismatchError(f"中心维数 {len(a)} 与权函数维数 {self.n} 不一致")
        return WeightSpec(self.kind, a, self.t, self.expr, self.params)

    def scaled(self, c: float) -> "WeightSpec":
        """c·ψ，c > 0"""
        if not c > 0:
            raise NonPositiveParameterError(f"权函数倍数必须为正数: {c}")
        if self.kind == WeightKind.RADIAL:
            return WeightSpec(self.kind, self.center, self.t * c, None, None)
        return WeightSpec(self.kind, self.center, 0.0, Scale(self.n, c, self.expr), None)

    def describe(self) -> str:
        if self.kind == WeightKind.RADIAL:
            return f"{self.t}*log|z-a|"
        return to_text(self.expr)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "center": [[c.real, c.imag] for c in self.center],
            "t": self.t,
            "expr": None if self.expr is None else to_text(self.expr),
            "params": None if self.params is None else asdict(self.params),
        }


def make_radial(
    t: float,
    a: Sequence[complex],
    params: Optional[AdmissibleParams] = None,
) -> WeightSpec:
    """
    径向权 ψ(z) = t·log|z − a|

    Args:
        t: 参数，0 <= t < n
        a: 中心
        params: 声明参数，缺省按 |z|^{t} 的解析性质给出

    Returns:
        WeightSpec: 径向权

    Raises:
        WeightRangeError: t 不在 [0, n)
    """
    center = _as_point(a)
    n = len(center)
    t = float(t)
    if not 0 <= t < n:
        raise WeightRangeError(f"径向权要求 0 <= t < n={n}: t={t}")
    if params is None and t > 0:
        params = AdmissibleParams(tau=(n - t) / (2 * t), l=t, M=t, alpha=min(1.0, 2 * t))
    return WeightSpec(WeightKind.RADIAL, center, t, None, params)


def make_expr_weight(
    expr: PshExpr,
    center: Sequence[complex],
    tau: float,
    l: float,
    M: float,
    alpha: float = 1.0,
) -> WeightSpec:
    """
    表达式权 ψ(z) = expr(z − a)

    Args:
        expr: 多重次调和表达式
        center: 中心
        tau, l, M, alpha: 声明的可容许参数

    Returns:
        WeightSpec: 表达式权
    """
    center = _as_point(center)
    if expr.n != len(center):
        raise ArityMismatchError(f"表达式维数 {expr.n} 与中心维数 {len(center)} 不一致")
    return WeightSpec(WeightKind.EXPR, center, 0.0, expr, AdmissibleParams(tau, l, M, alpha))


def family_predictions(expr: PshExpr) -> Optional[Tuple[float, float]]:
    """
    c·log Σ|f_i|^{β_i} 形式的理论预测

    Lelong 数为 c·min β_i·ord(f_i)，Hölder 指数为 min(1, c·min β_i)。

    Returns:
        Optional[(lelong, hoelder)]: 不是该形式时返回 None
    """
    node = expand(expr)
    c = 1.0
    while True:
        if isinstance(node, Scale):
            c *= node.c
            node = node.child
        elif isinstance(node, Sum) and len(node.terms) == 1:
            node = node.terms[0]
        else:
            break
    if not isinstance(node, LogSumPow):
        return None
    lelong = c * min(beta * max(poly.order, 0) for poly, beta in node.terms)
    hoelder = min(1.0, c * min(beta for _, beta in node.terms))
    return lelong, hoelder


@dataclass
class AdmissibilityReport:
    """
    可容许性审计报告，每个布尔结论都附带产生它的数值证据

    Attributes:
        analytic: 径向权按解析值直接给出
        integrability_margin_ok: e^{-2(1+τ)ψ} 的环带质量是否几何衰减
        decay_exponent: 质量衰减指数（每个二进层）
        decay_stderr: 衰减指数标准误
        predicted_decay: 径向权的理论衰减指数 2n − 2t(1+τ)
        lower_bound_ok: ψ >= M·log|z| 是否在样本上成立
        lojasiewicz_probe: 观测到的最大比值 ψ(z)/log|z|，即可行 M 的下界
        hoelder_ok: Hölder 商是否有界
        hoelder_quotient: 采样点对上 |e^{2ψ(x)} − e^{2ψ(y)}|/|x−y|^α 的最大值
        hoelder_slope: 各壳最大 Hölder 商的 log2 对 k 的斜率
        lelong_estimate: 球面上确界对 log r 的斜率
        lelong_ok: 与声明的 l 是否一致
    """
    weight: str
    analytic: bool
    integrability_margin_ok: bool
    decay_exponent: float
    decay_stderr: float
    lower_bound_ok: bool
    lojasiewicz_probe: float
    hoelder_ok: bool
    hoelder_quotient: float
    hoelder_slope: float
    hoelder_stderr: float
    lelong_estimate: float
    lelong_stderr: float
    lelong_ok: bool
    predicted_decay: Optional[float] = None
    predicted_lelong: Optional[float] = None
    predicted_hoelder: Optional[float] = None
    shells: List[int] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.integrability_margin_ok and self.lower_bound_ok and self.hoelder_ok and self.lelong_ok

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["admissible"] = self.admissible
        return data


def _radial_report(w: WeightSpec) -> AdmissibilityReport:
    n, t = w.n, w.t
    params = w.params
    warnings = []
    if params is None:
        warnings.append("t = 0 的零权不属于可容许权类（l 必须为正）")
        return AdmissibilityReport(
            weight=w.describe(), analytic=True,
            integrability_margin_ok=True, decay_exponent=2.0 * n, decay_stderr=0.0,
            lower_bound_ok=False, lojasiewicz_probe=0.0,
            hoelder_ok=True, hoelder_quotient=0.0, hoelder_slope=0.0, hoelder_stderr=0.0,
            lelong_estimate=0.0, lelong_stderr=0.0, lelong_ok=False,
            predicted_decay=2.0 * n, predicted_lelong=0.0, predicted_hoelder=1.0,
            warnings=warnings,
        )
    decay = 2.0 * n - 2.0 * t * (1.0 + params.tau)
    return AdmissibilityReport(
        weight=w.describe(), analytic=True,
        integrability_margin_ok=decay > 0, decay_exponent=decay, decay_stderr=0.0,
        lower_bound_ok=t <= params.M, lojasiewicz_probe=t,
        hoelder_ok=params.alpha <= min(1.0, 2.0 * t), hoelder_quotient=max(1.0, 2.0 * t),
        hoelder_slope=params.alpha - 2.0 * t, hoelder_stderr=0.0,
        lelong_estimate=t, lelong_stderr=0.0, lelong_ok=math.isclose(t, params.l),
        predicted_decay=decay, predicted_lelong=t, predicted_hoelder=min(1.0, 2.0 * t),
        shells=list(AUDIT_SHELLS), warnings=warnings,
    )


@dataclass
class _ShellStats:
    k: int
    log_mass: float
    log_mass_se: float
    worst_ratio: float
    max_quotient: float
    sphere_sup: float


def _audit_shell(w: WeightSpec, k: int, seed: int, samples: int, batches: int) -> _ShellStats:
    n = w.n
    params = w.params
    rng = substream(seed, TAG_AUDIT, k)
    r_in, r_out = annulus_bounds(k)

    # (i) 环带上 e^{-2(1+τ)ψ} 的质量
    draw = draw_mixture_directions(rng, samples, n, 0.5, cusp_depth(AUDIT_SHELLS[-1]))
    points = annulus_radii(rng, samples, n, r_in, r_out)[:, None] * draw.directions
    psi = w.psi_many(points)
    log_f = -2.0 * (1.0 + params.tau) * psi + draw.log_weight
    log_f = np.nan_to_num(log_f, nan=-np.inf, posinf=700.0)
    log_mean, log_se = log_median_of_means(log_f, batches)
    log_mass = log_annulus_volume(n, k) + log_mean

    # (ii)(iv) 球面 |z| = 2^{-k} 上的比值与上确界
    sphere = r_out * uniform_sphere(rng, samples, n)
    psi_sphere = w.psi_many(sphere)
    ratios = psi_sphere / math.log(r_out)
    worst = float(np.max(np.nan_to_num(ratios, nan=np.inf, posinf=np.inf)))
    finite = psi_sphere[np.isfinite(psi_sphere)]
    sphere_sup = float(np.max(finite)) if finite.size else -math.inf

    # (iii) Hölder 商：y = x + δ，|δ| = |x|·u
    u = rng.random(samples)
    delta = uniform_sphere(rng, samples, n) * (r_out * u)[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        e_x = np.exp(2.0 * psi_sphere)
        e_y = np.exp(2.0 * w.psi_many(sphere + delta))
        quotient = np.abs(e_x - e_y) / (r_out * u) ** params.alpha
    quotient = quotient[np.isfinite(quotient)]
    max_quotient = float(np.max(quotient)) if quotient.size else 0.0

    logger.debug(f"审计壳 k={k}: log质量={log_mass:.3f}, 最大比值={worst:.3f}")
    return _ShellStats(k, log_mass, log_se, worst, max_quotient, sphere_sup)


def audit_admissibility(
    w: WeightSpec,
    seed: int,
    samples: int = 2048,
    batches: int = 16,
    workers: int = 1,
    shells: Sequence[int] = AUDIT_SHELLS,
) -> AdmissibilityReport:
    """
    数值审计可容许权的四个条件

    径向权按解析值直接给出；表达式权在 r_k = 2^{-k} 的壳上检查：
    (i) ∫ e^{-2(1+τ)ψ} 的环带衰减指数；(ii) ψ/log|z| 的最大值不超过 M；
    (iii) Hölder 商有界；(iv) 球面上确界对 log r 的斜率作为 Lelong 数估计。

    Args:
        w: 权函数
        seed: 随机种子
        samples: 每个壳的样本数
        batches: 中位数均值的批数
        workers: 并行线程数（结果与线程数无关）
        shells: 壳编号

    Returns:
        AdmissibilityReport: 审计报告
    """
    if w.kind == WeightKind.RADIAL:
        return _radial_report(w)

    params = w.params
    shells = list(shells)
    logger.info(f"开始可容许性审计: ψ = {w.describe()}, 壳数 {len(shells)}")

    def task(k: int) -> _ShellStats:
        return _audit_shell(w, k, seed, samples, batches)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(task, shells))
    else:
        stats = [task(k) for k in shells]

    warnings: List[str] = []
    ks = np.array([s.k for s in stats], dtype=float)

    log2_mass = np.array([s.log_mass for s in stats]) / math.log(2.0)
    log2_se = np.array([s.log_mass_se for s in stats]) / math.log(2.0)
    decay = fit_slope(ks, -log2_mass, log2_se)
    margin_ok = decay.slope > 2.0 * decay.stderr

    worst = max(s.worst_ratio for s in stats)
    lower_ok = worst <= params.M * (1.0 + 1e-9)

    quotients = np.array([s.max_quotient for s in stats])
    positive = quotients > 0
    if positive.sum() >= 4:
        hoelder = fit_slope(ks[positive], np.log2(quotients[positive]))
        hoelder_slope, hoelder_se = hoelder.slope, hoelder.stderr
    else:
        hoelder_slope, hoelder_se = 0.0, 0.0
    hoelder_ok = hoelder_slope <= 0.1 + 2.0 * hoelder_se

    sups = np.array([s.sphere_sup for s in stats])
    usable = np.isfinite(sups)
    if usable.sum() < len(stats):
        warnings.append(f"{len(stats) - int(usable.sum())} 个壳的 ψ 全为 -inf，已跳过")
    if usable.sum() >= 4:
        log_r = -ks[usable] * math.log(2.0)
        lelong = fit_slope(log_r, sups[usable])
        l_est, l_se = lelong.slope, lelong.stderr
    else:
        l_est, l_se = math.nan, math.nan
    lelong_ok = bool(np.isfinite(l_est)) and abs(l_est - params.l) <= 0.1 * max(1.0, params.l) + 3.0 * l_se

    predicted = family_predictions(w.expr)
    report = AdmissibilityReport(
        weight=w.describe(), analytic=False,
        integrability_margin_ok=bool(margin_ok), decay_exponent=decay.slope, decay_stderr=decay.stderr,
        lower_bound_ok=bool(lower_ok), lojasiewicz_probe=float(worst),
        hoelder_ok=bool(hoelder_ok), hoelder_quotient=float(quotients.max()),
        hoelder_slope=float(hoelder_slope), hoelder_stderr=float(hoelder_se),
        lelong_estimate=float(l_est), lelong_stderr=float(l_se), lelong_ok=bool(lelong_ok),
        predicted_lelong=None if predicted is None else predicted[0],
        predicted_hoelder=None if predicted is None else predicted[1],
        shells=[int(k) for k in ks], warnings=warnings,
    )
    for name, ok in (
        ("可积裕度", margin_ok), ("孤立奇点下界", lower_ok),
        ("Hölder 连续性", hoelder_ok), ("Lelong 数", lelong_ok),
    ):
        if not ok:
            report.warnings.append(f"{name}检查未通过")
    if report.warnings:
        logger.warning(f"可容许性审计: {'; '.join(report.warnings)}")
    logger.info(f"可容许性审计完成: lelong≈{l_est:.3f}, decay≈{decay.slope:.3f}")
    return report
