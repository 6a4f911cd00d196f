"""
广义 Lelong 数性质的数值检查

- 倍数性: ν(cφ) = c·ν(φ)
- 次可加性: ν(φ + φ') <= ν(φ) + ν(φ')
- 最大值: ν(max(φ, φ')) >= min(ν(φ), ν(φ'))
- 双全纯不变性: ν_{0,t}(φ∘f) = ν_{0,t}(φ)
- 奇点平移：ν_{a,ψ}(φ) = 1 + δ 时，s = 1、权 (1-ε)ψ 的积分在 ε < τδ 时发散
- 上水平集扫描
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lelong.errors import ArityMismatchError, InputError, NumericalFailure
from lelong.expr import Max, PolyMap, PshExpr, Scale, Sum, compose
from lelong.log import logger
from lelong.montecarlo.cloud import SampleCloud, cloud_for_budget, evaluate_cloud
from lelong.montecarlo.profile import integrability_verdict
from lelong.montecarlo.threshold import ThresholdEstimate, estimate_threshold
from lelong.weights import WeightSpec, make_radial


@dataclass
class PropertyReport:
    """
    性质检查报告

    Attributes:
        name: 性质名称
        passed: 是否通过
        values: 参与比较的数值
        violations: 违反描述
        warnings: 警告
    """
    name: str
    passed: bool
    values: Dict[str, Any] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "values": self.values,
            "violations": self.violations,
            "warnings": self.warnings,
        }


def _summary(est: ThresholdEstimate) -> Dict[str, Any]:
    return {"nu_hat": est.nu_hat, "ci": list(est.ci)}


def _estimate(expr: PshExpr, w: WeightSpec, seed: int, cloud: SampleCloud, budget: Dict[str, Any]) -> ThresholdEstimate:
    return estimate_threshold(
        expr, w, bracket=budget.get("bracket"), tol=budget.get("tol"), seed=seed, cloud=cloud
    )


def scaling_check(expr: PshExpr, c: float, w: WeightSpec, seed: int = 0, **budget) -> PropertyReport:
    """
    倍数性 ν(cφ) = c·ν(φ)，容差为两者区间半宽之和

    Args:
        expr: φ
        c: 正倍数
        w: 权函数
        seed: 随机种子
        **budget: 采样预算（k_min, k_max, n_samples, batches, workers, bracket, tol）

    Returns:
        PropertyReport: 检查报告
    """
    cloud = cloud_for_budget(expr.n, seed, budget)
    base = _estimate(expr, w, seed, cloud, budget)
    scaled = _estimate(Scale(expr.n, c, expr), w, seed, cloud, budget)
    slack = c * base.half_width + scaled.half_width
    gap = abs(scaled.nu_hat - c * base.nu_hat)
    report = PropertyReport(
        name="scaling",
        passed=gap <= slack,
        values={"c": c, "phi": _summary(base), "c_phi": _summary(scaled), "gap": gap, "slack": slack},
        warnings=base.warnings + scaled.warnings,
    )
    if not report.passed:
        report.violations.append(f"|ν(cφ) - c·ν(φ)| = {gap:.4f} > {slack:.4f}")
    return report


def hoelder_property_suite(
    expr1: PshExpr, expr2: PshExpr, w: WeightSpec, seed: int = 0, **budget
) -> PropertyReport:
    """
    次可加性与最大值性质

    估计 ν(φ)、ν(φ')、ν(φ+φ')、ν(max(φ, φ'))，检查
    ν(φ+φ') <= ν(φ) + ν(φ') + slack 与 ν(max) >= min(ν(φ), ν(φ')) - slack，
    slack 为参与比较的区间半宽之和。

    Args:
        expr1: φ
        expr2: φ'
        w: 权函数
        seed: 随机种子
        **budget: 采样预算

    Returns:
        PropertyReport: 检查报告
    """
    if expr1.n != expr2.n:
        raise ArityMismatchError(f"两个表达式维数不一致: {expr1.n} vs {expr2.n}")
    n = expr1.n
    cloud = cloud_for_budget(n, seed, budget)
    logger.info(f"性质检查: φ = {expr1}, φ' = {expr2}")

    est1 = _estimate(expr1, w, seed, cloud, budget)
    est2 = _estimate(expr2, w, seed, cloud, budget)
    est_sum = _estimate(Sum(n, (expr1, expr2)), w, seed, cloud, budget)
    est_max = _estimate(Max(n, (expr1, expr2)), w, seed, cloud, budget)

    report = PropertyReport(
        name="subadditivity_and_max",
        passed=True,
        values={
            "phi": _summary(est1),
            "phi_prime": _summary(est2),
            "sum": _summary(est_sum),
            "max": _summary(est_max),
        },
    )
    slack_sum = est1.half_width + est2.half_width + est_sum.half_width
    if est_sum.nu_hat > est1.nu_hat + est2.nu_hat + slack_sum:
        report.violations.append(
            f"ν(φ+φ') = {est_sum.nu_hat:.4f} > ν(φ) + ν(φ') + slack = "
            f"{est1.nu_hat + est2.nu_hat + slack_sum:.4f}"
        )
    slack_max = est1.half_width + est2.half_width + est_max.half_width
    if est_max.nu_hat < min(est1.nu_hat, est2.nu_hat) - slack_max:
        report.violations.append(
            f"ν(max) = {est_max.nu_hat:.4f} < min(ν(φ), ν(φ')) - slack = "
            f"{min(est1.nu_hat, est2.nu_hat) - slack_max:.4f}"
        )
    report.values["slack_sum"] = slack_sum
    report.values["slack_max"] = slack_max
    report.passed = not report.violations
    for est in (est1, est2, est_sum, est_max):
        report.warnings.extend(est.warnings)
    return report


def biholo_invariance_check(
    expr: PshExpr,
    f: PolyMap,
    t: float,
    seed: int = 0,
    w: Optional[WeightSpec] = None,
    **budget,
) -> PropertyReport:
    """
    双全纯不变性 ν_{0,t}(φ∘f) = ν_{0,t}(φ)

    Args:
        expr: φ
        f: 多项式映射，f(0) = 0 且 det f'(0) != 0
        t: 径向参数
        seed: 随机种子
        w: 权函数，缺省为 t·log|z|
        **budget: 采样预算

    Returns:
        PropertyReport: 检查报告

    Raises:
        NumericalFailure: Jacobi 矩阵在原点奇异
    """
    n = expr.n
    if f.n_in != n or f.n_out != n:
        raise ArityMismatchError(f"映射维数 ({f.n_in} -> {f.n_out}) 与表达式维数 {n} 不一致")
    origin = np.zeros(n, dtype=complex)
    if np.max(np.abs(f.evaluate(origin))) > 1e-12:
        raise InputError("映射必须满足 f(0) = 0")
    det = np.linalg.det(f.jacobian_at(origin))
    if abs(det) < 1e-10:
        raise NumericalFailure(f"Jacobi 矩阵在原点奇异: det = {det}")

    w = make_radial(t, origin) if w is None else w
    cloud = cloud_for_budget(n, seed, budget)
    base = _estimate(expr, w, seed, cloud, budget)
    moved = _estimate(compose(expr, f), w, seed, cloud, budget)
    slack = base.half_width + moved.half_width
    gap = abs(base.nu_hat - moved.nu_hat)
    report = PropertyReport(
        name="biholomorphic_invariance",
        passed=gap <= slack,
        values={"map": f.to_text(), "t": t, "det": abs(det),
                "phi": _summary(base), "phi_f": _summary(moved), "gap": gap, "slack": slack},
        warnings=base.warnings + moved.warnings,
    )
    if not report.passed:
        report.violations.append(f"|ν(φ∘f) - ν(φ)| = {gap:.4f} > {slack:.4f}")
    return report


@dataclass
class LevelsetPoint:
    """上水平集扫描中的一个点"""
    point: Tuple[complex, ...]
    nu_hat: float
    ci: Tuple[float, float]
    above: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": [[z.real, z.imag] for z in self.point],
            "nu_hat": self.nu_hat,
            "ci": list(self.ci),
            "above": self.above,
        }


def levelset_scan(
    expr: PshExpr,
    w: WeightSpec,
    grid: Sequence[Sequence[complex]],
    c: float,
    seed: int = 0,
    **budget,
) -> List[LevelsetPoint]:
    """
    在网格点上估计 ν_{z,ψ}(φ) 并标记 ν >= c 的点

    所有点共享同一个（以位移表示的）样本云。

    Args:
        expr: φ
        w: 权函数，逐点重新定中心
        grid: 点列表
        c: 水平
        seed: 随机种子
        **budget: 采样预算

    Returns:
        List[LevelsetPoint]: 每个点一行，可直接用于作图
    """
    if not grid:
        raise InputError("网格不能为空")
    if not c > 0:
        raise InputError(f"水平 c 必须为正数: {c}")
    cloud = cloud_for_budget(expr.n, seed, budget)
    results = []
    for point in grid:
        point = tuple(complex(z) for z in point)
        est = _estimate(expr, w.recentered(point), seed, cloud, budget)
        results.append(LevelsetPoint(point, est.nu_hat, est.ci, est.nu_hat >= c))
    flagged = sum(1 for r in results if r.above)
    logger.info(f"上水平集扫描完成: {flagged}/{len(results)} 个点满足 ν >= {c}")
    return results


def singularity_shift_check(
    expr: PshExpr,
    w: WeightSpec,
    eps: float,
    seed: int = 0,
    nu: Optional[float] = None,
    **budget,
) -> PropertyReport:
    """
    奇点平移：若 ν_{a,ψ}(φ) = 1 + δ 且 ε < τδ，则 s = 1、权 (1-ε)ψ 的积分发散

    Args:
        expr: φ
        w: 权函数（需声明 τ）
        eps: ε ∈ (0, 1)
        seed: 随机种子
        nu: 已知的 ν_{a,ψ}(φ)，缺省由阈值估计给出
        **budget: 采样预算

    Returns:
        PropertyReport: 检查报告；前提 ε < τδ 不成立时 passed 为 True 并给出警告
    """
    if not 0 < eps < 1:
        raise InputError(f"eps 必须在 (0, 1) 内: {eps}")
    if w.params is None:
        raise InputError("奇点平移检查需要声明 τ 的权函数")
    tau = w.params.tau
    cloud = cloud_for_budget(expr.n, seed, budget)
    if nu is None:
        nu = _estimate(expr, w, seed, cloud, budget).nu_hat
    delta = nu - 1.0

    report = PropertyReport(
        name="singularity_shift",
        passed=True,
        values={"nu": nu, "delta": delta, "tau": tau, "eps": eps},
    )
    if not (delta > 0 and eps < tau * delta):
        report.warnings.append(f"前提 ε < τδ 不成立 (δ = {delta:.4f}, τδ = {tau * delta:.4f})，跳过")
        return report

    shifted = w.scaled(1.0 - eps)
    values = evaluate_cloud(cloud, expr, shifted)
    verdict = integrability_verdict(cloud, values.log_integrand(1.0), 1.0)
    report.values.update({"exponent": verdict.exponent, "stderr": verdict.stderr, "converges": verdict.converges})
    if verdict.converges:
        report.passed = False
        report.violations.append(f"权 (1-ε)ψ 在 s = 1 处的积分判定为收敛 (e = {verdict.exponent:.4f})")
    return report
