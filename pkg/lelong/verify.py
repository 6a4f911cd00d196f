"""
性质检查套件

每个性质对应一个检查类，由 SuiteRegistry 统一管理：
- fast: 小预算，适合单元测试与日常运行
- full: 默认预算与完整实例集
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Type

import numpy as np

from lelong.bergman import bergman_value, build_model, degree_monotonicity_check, eigen_oracle_value
from lelong.errors import InputError
from lelong.expr import Monomial, SumSquares, ToricForm, TwoVarCusp, linear_map, parse
from lelong.geometry import gaussian_test, lelong_via_lines, polar_grassmann_check
from lelong.kiselman import rescale_identity_check
from lelong.log import logger
from lelong.montecarlo import (
    biholo_invariance_check,
    estimate_threshold,
    hoelder_property_suite,
    scaling_check,
)
from lelong.sampling import substream
from lelong.toric import concavity_check, exact_t_grid, nu_exact, skoda_chain_check
from lelong.weights import make_radial

FAST_BUDGET: Dict[str, Any] = {"k_min": 3, "k_max": 12, "n_samples": 1024, "batches": 8, "tol": 0.05}
FULL_BUDGET: Dict[str, Any] = {}

TAG_VERIFY = "verify"


@dataclass
class CheckResult:
    """单项检查结果"""
    name: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "details": self.details,
            "violations": self.violations,
            "warnings": self.warnings,
        }


class PropertyCheck(ABC):
    """性质检查基类"""

    name: str = ""
    description: str = ""

    def __init__(self, suite: str = "fast", seed: int = 0, workers: int = 1):
        if suite not in ("fast", "full"):
            raise InputError(f"未知套件: {suite}，可用: fast, full")
        self.suite = suite
        self.seed = seed
        self.workers = workers

    @property
    def full(self) -> bool:
        return self.suite == "full"

    @property
    def budget(self) -> Dict[str, Any]:
        budget = dict(FULL_BUDGET if self.full else FAST_BUDGET)
        budget["workers"] = self.workers
        return budget

    @abstractmethod
    def run(self) -> CheckResult:
        """执行检查"""

    def get_info(self) -> Dict[str, str]:
        return {"name": self.name, "description": self.description}


class ScalingCheck(PropertyCheck):
    name = "scaling"
    description = "ν(cφ) = c·ν(φ)"

    def run(self) -> CheckResult:
        report = scaling_check(parse("log(|z1|^1)", 2), 2.0, make_radial(0, (0, 0)), self.seed, **self.budget)
        return CheckResult(self.name, report.passed, report.values, report.violations, report.warnings)


class _PairCheck(PropertyCheck):
    """次可加性与最大值性质共用的实例"""

    prefix = ""

    def run(self) -> CheckResult:
        report = hoelder_property_suite(
            parse("log(|z1|^1)", 2), parse("0.5*log(|z1|^2+|z2|^2)", 2),
            make_radial(1, (0, 0)), self.seed, **self.budget,
        )
        violations = [v for v in report.violations if v.startswith(self.prefix)]
        return CheckResult(self.name, not violations, report.values, violations, report.warnings)


class SubadditivityCheck(_PairCheck):
    name = "subadditivity"
    description = "ν(φ + φ') <= ν(φ) + ν(φ')"
    prefix = "ν(φ+φ')"


class MaxPropertyCheck(_PairCheck):
    name = "max_property"
    description = "ν(max(φ, φ')) >= min(ν(φ), ν(φ'))"
    prefix = "ν(max)"


def _random_toric_forms(seed: int, count: int) -> List[ToricForm]:
    rng = substream(seed, TAG_VERIFY, 1)
    forms = []
    for _ in range(count):
        n = int(rng.integers(1, 4))
        kind = int(rng.integers(0, 3)) if n == 2 else int(rng.integers(0, 2))
        scale = float(Fraction(int(rng.integers(1, 9)), 4))
        if kind == 0:
            forms.append(ToricForm(SumSquares(int(rng.integers(1, n + 1)), n), scale))
        elif kind == 1:
            k = int(rng.integers(1, n + 1))
            forms.append(ToricForm(Monomial(tuple(int(a) for a in rng.integers(1, 4, size=k)), n), scale))
        else:
            forms.append(ToricForm(TwoVarCusp(float(rng.integers(1, 6))), scale))
    return forms


class SkodaChainCheck(PropertyCheck):
    name = "skoda_chain"
    description = "ν0,0 <= ν0,n-1 <= (n-t)ν0,t <= n·ν0,0"

    def run(self) -> CheckResult:
        count = 50 if self.full else 10
        result = CheckResult(self.name, True, {"instances": count})
        for form in _random_toric_forms(self.seed, count):
            report = skoda_chain_check(form, exact_t_grid(0, Fraction(form.n) - Fraction(1, 20), "0.05"))
            result.violations.extend(f"{form.describe()}: {v}" for v in report.violations)
        if self.full:
            # 蒙特卡洛值在区间松弛下的链
            form = ToricForm(SumSquares(2, 3))
            expr = form.to_expr()
            low = estimate_threshold(expr, make_radial(0, (0,) * 3), seed=self.seed, **_mc(self.budget))
            high = estimate_threshold(expr, make_radial(2, (0,) * 3), seed=self.seed, **_mc(self.budget))
            if low.nu_hat > high.nu_hat + low.half_width + high.half_width:
                result.violations.append(f"蒙特卡洛: ν0,0={low.nu_hat:.4f} > ν0,n-1={high.nu_hat:.4f}")
            result.details["mc"] = {"nu_00": low.nu_hat, "nu_0n1": high.nu_hat}
        result.passed = not result.violations
        return result


class ConvexityCheck(PropertyCheck):
    name = "convexity"
    description = "t ↦ ν0,t 凸，t ↦ 1/ν0,t 凹"

    def run(self) -> CheckResult:
        forms = [
            ToricForm(SumSquares(1, 2)), ToricForm(SumSquares(2, 3)),
            ToricForm(Monomial((1, 2), 3)), ToricForm(TwoVarCusp(3.0)),
        ]
        result = CheckResult(self.name, True)
        checked = 0
        for form in forms:
            report = concavity_check(form, exact_t_grid(0, Fraction(form.n) - Fraction(1, 20), "0.05"))
            checked += report.checked
            result.violations.extend(f"{form.describe()}: {v}" for v in report.violations)
        result.details["checked"] = checked
        result.passed = not result.violations
        return result


def _mc(budget: Dict[str, Any]) -> Dict[str, Any]:
    keys = ("k_min", "k_max", "n_samples", "batches", "workers", "tol")
    return {k: budget[k] for k in keys if k in budget}


class OracleEquivalenceCheck(PropertyCheck):
    name = "oracle_equivalence"
    description = "蒙特卡洛阈值与闭式值一致"

    def run(self) -> CheckResult:
        cases = [(SumSquares(1, 2), 0), (SumSquares(1, 2), 1), (SumSquares(2, 2), 1)]
        if self.full:
            cases += [(SumSquares(2, 3), 0), (SumSquares(2, 3), 2), (Monomial((1, 1), 2), 1)]
        result = CheckResult(self.name, True, {"rows": []})
        for variant, t in cases:
            form = ToricForm(variant)
            exact = float(nu_exact(form, t))
            est = estimate_threshold(form.to_expr(), make_radial(t, (0,) * form.n), seed=self.seed,
                                     **_mc(self.budget))
            slack = max(est.half_width, 0.05 if self.full else 0.1)
            result.details["rows"].append({"form": form.describe(), "t": t, "exact": exact, "nu_hat": est.nu_hat})
            if abs(est.nu_hat - exact) > slack:
                result.violations.append(f"{form.describe()}, t={t}: ν̂={est.nu_hat:.4f} vs {exact:.4f}")
        result.passed = not result.violations
        return result


class GrassmannCheck(PropertyCheck):
    name = "grassmann"
    description = "极坐标 Grassmann 公式"

    def run(self) -> CheckResult:
        if self.full:
            cases, planes, samples, limit = [(2, 1), (3, 1), (3, 2)], 200, 10_000, 0.03
        else:
            cases, planes, samples, limit = [(2, 1)], 50, 4000, 0.05
        result = CheckResult(self.name, True, {"rows": []})
        for n, k in cases:
            report = polar_grassmann_check(gaussian_test(n), k, n, planes, samples, self.seed, self.workers)
            result.details["rows"].append(report.to_dict())
            if report.rel_error > limit:
                result.violations.append(f"(n={n}, k={k}): 相对误差 {report.rel_error:.4f} > {limit}")
        result.passed = not result.violations
        return result


class LineRestrictionCheck(PropertyCheck):
    name = "line_restriction"
    description = "一般直线上的可积指数等于 ν0,n-1"

    def run(self) -> CheckResult:
        forms = [ToricForm(SumSquares(2, 2)), ToricForm(Monomial((1,), 2))]
        if self.full:
            forms += [ToricForm(SumSquares(1, 2)), ToricForm(Monomial((1, 1), 2)), ToricForm(SumSquares(2, 3))]
        result = CheckResult(self.name, True, {"rows": []})
        for form in forms:
            exact = float(nu_exact(form, form.n - 1))
            lines = lelong_via_lines(form.to_expr(), n_lines=11, seed=self.seed, **_mc(self.budget))
            result.details["rows"].append({"form": form.describe(), "exact": exact, "median": lines.median})
            slack = max(lines.spread, 0.1)
            if abs(lines.median - exact) > slack:
                result.violations.append(f"{form.describe()}: 中位数 {lines.median:.4f} vs {exact:.4f}")
            result.warnings.extend(lines.warnings)
        result.passed = not result.violations
        return result


class BergmanMonotonicityCheck(PropertyCheck):
    name = "bergman_monotonicity"
    description = "B 关于截断次数单调，且等于广义特征值上确界"

    def run(self) -> CheckResult:
        expr = parse("log(|z1|^2 + |1|^2)", 2)
        model = build_model(expr, make_radial(0, (0, 0)), m=1, degree=3 if not self.full else 4,
                            r=1.0, seed=self.seed, samples=512 if not self.full else 2048,
                            workers=self.workers)
        rng = substream(self.seed, TAG_VERIFY, 2)
        count = 100 if self.full else 20
        radii = np.sqrt(rng.random(count)) * 0.9
        dirs = rng.standard_normal((count, 2)) + 1j * rng.standard_normal((count, 2))
        points = [tuple(r * d / np.linalg.norm(d)) for r, d in zip(radii, dirs)]
        mono = degree_monotonicity_check(model, points)
        result = CheckResult(self.name, mono.passed, {"dimension": model.dimension, "points": count},
                             list(mono.violations))
        worst = 0.0
        for z in points[:10]:
            direct, oracle = bergman_value(model, z), eigen_oracle_value(model, z)
            worst = max(worst, abs(direct - oracle) / max(oracle, 1e-300))
        result.details["oracle_rel_error"] = worst
        if worst > 1e-8:
            result.violations.append(f"特征值上确界相对误差 {worst:.3e} > 1e-8")
        result.passed = not result.violations
        return result


class KiselmanRescalingCheck(PropertyCheck):
    name = "kiselman_rescaling"
    description = "ν_w(φ, p/q) = q^{-1}·ν_w(φ(z^p), 1)"

    def run(self) -> CheckResult:
        cases = [("log(|z1|^1)", (3, 1), 2), ("log(|z1*z2|^1)", (2, 3), 1)]
        if self.full:
            rng = substream(self.seed, TAG_VERIFY, 3)
            for _ in range(8):
                alpha = rng.integers(0, 3, size=2)
                alpha[0] = max(alpha[0], 1)
                text = f"log(|z1^{alpha[0]}*z2^{alpha[1]}|^1)" if alpha[1] else f"log(|z1^{alpha[0]}|^1)"
                cases.append((text, tuple(int(x) for x in rng.integers(1, 4, size=2)), int(rng.integers(1, 4))))
        samples = 4096 if self.full else 1024
        result = CheckResult(self.name, True, {"rows": []})
        for text, p, q in cases:
            report = rescale_identity_check(parse(text, 2), p, q, self.seed, samples_per_shell=samples,
                                            workers=self.workers)
            result.details["rows"].append({"expr": text, **report.to_dict()})
            if not report.passed:
                result.violations.append(f"{text}, p={p}, q={q}: {report.lhs:.4f} vs {report.rhs:.4f}")
        result.passed = not result.violations
        return result


class BiholomorphicInvarianceCheck(PropertyCheck):
    name = "biholomorphic_invariance"
    description = "ν0,t(φ∘f) = ν0,t(φ)"

    def run(self) -> CheckResult:
        rng = substream(self.seed, TAG_VERIFY, 4)
        count = 10 if self.full else 1
        result = CheckResult(self.name, True, {"rows": []})
        exprs = [parse("log(|z1|^1)", 2), parse("0.5*log(|z1|^2+|z2|^2)", 2)]
        for _ in range(count):
            shear = np.array([[1.0, rng.standard_normal() + 1j * rng.standard_normal()], [0.0, 1.0]])
            for expr in exprs:
                for t in (0.0, 1.0):
                    report = biholo_invariance_check(expr, linear_map(shear), t=t, seed=self.seed,
                                                     **_mc(self.budget))
                    result.details["rows"].append(report.values)
                    result.violations.extend(report.violations)
        result.passed = not result.violations
        return result


class SuiteRegistry:
    """
    检查注册表

    管理所有性质检查
    """

    _checks: Dict[str, Type[PropertyCheck]] = {}

    @classmethod
    def register_defaults(cls):
        """注册默认检查"""
        cls._checks = {
            'scaling': ScalingCheck,
            'subadditivity': SubadditivityCheck,
            'max_property': MaxPropertyCheck,
            'skoda_chain': SkodaChainCheck,
            'convexity': ConvexityCheck,
            'oracle_equivalence': OracleEquivalenceCheck,
            'grassmann': GrassmannCheck,
            'line_restriction': LineRestrictionCheck,
            'bergman_monotonicity': BergmanMonotonicityCheck,
            'kiselman_rescaling': KiselmanRescalingCheck,
        }

    @classmethod
    def list_checks(cls, suite: str = "fast") -> List[str]:
        """
        列出套件中的检查

        Returns:
            List[str]: 检查名称列表
        """
        if not cls._checks:
            cls.register_defaults()
        names = list(cls._checks.keys())
        if suite == "full":
            names.append('biholomorphic_invariance')
        return names

    @classmethod
    def create(cls, name: str, **kwargs) -> PropertyCheck:
        """
        创建检查实例

        Raises:
            InputError: 检查不存在
        """
        if not cls._checks:
            cls.register_defaults()
        if name == 'biholomorphic_invariance':
            return BiholomorphicInvarianceCheck(**kwargs)
        if name not in cls._checks:
            available = ', '.join(cls._checks.keys())
            raise InputError(f"未知检查: {name}。可用检查: {available}")
        return cls._checks[name](**kwargs)


@dataclass
class SuiteReport:
    """套件报告"""
    suite: str
    seed: int
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"check": r.name, "passed": r.passed, "violations": len(r.violations),
             "detail": "; ".join(r.violations)}
            for r in self.results
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {"suite": self.suite, "seed": self.seed, "passed": self.passed,
                "results": [r.to_dict() for r in self.results]}


def run_suite(suite: str = "fast", seed: int = 0, workers: int = 1, only: List[str] = None) -> SuiteReport:
    """
    运行性质检查套件

    Args:
        suite: fast 或 full
        seed: 随机种子
        workers: 并行线程数（不影响结果）
        only: 只运行指定检查

    Returns:
        SuiteReport: 每项检查一行
    """
    names = SuiteRegistry.list_checks(suite)
    if only:
        unknown = [n for n in only if n not in names]
        if unknown:
            raise InputError(f"未知检查: {unknown}")
        names = [n for n in names if n in only]
    report = SuiteReport(suite=suite, seed=seed)
    for name in names:
        logger.info(f"运行检查: {name}")
        result = SuiteRegistry.create(name, suite=suite, seed=seed, workers=workers).run()
        if not result.passed:
            logger.warning(f"检查未通过: {name} - {result.violations}")
        report.results.append(result)
    logger.info(f"套件 {suite} 完成: {len(names) - len(report.failed)}/{len(names)} 通过")
    return report
