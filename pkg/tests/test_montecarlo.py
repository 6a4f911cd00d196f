"""
蒙特卡洛阈值估计测试用例
"""

import math

import numpy as np
import pytest

from lelong.errors import InputError, NonPositiveParameterError, NumericalFailure
from lelong.expr import SumSquares, ToricForm, TwoVarCusp, linear_map, parse
from lelong.montecarlo import (
    ThresholdOracle,
    bisect_threshold,
    biholo_invariance_check,
    bracket_flags,
    build_cloud,
    divergence_exponent,
    estimate_threshold,
    evaluate_cloud,
    hoelder_property_suite,
    integral_profile,
    integrability_verdict,
    levelset_scan,
    scaling_check,
    scan_t,
    singularity_shift_check,
)
from lelong.weights import make_radial

BUDGET = dict(k_min=3, k_max=12, n_samples=1024, batches=8)
SPHERE = "0.5*log(|z1|^2+|z2|^2)"


@pytest.fixture
def radial_expr():
    """ℂ² 中的 log|z|"""
    return parse(SPHERE)


@pytest.fixture
def zero_weight():
    return make_radial(0, (0, 0))


class TestCloud:
    """样本云测试类"""

    def test_shapes(self):
        """测试样本云形状"""
        cloud = build_cloud(2, 3, 8, 256, seed=1, batches=4)
        assert cloud.ks == [3, 4, 5, 6, 7, 8]
        assert cloud.points.shape == (6, 256, 2)
        assert cloud.log_weight.shape == (6, 256)

    def test_points_in_annuli(self):
        """测试样本落在对应环带内"""
        cloud = build_cloud(3, 4, 9, 128, seed=2, batches=4)
        norms = np.linalg.norm(cloud.points, axis=2)
        for i, k in enumerate(cloud.ks):
            assert np.all(norms[i] <= 2.0 ** (-k) * (1 + 1e-12))
            assert np.all(norms[i] >= 2.0 ** (-k - 1) * (1 - 1e-12))

    def test_independent_of_workers(self):
        """测试样本云与线程数无关"""
        one = build_cloud(2, 3, 9, 256, seed=4, batches=4, workers=1)
        three = build_cloud(2, 3, 9, 256, seed=4, batches=4, workers=3)
        assert np.array_equal(one.points, three.points)
        assert np.array_equal(one.log_weight, three.log_weight)

    def test_invalid_budget(self):
        """测试不合法的预算"""
        with pytest.raises(InputError):
            build_cloud(2, 8, 8, 256, seed=0, batches=4)
        with pytest.raises(InputError):
            build_cloud(2, 3, 9, 32, seed=0, batches=4)
        with pytest.raises(InputError):
            build_cloud(2, 3, 9, 256, seed=0, batches=1)

    def test_non_positive_scale(self, radial_expr, zero_weight):
        """测试非正的 s"""
        cloud = build_cloud(2, 3, 9, 256, seed=0, batches=4)
        values = evaluate_cloud(cloud, radial_expr, zero_weight)
        with pytest.raises(NonPositiveParameterError):
            values.log_integrand(0.0)


class TestProfile:
    """环带剖面测试类"""

    def test_decay_exponent(self, radial_expr, zero_weight):
        """测试 |z|^{-2} 在 ℂ² 中每层衰减 2"""
        profile = integral_profile(radial_expr, zero_weight, 1.0, seed=7, **BUDGET)
        e, se = divergence_exponent(profile)
        assert e == pytest.approx(2.0, abs=0.1)
        assert se < 0.1
        assert len(profile.masses) == 10

    def test_reproducible(self, radial_expr, zero_weight):
        """测试相同种子逐位相同"""
        a = integral_profile(radial_expr, zero_weight, 0.8, seed=3, **BUDGET)
        b = integral_profile(radial_expr, zero_weight, 0.8, seed=3, **BUDGET)
        assert a.to_dict() == b.to_dict()

    def test_too_few_annuli(self, radial_expr, zero_weight):
        """测试环带少于 6 个"""
        profile = integral_profile(radial_expr, zero_weight, 1.0, k_min=3, k_max=7,
                                   n_samples=512, seed=1, batches=4)
        with pytest.raises(InputError):
            divergence_exponent(profile)

    def test_verdict(self, radial_expr, zero_weight):
        """测试收敛与发散判定"""
        cloud = build_cloud(2, seed=5, **BUDGET)
        values = evaluate_cloud(cloud, radial_expr, zero_weight)
        assert integrability_verdict(cloud, values.log_integrand(1.0), 1.0).converges
        diverged = integrability_verdict(cloud, values.log_integrand(0.4), 0.4)
        assert not diverged.converges
        assert diverged.reason == "decay"

    def test_large_exponent_kept(self, zero_weight):
        """测试指数超出 ±700 的样本按原值计入质量"""
        cusp = ToricForm(TwoVarCusp(2.0)).to_expr()
        cloud = build_cloud(2, seed=3, **BUDGET)
        values = evaluate_cloud(cloud, cusp, zero_weight)
        verdict = integrability_verdict(cloud, values.log_integrand(0.05), 0.05)
        assert verdict.profile.clipped > 0
        assert not verdict.converges
        assert verdict.reason == "decay"
        assert verdict.exponent < -10
        assert verdict.margin < -1.96

    def test_radial_variation_not_heavy(self, radial_expr):
        """测试纯径向被积函数在环带内部没有重尾"""
        cloud = build_cloud(2, seed=6, **BUDGET)
        values = evaluate_cloud(cloud, radial_expr, make_radial(1, (0, 0)))
        verdict = integrability_verdict(cloud, values.log_integrand(1.5), 1.5)
        assert not verdict.profile.tail.heavy
        assert verdict.converges


class TestThreshold:
    """阈值估计测试类"""

    def test_sphere_t0(self, radial_expr, zero_weight):
        """测试 ℂ² 中 ν_{0,0}(log|z|) = 1/2"""
        est = estimate_threshold(radial_expr, zero_weight, tol=0.02, seed=11, **BUDGET)
        assert est.nu_hat == pytest.approx(0.5, abs=0.06)
        assert est.ci[0] <= est.nu_hat <= est.ci[1]
        assert est.warnings == []
        assert est.bisection_trace[:2] == [0.05, 8.0]

    def test_sphere_t1(self, radial_expr):
        """测试 ℂ² 中 ν_{0,1}(log|z|) = 1"""
        est = estimate_threshold(radial_expr, make_radial(1, (0, 0)), tol=0.02, seed=11, **BUDGET)
        assert est.nu_hat == pytest.approx(1.0, abs=0.08)

    def test_coordinate_hyperplane(self, zero_weight):
        """测试 ν_{0,0}(log|z1|) = 1（超平面奇点）"""
        est = estimate_threshold(parse("log(|z1|^1)", 2), zero_weight, tol=0.05, seed=2,
                                 k_min=3, k_max=12, n_samples=2048, batches=8)
        assert 0.8 <= est.nu_hat <= 1.4

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_hyperplane_with_radial_weight(self, seed):
        """测试 ℂ³ 中 ν_{0,2}(log|z1|) = 1 且区间覆盖真值"""
        expr = ToricForm(SumSquares(1, 3)).to_expr()
        est = estimate_threshold(expr, make_radial(2, (0, 0, 0)), seed=seed)
        assert est.nu_hat == pytest.approx(1.0, abs=0.05)
        assert est.ci[0] <= 1.0 <= est.ci[1]

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_cusp_low_scale_diverges(self, seed):
        """测试尖点在区间下端判为发散，估计不会塌缩为 0"""
        expr = ToricForm(TwoVarCusp(3.0)).to_expr()
        est = estimate_threshold(expr, make_radial(0, (0, 0)), seed=seed)
        assert est.warnings == []
        assert est.verdicts[0]["s"] == 0.05
        assert est.verdicts[0]["converges"] is False
        assert est.nu_hat > 1.0

    def test_below_bracket(self, radial_expr, zero_weight):
        """测试阈值低于区间下端"""
        est = estimate_threshold(radial_expr, zero_weight, bracket=(0.8, 8), tol=0.05, seed=1, **BUDGET)
        assert est.nu_hat == 0.0
        assert est.ci == (0.0, 0.8)
        assert bracket_flags(est) == "below_bracket"

    def test_above_bracket(self, radial_expr, zero_weight):
        """测试阈值高于区间上端"""
        est = estimate_threshold(radial_expr, zero_weight, bracket=(0.05, 0.3), tol=0.05, seed=1, **BUDGET)
        assert est.nu_hat == pytest.approx(0.3)
        assert est.ci[1] == math.inf
        assert bracket_flags(est) == "above_bracket"

    def test_invalid_bracket(self, radial_expr, zero_weight):
        """测试不合法的二分区间"""
        cloud = build_cloud(2, seed=1, **BUDGET)
        oracle = ThresholdOracle(cloud, evaluate_cloud(cloud, radial_expr, zero_weight))
        with pytest.raises(InputError):
            bisect_threshold(oracle, (1.0, 0.5), 0.05)
        with pytest.raises(InputError):
            bisect_threshold(oracle, (0.1, 1.0), 0.0)

    def test_independent_of_workers(self, radial_expr, zero_weight):
        """测试估计与线程数无关"""
        one = estimate_threshold(radial_expr, zero_weight, tol=0.05, seed=9, workers=1, **BUDGET)
        four = estimate_threshold(radial_expr, zero_weight, tol=0.05, seed=9, workers=4, **BUDGET)
        assert one.to_dict() == four.to_dict()

    def test_scan_t(self, radial_expr):
        """测试 t 扫描给出闭式列"""
        rows = scan_t(radial_expr, [0.0, 1.0], seed=3, tol=0.05, **BUDGET)
        assert [row.exact for row in rows] == [0.5, 1.0]
        for row in rows:
            assert row.nu_hat == pytest.approx(row.exact, abs=0.1)
            assert row.flags == ""

    def test_scan_t_off_center(self, radial_expr):
        """测试中心不在原点时没有闭式列"""
        rows = scan_t(radial_expr, [0.0], a=(0.5, 0), seed=3, tol=0.05, **BUDGET)
        assert rows[0].exact is None
        assert rows[0].flags == "below_bracket"


class TestProperties:
    """性质检查测试类"""

    def test_scaling(self, radial_expr, zero_weight):
        """测试 ν(2φ) = 2ν(φ)"""
        report = scaling_check(radial_expr, 2.0, zero_weight, seed=1, tol=0.02, **BUDGET)
        assert report.passed, report.violations

    def test_subadditivity_and_max(self, radial_expr, zero_weight):
        """测试次可加性与最大值性质"""
        other = parse("log(|z1|^2+|z2|^2)")
        report = hoelder_property_suite(radial_expr, other, zero_weight, seed=2, tol=0.02, **BUDGET)
        assert report.passed, report.violations
        assert report.values["sum"]["nu_hat"] == pytest.approx(1.5, abs=0.15)

    def test_biholomorphic_invariance(self, radial_expr):
        """测试线性剪切下不变"""
        f = linear_map([[1, 1], [0, 1]])
        report = biholo_invariance_check(radial_expr, f, 0, seed=4, tol=0.02, **BUDGET)
        assert report.passed, report.violations

    def test_singular_jacobian(self, radial_expr):
        """测试 Jacobi 矩阵奇异"""
        with pytest.raises(NumericalFailure):
            biholo_invariance_check(radial_expr, linear_map([[1, 1], [1, 1]]), 0, seed=0, **BUDGET)

    def test_levelset(self, radial_expr, zero_weight):
        """测试上水平集只包含奇点"""
        points = levelset_scan(radial_expr, zero_weight, [(0, 0), (0.5, 0)], 0.25, seed=1, tol=0.05, **BUDGET)
        assert [p.above for p in points] == [True, False]
        assert points[1].nu_hat == 0.0

    def test_singularity_shift(self):
        """测试奇点平移后积分发散"""
        phi = parse("log(|z1|^2+|z2|^2)")
        w = make_radial(1, (0, 0))
        report = singularity_shift_check(phi, w, 0.25, seed=1, nu=2.0, **BUDGET)
        assert report.passed, report.violations
        assert report.values["converges"] is False

    def test_singularity_shift_precondition(self):
        """测试前提不成立时跳过"""
        phi = parse("log(|z1|^2+|z2|^2)")
        report = singularity_shift_check(phi, make_radial(1, (0, 0)), 0.75, seed=1, nu=2.0, **BUDGET)
        assert report.passed
        assert report.warnings
