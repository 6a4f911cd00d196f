"""
截断 Bergman 函数测试用例
"""

import json
import math

import numpy as np
import pytest

from lelong.bergman import (
    attenuation_probe,
    bergman_value,
    build_model,
    degree_monotonicity_check,
    eigen_oracle_value,
    gauss_polar_nodes,
    kernel,
    monomial_basis,
    psi_m,
    reproducing_check,
    sandwich_check,
    smooth_on_ball,
)
from lelong.errors import DomainError, InputError
from lelong.expr import evaluate, parse
from lelong.weights import make_radial

SMOOTH = "log(|z1|^2 + |1|^2)"
SINGULAR = "0.25*log(|z1|^2)"


@pytest.fixture
def disc_model():
    """单位圆盘上常数权的闭式模型"""
    return build_model(parse("0", 1), make_radial(0, (0,)), degree=4, r=1.0)


class TestBasis:
    """单项式基测试类"""

    def test_graded_order(self):
        """测试按次数分级"""
        assert monomial_basis(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_count(self):
        """测试基的个数为组合数"""
        assert len(monomial_basis(3, 4)) == math.comb(3 + 4, 4)

    def test_negative_degree(self):
        """测试负次数"""
        with pytest.raises(InputError):
            monomial_basis(2, -1)


class TestExactModel:
    """闭式 Gram 模型测试类"""

    def test_disc_center(self, disc_model):
        """测试单位圆盘中心处 B = 1/π"""
        assert disc_model.quadrature.method == "exact"
        assert bergman_value(disc_model, (0,)) == pytest.approx(1 / math.pi)

    def test_disc_partial_sum(self, disc_model):
        """测试圆盘上 B 为 Σ (d+1)|z|^{2d}/π 的部分和"""
        z = 0.5
        expected = sum((d + 1) * abs(z) ** (2 * d) for d in range(5)) / math.pi
        assert bergman_value(disc_model, (z,)) == pytest.approx(expected)

    def test_ball_center(self):
        """测试 ℂ² 单位球中心处 B = 1/vol = 2/π²"""
        model = build_model(parse("0", 2), make_radial(0, (0, 0)), degree=2, r=1.0)
        assert bergman_value(model, (0, 0)) == pytest.approx(2 / math.pi ** 2)

    def test_oracle_agrees(self, disc_model):
        """测试特征值给出同一个上确界"""
        for z in [(0.0,), (0.3 + 0.2j,), (-0.7,)]:
            assert eigen_oracle_value(disc_model, z) == pytest.approx(bergman_value(disc_model, z), rel=1e-8)

    def test_reproducing(self, disc_model):
        """测试再生性质"""
        assert reproducing_check(disc_model, (0.4j,), seed=1) < 1e-10

    def test_kernel_diagonal(self, disc_model):
        """测试 K(z, z) = B(z)"""
        z = (0.25 - 0.1j,)
        assert kernel(disc_model, z, z).real == pytest.approx(bergman_value(disc_model, z))

    def test_as_expr(self, disc_model):
        """测试 Ψ 的表达式形式与逐点值一致"""
        expr = disc_model.as_expr()
        for z in [(0.1,), (0.6j,)]:
            assert evaluate(expr, z) == pytest.approx(psi_m(disc_model, z))

    def test_monotone_in_degree(self, disc_model):
        """测试 B 随截断次数不减"""
        report = degree_monotonicity_check(disc_model, [(0.0,), (0.5,), (0.9j,)])
        assert report.passed
        assert report.degrees == [0, 1, 2, 3, 4]

    def test_truncated(self, disc_model):
        """测试截断"""
        assert disc_model.truncated(0).dimension == 1
        with pytest.raises(InputError):
            disc_model.truncated(5)

    def test_outside_domain(self, disc_model):
        """测试区域外的点"""
        with pytest.raises(DomainError):
            bergman_value(disc_model, (1.5,))

    def test_json(self, disc_model):
        """测试模型序列化"""
        data = json.loads(disc_model.to_json())
        assert data["degree"] == 4
        assert data["quadrature"]["method"] == "exact"

    def test_invalid_arguments(self):
        """测试不合法的 m 与 r"""
        with pytest.raises(InputError):
            build_model(parse("0", 1), make_radial(0, (0,)), m=0)
        with pytest.raises(InputError):
            build_model(parse("0", 1), make_radial(0, (0,)), r=0.0)


class TestGaussModel:
    """光滑权上的张量 Gauss 求积测试类"""

    def test_closed_form_entries(self):
        """测试 (1 + |z|²)^{-2} 在单位圆盘上的 Gram 矩阵"""
        model = build_model(parse(SMOOTH), make_radial(0, (0,)), degree=1, r=1.0)
        assert model.quadrature.method == "gauss_polar"
        assert model.gram[0, 0].real == pytest.approx(math.pi / 2, rel=1e-9)
        assert model.gram[1, 1].real == pytest.approx(math.pi * (math.log(2) - 0.5), rel=1e-9)
        assert abs(model.gram[0, 1]) < 1e-12

    @pytest.mark.parametrize("n,r", [(1, 1.0), (2, 0.5), (2, 2.0)])
    def test_nodes_cover_ball_volume(self, n, r):
        """测试求积权之和为球体积 π^n r^{2n}/n!"""
        Z, W = gauss_polar_nodes(n, (0.3,) * n, r, 4)
        assert Z.shape == (W.size, n)
        assert W.sum() == pytest.approx(math.pi ** n * r ** (2 * n) / math.factorial(n), rel=1e-10)
        assert np.all(np.linalg.norm(Z - 0.3, axis=1) <= r * (1 + 1e-12))

    def test_smooth_on_ball(self):
        """测试零点位置决定是否光滑"""
        cusp = parse("log(|z1|^2)", 1)
        assert not smooth_on_ball(cusp, (0,), 0.5)
        assert smooth_on_ball(cusp, (2,), 0.5)
        assert smooth_on_ball(parse(SMOOTH), (0,), 1.0)
        assert not smooth_on_ball(parse("log(|z1|^2 + |z2|^2)", 2), (0.1, 0), 0.5)
        assert smooth_on_ball(parse("0", 1), (0,), 1.0)

    def test_smooth_weight(self):
        """测试光滑权上的模型"""
        model = build_model(parse(SMOOTH), make_radial(0, (0,)), degree=3)
        assert model.quadrature.method == "gauss_polar"
        assert model.pruned == ()
        assert reproducing_check(model, (0.2,), seed=3) < 1e-8
        assert eigen_oracle_value(model, (0.2,)) == pytest.approx(bergman_value(model, (0.2,)), rel=1e-6)
        assert degree_monotonicity_check(model, [(0.1,), (0.5j,)]).passed

    def test_singular_weight_uses_monte_carlo(self):
        """测试奇异 φ 不走 Gauss 求积"""
        model = build_model(parse(SINGULAR), make_radial(0, (0,)), degree=1, samples=256, seed=3)
        assert model.quadrature.method == "annulus_mc"


class TestMonteCarloModel:
    """蒙特卡洛 Gram 模型测试类"""

    def test_matches_closed_form_at_center(self):
        """测试 |z|^{-1} 权下 B(0) = 1/∫|z|^{-1} = 1/(2π)"""
        model = build_model(parse(SINGULAR), make_radial(0, (0,)), degree=3, samples=512, seed=2)
        assert model.quadrature.method == "annulus_mc"
        assert model.pruned == ()
        assert bergman_value(model, (0,)) == pytest.approx(1 / (2 * math.pi), rel=0.08)

    def test_independent_of_workers(self):
        """测试 Gram 矩阵与线程数无关"""
        expr = parse(SINGULAR)
        one = build_model(expr, make_radial(0, (0,)), degree=2, samples=256, seed=4, workers=1)
        two = build_model(expr, make_radial(0, (0,)), degree=2, samples=256, seed=4, workers=2)
        assert one.quadrature.method == "annulus_mc"
        assert one.to_dict() == two.to_dict()


class TestProbes:
    """夹逼与衰减探针测试类"""

    def test_sandwich(self):
        """测试光滑 φ 上的夹逼关系"""
        report = sandwich_check(parse(SMOOTH), [(0.1,), (0.3j,)], m_list=(1, 2), degree=3,
                                seed=1, samples=256)
        assert report.passed, report.violations
        assert len(report.rows) == 4
        assert math.isfinite(report.c1)
        assert math.isfinite(report.c2)

    def test_sandwich_range(self):
        """测试 l > t 时拒绝"""
        with pytest.raises(InputError):
            sandwich_check(parse(SMOOTH), [(0.1,)], t=0.0, l=0.5)

    def test_attenuation_smooth(self):
        """测试光滑点处斜率不显著为正"""
        rows = attenuation_probe(parse(SMOOTH), make_radial(0.5, (0,)), [(0,)], degree=2,
                                 shells=4, per_shell=2, nu=[0.0], samples=256, seed=1)
        assert len(rows) == 1
        assert not rows[0].predicted_positive
        assert rows[0].agree

    def test_attenuation_singular_point(self):
        """测试 ν = 5 的奇点处斜率显著为正"""
        rows = attenuation_probe(parse("1.25*log(|z1|^2)"), make_radial(0.5, (0,)), [(0,)], degree=4,
                                 shells=4, per_shell=2, nu=[5.0], samples=512, seed=1)
        assert rows[0].predicted_positive
        assert rows[0].measured_positive
        assert rows[0].slope > 1.0

    def test_attenuation_requires_admissible_weight(self):
        """测试未通过可容许性审计的权被拒绝"""
        with pytest.raises(InputError, match="可容许性审计"):
            attenuation_probe(parse(SMOOTH), make_radial(0, (0,)), [(0,)], nu=[0.0])

    def test_attenuation_shells(self):
        """测试壳数不足"""
        with pytest.raises(InputError):
            attenuation_probe(parse(SMOOTH), make_radial(0.5, (0,)), [(0,)], shells=3)
