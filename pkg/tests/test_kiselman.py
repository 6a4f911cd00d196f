"""
方向 Lelong 数测试用例
"""

import math

import pytest

from lelong.errors import ArityMismatchError, InputError
from lelong.expr import parse
from lelong.geometry import haar_unitary
from lelong.kiselman import (
    DirectionSpec,
    default_radii,
    directional_integral_check,
    directional_nu,
    homogeneity_check,
    rescale_identity_check,
)

BUDGET = dict(k_min=3, k_max=12, n_samples=1024, batches=8)


class TestDirectionSpec:
    """方向测试类"""

    def test_parse_rational(self):
        """测试解析有理方向"""
        dirs = DirectionSpec.parse("1,1/2")
        assert dirs.a_dirs == (1.0, 0.5)
        assert dirs.rational == ((2, 1), 2)

    def test_parse_with_zero(self):
        """测试含零分量时不记录有理形式"""
        dirs = DirectionSpec.parse("0,1")
        assert not dirs.is_rational
        assert dirs.n == 2

    def test_invalid(self):
        """测试不合法的方向"""
        with pytest.raises(InputError):
            DirectionSpec.parse("1,x")
        with pytest.raises(InputError):
            DirectionSpec((0.0, 0.0))
        with pytest.raises(InputError):
            DirectionSpec((-1.0, 1.0))
        with pytest.raises(InputError):
            DirectionSpec.from_rational((1, 2), 0)

    def test_inconsistent_rational(self):
        """测试有理形式与方向不一致"""
        with pytest.raises(InputError):
            DirectionSpec((1.0, 1.0), ((1, 2), 1))


class TestDirectionalNu:
    """方向 Lelong 数测试类"""

    def test_coordinate(self):
        """测试 ν(log|z1|, a) = a_1"""
        est = directional_nu(parse("log(|z1|^1)", 2), DirectionSpec((2.0, 1.0)), samples_per_shell=256)
        assert est.nu == pytest.approx(2.0, abs=1e-9)
        assert est.monotone_violations == []
        assert len(est.shells) == len(default_radii())

    def test_max_of_coordinates(self):
        """测试 ν(max(log|z1|, log|z2|), a) = min a_i"""
        expr = parse("max(log(|z1|^1), log(|z2|^1))")
        est = directional_nu(expr, DirectionSpec.parse("1,1/2"), samples_per_shell=256)
        assert est.nu == pytest.approx(0.5, abs=1e-9)

    def test_sum_of_moduli(self):
        """测试 log(|z1| + |z2|) 与角度无关"""
        est = directional_nu(parse("log(|z1|^1 + |z2|^1)"), DirectionSpec((1.0, 1.0)), samples_per_shell=256)
        assert est.nu == pytest.approx(1.0, abs=1e-9)

    def test_angle_dependent(self):
        """测试 log|z1 + z2| 的壳上确界由采样逼近"""
        est = directional_nu(parse("log(|z1 + z2|^1)"), DirectionSpec((1.0, 1.0)), seed=3)
        assert est.nu == pytest.approx(1.0, abs=0.02)

    def test_shifted_point(self):
        """测试在非原点处"""
        est = directional_nu(parse("log(|z1 - 1|^1)", 2), DirectionSpec((3.0, 1.0)),
                             w_point=(1, 0), samples_per_shell=128)
        assert est.nu == pytest.approx(3.0, abs=1e-9)

    def test_independent_of_workers(self):
        """测试与线程数无关"""
        expr = parse("log(|z1 + z2^2|^1)")
        one = directional_nu(expr, DirectionSpec((1.0, 1.0)), seed=5, samples_per_shell=512, workers=1)
        two = directional_nu(expr, DirectionSpec((1.0, 1.0)), seed=5, samples_per_shell=512, workers=2)
        assert one.to_dict() == two.to_dict()

    def test_radii_validation(self):
        """测试半径表不合法"""
        expr = parse("log(|z1|^1)", 2)
        with pytest.raises(InputError):
            directional_nu(expr, DirectionSpec((1.0, 1.0)), radii=[0.5, 0.25, 0.125])
        with pytest.raises(InputError):
            directional_nu(expr, DirectionSpec((1.0, 1.0)), radii=[0.5, 0.6, 0.1, 0.05, 0.01, 0.001])

    def test_arity(self):
        """测试方向维数不一致"""
        with pytest.raises(ArityMismatchError):
            directional_nu(parse("log(|z1|^1)", 2), DirectionSpec((1.0,)))


class TestIdentities:
    """重标度与齐次性测试类"""

    @pytest.mark.parametrize("text,n,p,q", [
        ("log(|z1|^1)", 2, (3, 1), 2),
        ("log(|z1*z2|^1)", 2, (2, 3), 1),
        ("0.5*log(|z1|^2 + |z2|^4)", 2, (1, 1), 3),
    ])
    def test_rescale(self, text, n, p, q):
        """测试 ν(φ, p/q) = ν(φ∘z^p, 1)/q"""
        report = rescale_identity_check(parse(text, n), p, q, seed=1, samples_per_shell=512)
        assert report.passed, report.to_dict()

    def test_homogeneity(self):
        """测试 ν(φ, c·a) = c·ν(φ, a)"""
        dirs = DirectionSpec.parse("2,3")
        report = homogeneity_check(parse("log(|z1*z2|^1)"), dirs, 2.0, samples_per_shell=256)
        assert report.passed
        assert report.lhs == pytest.approx(10.0, abs=1e-6)


class TestDirectionalIntegral:
    """方向数与积分判定测试类"""

    def test_converging(self):
        """测试方向数小于 1 且积分收敛"""
        report = directional_integral_check(parse("log(|z1|^1 + |z2|^1)"), DirectionSpec.parse("1/2,1/2"),
                                            seed=2, **BUDGET)
        assert report.nu == pytest.approx(0.5, abs=1e-6)
        assert report.converges
        assert report.passed

    def test_diverging(self):
        """测试方向数大于 1 且积分发散"""
        report = directional_integral_check(parse("3*log(|z1|^1 + |z2|^1)"), DirectionSpec.parse("1,1"),
                                            seed=2, **BUDGET)
        assert report.nu == pytest.approx(3.0, abs=1e-6)
        assert not report.converges
        assert report.agree

    def test_rotated(self):
        """测试酉旋转下的径向函数"""
        report = directional_integral_check(parse("0.5*log(|z1|^2 + |z2|^2)"), DirectionSpec.parse("1/2,1/2"),
                                            rotation=haar_unitary(2, seed=1), seed=3, **BUDGET)
        assert report.rotated
        assert report.passed

    def test_non_generic(self):
        """测试在坐标轴上恒为 -∞ 的情形"""
        report = directional_integral_check(parse("log(|z1|^1)", 2), DirectionSpec.parse("1,1"), seed=1, **BUDGET)
        assert report.non_generic
        assert report.passed

    def test_irrational_refused(self):
        """测试无理方向"""
        with pytest.raises(InputError):
            directional_integral_check(parse("log(|z1|^1)", 2), DirectionSpec((1.0, math.sqrt(2))))
