"""
精确公式模块测试用例
"""

import math
from fractions import Fraction

import pytest

from lelong.errors import NonPositiveParameterError, UnsupportedFormError, WeightRangeError
from lelong.expr import Monomial, SumSquares, ToricForm, TwoVarCusp, parse
from lelong.toric import (
    as_fraction,
    classical_lelong,
    codimension_signal,
    concavity_check,
    exact_t_grid,
    interval_bounds,
    nu_exact,
    property5_bound,
    relative_type_radial,
    skoda_chain_check,
)


class TestExactValues:
    """闭式值测试类"""

    @pytest.mark.parametrize("k,n,t,expected", [
        (1, 2, 0, Fraction(1)),
        (2, 2, 0, Fraction(1, 2)),
        (2, 2, 1, Fraction(1)),
        (2, 3, 0, Fraction(1, 2)),
        (2, 3, 2, Fraction(1)),
        (3, 3, 0, Fraction(1, 3)),
        (1, 3, 1, Fraction(1)),
    ])
    def test_sum_squares(self, k, n, t, expected):
        """测试平方和族 max(1/k, 1/(n-t))"""
        value = nu_exact(ToricForm(SumSquares(k, n)), t)
        assert isinstance(value, Fraction)
        assert value == expected

    def test_monomial(self):
        """测试单项式族 max(|α|/k, |α|/(n-t))"""
        form = ToricForm(Monomial((1, 2), 3))
        assert nu_exact(form, 0) == Fraction(3, 2)
        assert nu_exact(form, 2) == Fraction(3)
        assert nu_exact(form, "3/2") == Fraction(2)

    def test_scale(self):
        """测试倍数"""
        form = ToricForm(SumSquares(2, 2), scale=3.0)
        assert nu_exact(form, 0) == Fraction(3, 2)

    def test_cusp(self):
        """测试尖点族在 t = 0 与 t = 1 的值"""
        form = ToricForm(TwoVarCusp(3.0))
        assert nu_exact(form, 0) == pytest.approx(1.5)
        assert nu_exact(form, 1) == pytest.approx(2.0)
        assert nu_exact(ToricForm(TwoVarCusp(0.5)), 1) == pytest.approx(1.0)

    def test_cusp_without_closed_form(self):
        """测试尖点族在中间 t 没有闭式"""
        with pytest.raises(UnsupportedFormError):
            nu_exact(ToricForm(TwoVarCusp(3.0)), "1/2")

    def test_t_out_of_range(self):
        """测试 t 超出 [0, n)"""
        with pytest.raises(WeightRangeError):
            nu_exact(ToricForm(SumSquares(1, 2)), 2)
        with pytest.raises(WeightRangeError):
            nu_exact(ToricForm(SumSquares(1, 2)), -0.5)

    def test_classical_lelong(self):
        """测试经典 Lelong 数"""
        assert classical_lelong(ToricForm(SumSquares(2, 3))) == 1
        assert classical_lelong(ToricForm(Monomial((2, 3), 2))) == 5
        assert classical_lelong(ToricForm(TwoVarCusp(5.0))) == pytest.approx(2.0)

    def test_relative_type(self):
        """测试相对型"""
        assert relative_type_radial(ToricForm(SumSquares(1, 2)), 2) == Fraction(1, 2)
        with pytest.raises(WeightRangeError):
            relative_type_radial(ToricForm(SumSquares(1, 2)), 0)

    def test_property5_bound(self):
        """测试第五条性质的界"""
        assert property5_bound(1, 2) == Fraction(2)
        assert property5_bound(2, 2) == math.inf
        assert property5_bound(3, 2) == 0
        with pytest.raises(NonPositiveParameterError):
            property5_bound(0, 1)


class TestGrids:
    """网格测试类"""

    def test_exact_grid(self):
        """测试精确网格包含端点且无浮点漂移"""
        grid = exact_t_grid(0, "1.9", "0.1")
        assert len(grid) == 20
        assert grid[-1] == Fraction(19, 10)
        assert all(isinstance(t, Fraction) for t in grid)

    def test_as_fraction_decimal(self):
        """测试浮点数按十进制转换"""
        assert as_fraction(0.05) == Fraction(1, 20)
        assert as_fraction("2/3") == Fraction(2, 3)

    def test_non_positive_step(self):
        """测试非正步长"""
        with pytest.raises(NonPositiveParameterError):
            exact_t_grid(0, 1, 0)


class TestChains:
    """Skoda 链与凸性测试类"""

    @pytest.mark.parametrize("form", [
        ToricForm(SumSquares(1, 2)),
        ToricForm(SumSquares(2, 3)),
        ToricForm(Monomial((1, 1), 2)),
        ToricForm(Monomial((1, 2, 2), 3), scale=0.5),
    ])
    def test_skoda_chain(self, form):
        """测试广义 Skoda 链没有违反"""
        report = skoda_chain_check(form, exact_t_grid(0, Fraction(form.n) - Fraction(1, 20), "0.05"))
        assert report.ok
        assert report.skipped == []
        assert len(report.rows) == 20 * form.n

    def test_skoda_sharpness(self):
        """测试平方和族在 t = 0 处右端取等号"""
        report = skoda_chain_check(ToricForm(SumSquares(3, 3)), [0, 1, 2])
        assert Fraction(0) in report.sharp_right
        assert Fraction(2) in report.sharp_left

    def test_skoda_cusp_skips(self):
        """测试尖点族跳过没有闭式的 t"""
        report = skoda_chain_check(ToricForm(TwoVarCusp(2.0)), exact_t_grid(0, "1.5", "0.5"))
        assert report.ok
        assert report.skipped == [Fraction(1, 2), Fraction(3, 2)]

    def test_concavity(self):
        """测试 ν 凸、1/ν 凹"""
        form = ToricForm(SumSquares(1, 3))
        report = concavity_check(form, exact_t_grid(0, "2.95", "0.05"))
        assert report.ok
        assert report.checked == 58

    def test_codimension_signal(self):
        """测试 ν 在 t = n - k 之后离开平台"""
        grid = exact_t_grid(0, "2.95", "0.05")
        assert codimension_signal(ToricForm(SumSquares(2, 3)), grid) == Fraction(21, 20)
        assert codimension_signal(ToricForm(SumSquares(1, 3)), grid) == Fraction(41, 20)
        assert codimension_signal(ToricForm(SumSquares(2, 3)), exact_t_grid(0, "0.9", "0.1")) is None


class TestIntervalBounds:
    """区间界测试类"""

    def test_exact_for_toric(self):
        """测试环面形式给出精确值"""
        bounds = interval_bounds(parse("0.5*log(|z1|^2+|z2|^2+|z3|^2)"), 0)
        assert bounds.exact
        assert bounds.lo == pytest.approx(1 / 3)

    def test_sum_and_max(self):
        """测试和与最大值的区间"""
        a = parse("log(|z1|^1)", 2)
        b = parse("0.5*log(|z1|^2+|z2|^2)")
        total = interval_bounds(parse("log(|z1|^1) + 0.5*log(|z1|^2+|z2|^2)"), 0)
        assert not total.exact
        assert total.lo == pytest.approx(1.0)
        assert total.hi == pytest.approx(interval_bounds(a, 0).hi + interval_bounds(b, 0).hi)
        top = interval_bounds(parse("max(log(|z1|^1), 0.5*log(|z1|^2+|z2|^2))"), 0)
        assert top.lo == pytest.approx(0.5)

    def test_scale(self):
        """测试倍数缩放区间"""
        bounds = interval_bounds(parse("3*max(log(|z1|^1), log(|z2|^1))"), 0)
        assert bounds.hi == pytest.approx(3.0)

    def test_cusp_interval(self):
        """测试尖点族中间 t 的区间包含端点值之间的范围"""
        bounds = interval_bounds(parse("log(|z1|^2+|z2|^4)"), "0.5")
        assert not bounds.exact
        assert bounds.lo <= bounds.hi
        assert bounds.lo >= 4 / 3 - 1e-12
