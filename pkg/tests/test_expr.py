"""
表达式模块测试用例
"""

import math

import numpy as np
import pytest

from lelong.errors import (
    ArityMismatchError,
    ExprSyntaxError,
    InputError,
    NonPositiveParameterError,
    UnknownVariableError,
)
from lelong.expr import (
    Compose,
    LogSumPow,
    Monomial,
    PolyMap,
    Polynomial,
    Scale,
    SumSquares,
    ToricForm,
    TwoVarCusp,
    classify_toric,
    compose,
    evaluate,
    evaluate_many,
    expand,
    is_constant,
    linear_map,
    monomial_power_map,
    parse,
    to_text,
    zero,
)


class TestParser:
    """解析器测试类"""

    def test_parse_sum_of_squares(self):
        """测试解析平方和"""
        expr = parse("0.5*log(|z1|^2+|z2|^2)")
        assert expr.n == 2
        assert isinstance(expr, Scale)
        assert evaluate(expr, (3, 4)) == pytest.approx(math.log(5))

    def test_explicit_arity(self):
        """测试显式给出维数"""
        expr = parse("log(|z1|^1)", 3)
        assert expr.n == 3
        assert evaluate(expr, (0.5, 7, 9)) == pytest.approx(math.log(0.5))

    def test_variable_beyond_arity(self):
        """测试变量超出维数"""
        with pytest.raises(UnknownVariableError):
            parse("log(|z3|^2)", 2)

    def test_unknown_variable(self):
        """测试未知变量"""
        with pytest.raises(UnknownVariableError):
            parse("log(|w1|^2)")

    def test_missing_exponent_reports_position(self):
        """测试缺少指数时报告行列"""
        with pytest.raises(ExprSyntaxError) as info:
            parse("log(|z1|)")
        assert info.value.line == 1
        assert info.value.column > 1

    def test_unknown_function(self):
        """测试未知函数"""
        with pytest.raises(ExprSyntaxError):
            parse("sin(z1)")

    def test_negative_scale(self):
        """测试负倍数"""
        with pytest.raises(NonPositiveParameterError):
            parse("-1*log(|z1|^2)")

    def test_zero_polynomial(self):
        """测试恒为零的多项式"""
        with pytest.raises(InputError):
            parse("log(|z1-z1|^2)")

    def test_zero_function(self):
        """测试零函数"""
        expr = parse("0", 2)
        assert evaluate(expr, (0, 0)) == 0.0
        assert to_text(expr) == "0"

    def test_complex_literal(self):
        """测试复数字面量"""
        expr = parse("log(|z1 - (1+2i)|^2)")
        assert evaluate(expr, (1 + 2j,)) == -math.inf
        assert evaluate(expr, (1 + 3j,)) == pytest.approx(0.0)

    def test_max_and_sum(self):
        """测试 max 与和"""
        expr = parse("max(log(|z1|^1), log(|z2|^1)) + log(|z1|^1)")
        assert evaluate(expr, (0.5, 0.25)) == pytest.approx(2 * math.log(0.5))


class TestEvaluation:
    """求值测试类"""

    def test_singularity_is_minus_inf(self):
        """测试奇点处为 -inf"""
        expr = parse("0.5*log(|z1|^2+|z2|^2)")
        assert evaluate(expr, (0, 0)) == -math.inf

    def test_evaluate_many_matches_pointwise(self):
        """测试批量求值与逐点求值一致"""
        expr = parse("max(log(|z1*z2|^1), 0.5*log(|z1|^2+|z2 + 1|^2))")
        rng = np.random.default_rng(3)
        Z = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
        values = evaluate_many(expr, Z)
        assert values.shape == (16,)
        for z, v in zip(Z, values):
            assert evaluate(expr, z) == pytest.approx(v)

    def test_arity_mismatch(self):
        """测试点的维数不一致"""
        with pytest.raises(ArityMismatchError):
            evaluate(parse("log(|z1|^2)", 2), (1.0,))

    def test_is_constant(self):
        """测试常数判定"""
        assert is_constant(parse("log(|1|^2 + |2|^2)", 1))
        assert not is_constant(parse("log(|z1|^2 + |1|^2)"))

    def test_to_text_round_trip(self):
        """测试打印后重新解析的表达式逐点相同"""
        expr = parse("2*max(log(|z1^2*z2|^1), 0.5*log(|z1|^2+|z2|^6)) + log(|z1 + 3|^0.5)")
        again = parse(to_text(expr), expr.n)
        for z in [(0.3, 0.7j), (1.5 - 1j, 0.2)]:
            assert evaluate(again, z) == pytest.approx(evaluate(expr, z))


class TestComposition:
    """复合测试类"""

    def test_compose_linear(self):
        """测试与线性映射复合"""
        expr = compose(parse("log(|z1|^1)", 2), linear_map([[1, 1], [0, 1]]))
        assert isinstance(expr, Compose)
        assert evaluate(expr, (1, 2)) == pytest.approx(math.log(3))

    def test_expand_removes_compose(self):
        """测试展开后不含 Compose"""
        expr = compose(parse("0.5*log(|z1|^2+|z2|^2)"), monomial_power_map((2, 3)))
        expanded = expand(expr)
        assert "Compose" not in repr(expanded)
        z = (0.4 + 0.1j, -0.3j)
        assert evaluate(expanded, z) == pytest.approx(evaluate(expr, z))

    def test_compose_arity(self):
        """测试映射维数不一致"""
        with pytest.raises(ArityMismatchError):
            compose(parse("log(|z1|^1)", 2), linear_map([[1.0]]))

    def test_monomial_power_map_center(self):
        """测试带中心的幂映射"""
        f = monomial_power_map((2, 1), (1.0, 0.0))
        assert np.allclose(f.evaluate((3.0, 5.0)), [1.0 + 4.0, 5.0])

    def test_jacobian(self):
        """测试 Jacobi 矩阵"""
        f = PolyMap((Polynomial.variable(2, 0) * Polynomial.variable(2, 1), Polynomial.variable(2, 1)), 2)
        J = f.jacobian_at((2.0, 3.0))
        assert np.allclose(J, [[3.0, 2.0], [0.0, 1.0]])

    def test_zero_is_sum(self):
        """测试零函数的维数"""
        assert zero(3).n == 3


class TestToricForms:
    """环面标准形测试类"""

    def test_classify_sum_squares(self):
        """测试识别平方和"""
        form = classify_toric(parse("0.5*log(|z2|^2+|z3|^2)", 3))
        assert form is not None
        assert form.variant == SumSquares(2, 3)
        assert form.scale == pytest.approx(1.0)

    def test_classify_cusp(self):
        """测试识别尖点族"""
        form = classify_toric(parse("log(|z1|^2+|z2|^6)"))
        assert form is not None
        assert isinstance(form.variant, TwoVarCusp)
        assert form.variant.a == pytest.approx(3.0)

    def test_classify_monomial(self):
        """测试识别单项式"""
        form = classify_toric(parse("log(|z1*z2^2|^1)"))
        assert form is not None
        assert isinstance(form.variant, Monomial)
        assert sum(form.variant.alpha) * form.scale == pytest.approx(3.0)

    def test_not_toric(self):
        """测试非环面形式"""
        assert classify_toric(parse("log(|z1 + z2^2|^2)")) is None

    def test_to_expr_realizes_form(self):
        """测试标准形实现为表达式"""
        form = ToricForm(SumSquares(2, 3), scale=2.0)
        expr = form.to_expr()
        assert isinstance(expr, Scale)
        assert isinstance(expr.child, LogSumPow)
        assert evaluate(expr, (3, 4, 100)) == pytest.approx(2 * math.log(5))

    def test_invalid_forms(self):
        """测试不合法的形式"""
        with pytest.raises(InputError):
            SumSquares(3, 2)
        with pytest.raises(InputError):
            Monomial((0, 1), 2)
        with pytest.raises(InputError):
            TwoVarCusp(-1.0)
