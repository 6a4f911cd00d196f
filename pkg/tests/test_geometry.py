"""
子空间与限制定理测试用例
"""

import math

import numpy as np
import pytest

from lelong.errors import ArityMismatchError, InputError
from lelong.expr import evaluate, parse
from lelong.geometry import (
    Subspace,
    _is_multimodal,
    ball_bump_test,
    gaussian_test,
    haar_unitary,
    lelong_via_lines,
    plane_restriction_index,
    polar_grassmann_check,
    random_subspace,
    restrict,
)

LINE_BUDGET = dict(k_min=3, k_max=12, n_samples=512, batches=8, tol=0.05)


class TestHaar:
    """Haar 酉矩阵测试类"""

    def test_unitary(self):
        """测试 U*U = I"""
        for n in (1, 2, 5):
            assert haar_unitary(n, seed=3).residual() < 1e-12

    def test_reproducible(self):
        """测试同一 (seed, index) 得到同一矩阵"""
        a = haar_unitary(3, seed=1, index=2).entries
        b = haar_unitary(3, seed=1, index=2).entries
        c = haar_unitary(3, seed=1, index=3).entries
        assert np.array_equal(a, b)
        assert not np.allclose(a, c)

    def test_first_column_uniform(self):
        """测试第一列的 |u_11|² 均值为 1/n"""
        values = [abs(haar_unitary(3, seed=0, index=i).entries[0, 0]) ** 2 for i in range(400)]
        assert np.mean(values) == pytest.approx(1 / 3, abs=0.05)

    def test_invalid_dimension(self):
        """测试非法维数"""
        with pytest.raises(InputError):
            haar_unitary(0, seed=0)
        with pytest.raises(InputError):
            random_subspace(4, 3, seed=0)


class TestSubspace:
    """子空间测试类"""

    def test_span(self):
        """测试坐标子空间"""
        T = Subspace.span(3, [0, 2])
        assert (T.n, T.k) == (3, 2)
        assert np.allclose(T.embed(np.array([[1.0, 2.0]])), [[1.0, 0.0, 2.0]])

    def test_non_orthonormal_frame(self):
        """测试标架不正交"""
        with pytest.raises(InputError):
            Subspace(np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex))

    def test_random_subspace_frame(self):
        """测试随机子空间的标架正交"""
        T = random_subspace(2, 4, seed=5)
        assert np.allclose(T.frame.conj().T @ T.frame, np.eye(2))

    def test_restrict(self):
        """测试限制到坐标平面"""
        expr = parse("0.5*log(|z1|^2+|z2|^2+|z3|^2)")
        restricted = restrict(expr, Subspace.span(3, [0, 1]))
        assert restricted.n == 2
        assert evaluate(restricted, (3, 4)) == pytest.approx(math.log(5))

    def test_restrict_arity(self):
        """测试外围维数不一致"""
        with pytest.raises(ArityMismatchError):
            restrict(parse("log(|z1|^1)", 2), Subspace.span(3, [0]))


class TestGrassmann:
    """极坐标 Grassmann 公式测试类"""

    def test_gaussian_integral(self):
        """测试高斯积分 π^n / Π σ_i"""
        g = gaussian_test(2, [1.0, 2.0])
        assert g.integral == pytest.approx(math.pi ** 2 / 2)
        assert not g.radial
        assert g.fn(np.zeros((1, 2)))[0] == pytest.approx(1.0)

    def test_bump_integral(self):
        """测试 n = 1 的光滑鼓包积分"""
        g = ball_bump_test(1)
        assert g.fn(np.zeros((1, 1)))[0] == pytest.approx(math.exp(-1))
        assert g.fn(np.ones((1, 1)))[0] == 0.0
        assert 0 < g.integral < math.pi * math.exp(-1)

    def test_gaussian_lines_in_plane(self):
        """测试 ℂ² 中直线上的公式"""
        report = polar_grassmann_check(gaussian_test(2), 1, 2, n_planes=50, n_samples=4000, seed=0)
        assert report.rel_error < 0.05
        assert report.plane_std == pytest.approx(0.0, abs=1e-9)

    def test_anisotropic(self):
        """测试非径向检验函数"""
        report = polar_grassmann_check(gaussian_test(3, [1.0, 1.5, 2.0]), 2, 3,
                                       n_planes=200, n_samples=4000, seed=1, workers=2)
        assert report.rel_error < 0.08
        assert report.plane_std > 0

    def test_invalid_plane_dimension(self):
        """测试平面维数超出范围"""
        with pytest.raises(InputError):
            polar_grassmann_check(gaussian_test(2), 3, 2)


class TestLines:
    """一般直线测试类"""

    def test_sphere_lines(self):
        """测试 log|z| 在每条直线上的 Lelong 数为 1"""
        result = lelong_via_lines(parse("0.5*log(|z1|^2+|z2|^2)"), n_lines=5, seed=2, **LINE_BUDGET)
        assert result.median == pytest.approx(1.0, abs=0.1)
        assert not result.multimodal
        assert len(result.rows) == 5

    def test_too_few_lines(self):
        """测试直线条数不足"""
        with pytest.raises(InputError):
            lelong_via_lines(parse("log(|z1|^1)", 2), n_lines=2)

    def test_multimodal(self):
        """测试多峰判定"""
        assert _is_multimodal(np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0]))
        assert not _is_multimodal(np.array([1.0, 1.05, 0.98, 1.02, 1.01]))
        assert not _is_multimodal(np.array([1.0, 1.0, 1.0, 1.0, 3.0]))


class TestPlaneRestriction:
    """k 维平面限制测试类"""

    def test_sphere_in_c3(self):
        """测试两侧都小于 1"""
        report = plane_restriction_index(parse("0.5*log(|z1|^2+|z2|^2+|z3|^2)"), 2, seed=1,
                                         n_planes=3, **LINE_BUDGET)
        assert report.ambient_below_one
        assert report.restricted_below_one
        assert report.passed
        assert report.nu_ambient == pytest.approx(0.5, abs=0.08)

    def test_invalid_k(self):
        """测试平面维数超出范围"""
        with pytest.raises(InputError):
            plane_restriction_index(parse("log(|z1|^1)", 2), 3)
