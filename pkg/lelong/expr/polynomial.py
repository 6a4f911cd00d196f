"""
稀疏多元多项式模块

多项式以 {指数元组: 复系数} 的稀疏形式存储，指数为精确整数，
系数为双精度复数。PolyMap 表示多项式映射 f = (f_1, ..., f_m)。
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from lelong.errors import ArityMismatchError, InputError

Exponent = Tuple[int, ...]


def format_real(x: float) -> str:
    """把实数格式化为可被解析器精确读回的文本"""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_complex(c: complex) -> str:
    """格式化复系数，非实数写成 (a+bi) 形式"""
    c = complex(c)
    if c.imag == 0:
        return format_real(c.real)
    sign = "+" if c.imag >= 0 else "-"
    return f"({format_real(c.real)}{sign}{format_real(abs(c.imag))}i)"


def _monomial_text(exp: Exponent) -> str:
    factors = []
    for j, e in enumerate(exp):
        if e == 1:
            factors.append(f"z{j + 1}")
        elif e > 1:
            factors.append(f"z{j + 1}^{e}")
    return "*".join(factors)


@dataclass(frozen=True)
class Polynomial:
    """
    n 元复系数稀疏多项式

    Attributes:
        n: 变量个数
        terms: 规范化后的 (指数, 系数) 元组，按指数排序且不含零系数
    """
    n: int
    terms: Tuple[Tuple[Exponent, complex], ...] = ()

    @classmethod
    def from_terms(cls, n: int, mapping: Mapping[Exponent, complex]) -> "Polynomial":
        """
        由指数到系数的映射构造多项式（合并同类项并去掉零系数）

        Args:
            n: 变量个数
            mapping: 指数元组到系数的映射

        Returns:
            Polynomial: 规范化的多项式
        """
        if n < 1:
            raise InputError(f"变量个数必须 >= 1: {n}")
        merged: Dict[Exponent, complex] = {}
        for exp, coeff in mapping.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n:
                raise ArityMismatchError(f"指数长度 {len(exp)} 与变量个数 {n} 不一致")
            if any(e < 0 for e in exp):
                raise InputError(f"指数必须为非负整数: {exp}")
            coeff = complex(coeff)
            if not (np.isfinite(coeff.real) and np.isfinite(coeff.imag)):
                raise InputError(f"系数必须有限: {coeff}")
            merged[exp] = merged.get(exp, 0j) + coeff
        terms = tuple(sorted((e, c) for e, c in merged.items() if c != 0))
        return cls(n=n, terms=terms)

    @classmethod
    def constant(cls, n: int, value: complex) -> "Polynomial":
        """常数多项式"""
        return cls.from_terms(n, {(0,) * n: value})

    @classmethod
    def variable(cls, n: int, index: int) -> "Polynomial":
        """第 index 个坐标函数（从 0 开始）"""
        if not 0 <= index < n:
            raise ArityMismatchError(f"变量下标 {index} 超出范围 [0, {n})")
        exp = [0] * n
        exp[index] = 1
        return cls.from_terms(n, {tuple(exp): 1.0})

    @classmethod
    def monomial(cls, n: int, exp: Sequence[int], coeff: complex = 1.0) -> "Polynomial":
        """单项式 coeff * z^exp"""
        return cls.from_terms(n, {tuple(exp): coeff})

    # ------------------------------------------------------------------
    # 代数运算
    # ------------------------------------------------------------------

    def as_dict(self) -> Dict[Exponent, complex]:
        return dict(self.terms)

    def _check_same(self, other: "Polynomial"):
        if other.n != self.n:
            raise ArityMismatchError(f"多项式变量个数不一致: {self.n} vs {other.n}")

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n, other)
        self._check_same(other)
        merged = self.as_dict()
        for exp, c in other.terms:
            merged[exp] = merged.get(exp, 0j) + c
        return Polynomial.from_terms(self.n, merged)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(n=self.n, terms=tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n, other)
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial.from_terms(self.n, {e: c * complex(other) for e, c in self.terms})
        self._check_same(other)
        product: Dict[Exponent, complex] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                exp = tuple(a + b for a, b in zip(e1, e2))
                product[exp] = product.get(exp, 0j) + c1 * c2
        return Polynomial.from_terms(self.n, product)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Polynomial":
        if int(power) != power or power < 0:
            raise InputError(f"多项式幂必须是非负整数: {power}")
        result = Polynomial.constant(self.n, 1.0)
        base = self
        k = int(power)
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # ------------------------------------------------------------------
    # 结构信息
    # ------------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e, _ in self.terms)

    @property
    def degree(self) -> int:
        """总次数（零多项式为 -1）"""
        return max((sum(e) for e, _ in self.terms), default=-1)

    @property
    def order(self) -> int:
        """在原点的消没阶数，即最低总次数"""
        return min((sum(e) for e, _ in self.terms), default=-1)

    def variables_used(self) -> List[int]:
        used = set()
        for exp, _ in self.terms:
            used.update(j for j, e in enumerate(exp) if e)
        return sorted(used)

    def single_term(self) -> Optional[Tuple[Exponent, complex]]:
        """若为单项式返回 (指数, 系数)，否则返回 None"""
        if len(self.terms) == 1:
            return self.terms[0]
        return None

    def embed(self, n: int) -> "Polynomial":
        """把多项式视为更多变量的多项式"""
        if n < self.n:
            raise ArityMismatchError(f"无法把 {self.n} 元多项式嵌入 {n} 元空间")
        pad = (0,) * (n - self.n)
        return Polynomial.from_terms(n, {e + pad: c for e, c in self.terms})

    # ------------------------------------------------------------------
    # 求值与代换
    # ------------------------------------------------------------------

    def evaluate(self, z: Sequence[complex]) -> complex:
        """在单点求值"""
        return complex(self.evaluate_many(np.asarray(z, dtype=complex).reshape(1, -1))[0])

    def evaluate_many(self, Z: np.ndarray) -> np.ndarray:
        """
        在多个点上向量化求值

        Args:
            Z: 形状为 (N, n) 的复数组

        Returns:
            np.ndarray: 形状为 (N,) 的复数组
        """
        Z = np.asarray(Z, dtype=complex)
        if Z.ndim != 2 or Z.shape[1] != self.n:
            raise ArityMismatchError(f"求值点维数 {Z.shape} 与变量个数 {self.n} 不一致")
        out = np.zeros(Z.shape[0], dtype=complex)
        for exp, coeff in self.terms:
            term = np.full(Z.shape[0], coeff, dtype=complex)
            for j, e in enumerate(exp):
                if e:
                    term = term * Z[:, j] ** e
            out += term
        return out

    def substitute(self, components: Sequence["Polynomial"]) -> "Polynomial":
        """
        把第 j 个变量代换为 components[j]

        Args:
            components: 长度为 n 的多项式序列，变量个数相同

        Returns:
            Polynomial: 代换后的多项式
        """
        if len(components) != self.n:
            raise ArityMismatchError(f"代换需要 {self.n} 个分量，实际 {len(components)}")
        n_in = components[0].n
        powers: Dict[Tuple[int, int], Polynomial] = {}
        result = Polynomial(n=n_in)
        for exp, coeff in self.terms:
            term = Polynomial.constant(n_in, coeff)
            for j, e in enumerate(exp):
                if e:
                    key = (j, e)
                    if key not in powers:
                        powers[key] = components[j] ** e
                    term = term * powers[key]
            result = result + term
        return result

    def derivative(self, index: int) -> "Polynomial":
        """对第 index 个变量的偏导数"""
        out: Dict[Exponent, complex] = {}
        for exp, coeff in self.terms:
            e = exp[index]
            if e == 0:
                continue
            new = list(exp)
            new[index] = e - 1
            out[tuple(new)] = out.get(tuple(new), 0j) + coeff * e
        return Polynomial.from_terms(self.n, out)

    def to_text(self) -> str:
        """输出 DSL 文本"""
        if not self.terms:
            return "0"
        parts = []
        # 总次数高的项在前
        ordered = sorted(self.terms, key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))
        for idx, (exp, coeff) in enumerate(ordered):
            negative = coeff.imag == 0 and coeff.real < 0
            mag = complex(-coeff.real, 0.0) if negative else coeff
            mono = _monomial_text(exp)
            if not mono:
                body = format_complex(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{format_complex(mag)}*{mono}"
            if idx == 0:
                parts.append(("-" if negative else "") + body)
            else:
                parts.append((" - " if negative else " + ") + body)
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class PolyMap:
    """
    多项式映射 f: C^{n_in} -> C^{n_out}

    Attributes:
        components: 各分量多项式，变量个数均为 n_in
        n_in: 输入维数
    """
    components: Tuple[Polynomial, ...]
    n_in: int

    def __post_init__(self):
        if not self.components:
            raise InputError("多项式映射至少需要一个分量")
        for comp in self.components:
            if comp.n != self.n_in:
                raise ArityMismatchError(
                    f"映射分量的变量个数 {comp.n} 与输入维数 {self.n_in} 不一致"
                )

    @property
    def n_out(self) -> int:
        return len(self.components)

    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        """恒等映射"""
        return cls(tuple(Polynomial.variable(n, j) for j in range(n)), n)

    @classmethod
    def linear(cls, matrix, offset: Optional[Iterable[complex]] = None) -> "PolyMap":
        """
        一次映射 z -> matrix @ z + offset

        Args:
            matrix: 形状为 (n_out, n_in) 的复矩阵
            offset: 长度为 n_out 的平移向量

        Returns:
            PolyMap: 一次多项式映射
        """
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        n_out, n_in = matrix.shape
        shift = np.zeros(n_out, dtype=complex) if offset is None else np.asarray(list(offset), dtype=complex)
        comps = []
        for i in range(n_out):
            mapping: Dict[Exponent, complex] = {(0,) * n_in: shift[i]}
            for j in range(n_in):
                exp = [0] * n_in
                exp[j] = 1
                mapping[tuple(exp)] = matrix[i, j]
            comps.append(Polynomial.from_terms(n_in, mapping))
        return cls(tuple(comps), n_in)

    @classmethod
    def monomial_powers(cls, powers: Sequence[int], center: Optional[Sequence[complex]] = None) -> "PolyMap":
        """
        映射 z_i -> w_i + (z_i - w_i)^{p_i}，center 缺省为原点

        Args:
            powers: 正整数幂 p_i
            center: 中心点 w

        Returns:
            PolyMap: 单项式幂映射
        """
        n = len(powers)
        w = [0j] * n if center is None else [complex(c) for c in center]
        comps = []
        for i, p in enumerate(powers):
            if int(p) != p or p < 1:
                raise InputError(f"幂必须是正整数: {p}")
            shifted = Polynomial.variable(n, i) - w[i]
            comps.append(shifted ** int(p) + w[i])
        return cls(tuple(comps), n)

    def evaluate(self, z: Sequence[complex]) -> np.ndarray:
        return self.evaluate_many(np.asarray(z, dtype=complex).reshape(1, -1))[0]

    def evaluate_many(self, Z: np.ndarray) -> np.ndarray:
        """向量化求值，返回形状 (N, n_out)"""
        return np.stack([comp.evaluate_many(Z) for comp in self.components], axis=1)

    def after(self, inner: "PolyMap") -> "PolyMap":
        """复合映射 self ∘ inner"""
        if inner.n_out != self.n_in:
            raise ArityMismatchError(f"映射复合维数不一致: {inner.n_out} vs {self.n_in}")
        return PolyMap(tuple(c.substitute(inner.components) for c in self.components), inner.n_in)

    def jacobian_at(self, z: Sequence[complex]) -> np.ndarray:
        """在 z 处的复 Jacobi 矩阵 (n_out, n_in)"""
        z = np.asarray(z, dtype=complex)
        jac = np.zeros((self.n_out, self.n_in), dtype=complex)
        for i, comp in enumerate(self.components):
            for j in range(self.n_in):
                jac[i, j] = comp.derivative(j).evaluate(z)
        return jac

    def to_text(self) -> str:
        return "(" + ", ".join(c.to_text() for c in self.components) + ")"


def linear_map(matrix, offset: Optional[Iterable[complex]] = None) -> PolyMap:
    """一次映射 z -> matrix @ z + offset"""
    return PolyMap.linear(matrix, offset)


def monomial_power_map(powers: Sequence[int], center: Optional[Sequence[complex]] = None) -> PolyMap:
    """单项式幂映射 z_i -> w_i + (z_i - w_i)^{p_i}"""
    return PolyMap.monomial_powers(powers, center)
