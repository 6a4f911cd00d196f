"""
异常定义模块

输入错误继承 ValueError，数值失败继承 ArithmeticError；
命令行按类型映射退出码（1 输入错误，2 数值失败，3 性质检查失败）。
"""

from typing import List, Optional


class LelongError(Exception):
    """所有 lelong 异常的基类"""

    exit_code = 1


class InputError(LelongError, ValueError):
    """输入不合法"""

    exit_code = 1


class ExprSyntaxError(InputError):
    """表达式语法错误，携带行列位置"""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (第 {line} 行, 第 {column} 列)")


class UnknownVariableError(InputError):
    """未知变量名"""


class NonPositiveParameterError(InputError):
    """指数或系数不是正数"""


class ArityMismatchError(InputError):
    """变量个数不一致"""


class UnsupportedFormError(InputError):
    """该 (形式, t) 组合没有闭式解"""


class WeightRangeError(InputError):
    """权函数参数超出允许范围"""


class DomainError(InputError):
    """点不在定义域内"""


class NumericalFailure(LelongError, ArithmeticError):
    """数值计算失败（奇异 Gram 矩阵、奇异 Jacobi 矩阵等）"""

    exit_code = 2


class PropertyViolation(LelongError):
    """性质检查失败"""

    exit_code = 3

    def __init__(self, message: str, failed: Optional[List[str]] = None):
        self.failed = failed or []
        super().__init__(message)
