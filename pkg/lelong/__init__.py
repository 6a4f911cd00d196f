"""
lelong - 广义 Lelong 数计算与交叉验证工具包

提供多重次调和函数表达式的解析、精确公式、蒙特卡洛阈值估计、
直线/子空间限制、Bergman 函数逼近以及 Kiselman 方向 Lelong 数。
"""

__version__ = "1.0.0"

__all__ = ["__version__"]
