"""
lelong - 广义 Lelong 数计算与交叉验证

命令行入口，等价于 python -m lelong
"""

import sys

from lelong.cli import main


if __name__ == "__main__":
    sys.exit(main())
