"""
lelong - 统一配置模块

从环境变量和 .env 文件加载配置
"""

import os
from pathlib import Path
from typing import List
from functools import lru_cache

from dotenv import load_dotenv


def load_env_file():
    """加载 .env 文件"""
    env_path = Path(__file__).parent.parent / ".env"
    if env_path.exists():
        load_dotenv(env_path)


class Config:
    """配置类"""

    def __init__(self):
        load_env_file()

        # ========== 缓存 ==========
        self.CACHE_DIR: Path = Path(os.getenv("LELONG_CACHE_DIR", "data/cache"))

        # ========== 日志配置 ==========
        self.LOG_LEVEL: str = os.getenv("LELONG_LOG_LEVEL", "INFO")
        self.LOG_DIR: str = os.getenv("LELONG_LOG_DIR", "")

        # ========== 并行 ==========
        self.WORKERS: int = int(os.getenv("LELONG_WORKERS", "1"))

        # ========== 蒙特卡洛预算 ==========
        self.SAMPLES: int = int(os.getenv("LELONG_SAMPLES", "4096"))
        self.K_MIN: int = int(os.getenv("LELONG_K_MIN", "4"))
        self.K_MAX: int = int(os.getenv("LELONG_K_MAX", "18"))
        self.TOL: float = float(os.getenv("LELONG_TOL", "0.02"))
        self.BATCHES: int = int(os.getenv("LELONG_BATCHES", "16"))
        self.BRACKET_LO: float = float(os.getenv("LELONG_BRACKET_LO", "0.05"))
        self.BRACKET_HI: float = float(os.getenv("LELONG_BRACKET_HI", "8"))

    def validate(self) -> List[str]:
        """
        验证配置是否合理

        Returns:
            问题描述列表
        """
        problems = []

        if self.WORKERS < 1:
            problems.append("LELONG_WORKERS 必须 >= 1")
        if self.SAMPLES < 64:
            problems.append("LELONG_SAMPLES 必须 >= 64")
        if self.K_MIN >= self.K_MAX:
            problems.append("LELONG_K_MIN 必须小于 LELONG_K_MAX")
        if self.K_MAX - self.K_MIN + 1 < 6:
            problems.append("环带数量至少为 6")
        if self.TOL <= 0:
            problems.append("LELONG_TOL 必须为正数")
        if self.BATCHES < 2:
            problems.append("LELONG_BATCHES 必须 >= 2")
        if not 0 < self.BRACKET_LO < self.BRACKET_HI:
            problems.append("二分区间必须满足 0 < lo < hi")

        return problems

    def is_valid(self) -> bool:
        """检查配置是否有效"""
        return len(self.validate()) == 0


@lru_cache()
def get_config() -> Config:
    """获取配置单例"""
    return Config()


# 便捷访问
config = get_config()
