"""
运行配置与结果记录

RunConfig 描述一次命令行调用；ResultRecord 是缓存中的一条结果。
"""

import hashlib
import json
from datetime import datetime
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from lelong import __version__


class Command(str, Enum):
    """命令"""
    EXACT = "exact"
    ESTIMATE = "estimate"
    SCAN_T = "scan-t"
    RESTRICT = "restrict"
    BERGMAN = "bergman"
    KISELMAN = "kiselman"
    VERIFY = "verify"
    LEVELSET = "levelset"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


# 不影响计算结果的字段
_NON_SEMANTIC = {"out", "cache", "cache_dir", "log_dir", "workers", "format"}


class RunConfig(BaseModel):
    """一次运行的完整配置，seed 总是显式给出"""
    command: Command
    seed: int
    expr: Optional[str] = None
    n: Optional[int] = None
    t: Optional[float] = None
    weight_t: Optional[float] = None
    weight_expr: Optional[str] = None
    center: Optional[str] = None
    t_grid: Optional[str] = None
    k_range: Optional[str] = None
    annuli: Optional[int] = None
    samples: Optional[int] = None
    tol: Optional[float] = None
    p: Optional[str] = None
    q: Optional[int] = None
    dirs: Optional[str] = None
    point: Optional[str] = None
    lines: Optional[int] = None
    m: Optional[int] = None
    degree: Optional[int] = None
    radius: Optional[float] = None
    grid: Optional[str] = None
    level: Optional[float] = None
    suite: Optional[str] = None
    out: Optional[str] = None
    cache: bool = True
    cache_dir: Optional[str] = None
    log_dir: Optional[str] = None
    workers: Optional[int] = None
    format: OutputFormat = OutputFormat.CSV

    def semantic_dict(self) -> Dict[str, Any]:
        """参与哈希的字段"""
        return self.model_dump(mode="json", exclude=_NON_SEMANTIC)

    def config_hash(self) -> str:
        """语义字段的 SHA-256，同时包含版本号"""
        payload = {"config": self.semantic_dict(), "version": __version__}
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def outputs_checksum(outputs: Dict[str, Any]) -> str:
    """结果内容的 SHA-256"""
    text = json.dumps(outputs, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ResultRecord(BaseModel):
    """缓存中的一条结果"""
    config_hash: str
    command: Command
    seed: int
    timestamp: str = Field(default_factory=lambda: datetime.now().isoformat())
    outputs: Dict[str, Any]
    provenance: Dict[str, str] = Field(default_factory=lambda: {"lelong": __version__})
    checksum: str = ""

    @classmethod
    def create(cls, config: RunConfig, outputs: Dict[str, Any]) -> "ResultRecord":
        return cls(
            config_hash=config.config_hash(),
            command=config.command,
            seed=config.seed,
            outputs=outputs,
            checksum=outputs_checksum(outputs),
        )

    def verify(self) -> bool:
        return self.checksum == outputs_checksum(self.outputs)
