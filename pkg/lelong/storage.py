"""
结果缓存模块

以配置哈希为键的 JSON 文件缓存
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import ValidationError

from lelong.config import config
from lelong.log import logger
from lelong.records import ResultRecord, RunConfig


class ResultCache:
    """
    结果缓存类

    每条结果存为 <config_hash>.json，index.json 记录命令与时间
    """

    def __init__(self, cache_dir: Optional[Union[str, Path]] = None):
        """
        初始化结果缓存

        Args:
            cache_dir: 缓存目录，缺省取 LELONG_CACHE_DIR
        """
        self.cache_dir = Path(cache_dir) if cache_dir else Path(config.CACHE_DIR)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

        # 索引文件
        self.index_file = self.cache_dir / "index.json"
        self._ensure_index()

        logger.debug(f"结果缓存初始化完成: {self.cache_dir}")

    def _ensure_index(self):
        """确保索引文件存在"""
        if not self.index_file.exists():
            self._save_index({})

    def _load_index(self) -> Dict:
        """加载索引"""
        try:
            with open(self.index_file, 'r', encoding='utf-8') as f:
                return json.load(f)
        except Exception as e:
            logger.warning(f"加载索引失败: {e}")
            return {}

    def _save_index(self, index: Dict):
        """保存索引"""
        try:
            with open(self.index_file, 'w', encoding='utf-8') as f:
                json.dump(index, f, ensure_ascii=False, indent=2, sort_keys=True)
        except Exception as e:
            logger.error(f"保存索引失败: {e}")

    def _entry_file(self, config_hash: str) -> Path:
        return self.cache_dir / f"{config_hash}.json"

    def store(self, run: RunConfig, outputs: Dict[str, Any]) -> ResultRecord:
        """
        保存结果

        Args:
            run: 运行配置
            outputs: 结果（可 JSON 序列化）

        Returns:
            ResultRecord: 写入的记录
        """
        record = ResultRecord.create(run, outputs)
        entry = self._entry_file(record.config_hash)
        with open(entry, 'w', encoding='utf-8') as f:
            f.write(record.model_dump_json(indent=2))

        index = self._load_index()
        index[record.config_hash] = {"command": record.command.value, "seed": record.seed,
                                     "created_at": record.timestamp}
        self._save_index(index)

        logger.info(f"结果已缓存: {record.config_hash[:12]}")
        return record

    def lookup(self, run: RunConfig) -> Optional[ResultRecord]:
        """
        查找结果；损坏或校验失败的条目被忽略

        Args:
            run: 运行配置

        Returns:
            ResultRecord: 命中的记录，未命中返回 None
        """
        config_hash = run.config_hash()
        entry = self._entry_file(config_hash)
        if not entry.exists():
            return None
        try:
            with open(entry, 'r', encoding='utf-8') as f:
                record = ResultRecord.model_validate_json(f.read())
        except (OSError, ValueError, ValidationError) as e:
            logger.warning(f"缓存条目损坏，重新计算: {config_hash[:12]} - {e}")
            return None
        if record.config_hash != config_hash or not record.verify():
            logger.warning(f"缓存条目校验失败，重新计算: {config_hash[:12]}")
            return None
        logger.info(f"缓存命中: {config_hash[:12]}")
        return record

    def list_entries(self, command: Optional[str] = None, limit: int = 10) -> List[Dict]:
        """
        列出缓存条目

        Args:
            command: 可选的命令过滤
            limit: 返回数量限制

        Returns:
            List[Dict]: 条目列表，按时间倒序
        """
        index = self._load_index()
        entries = [
            {"config_hash": key, **value}
            for key, value in index.items()
            if not command or value.get("command") == command
        ]
        entries.sort(key=lambda x: x.get("created_at", ""), reverse=True)
        return entries[:limit]


# 单例模式
_result_cache: Optional[ResultCache] = None


def get_result_cache(cache_dir: Optional[Union[str, Path]] = None) -> ResultCache:
    """获取结果缓存单例；给出 cache_dir 时按该目录重建"""
    global _result_cache
    if _result_cache is None or (cache_dir is not None and Path(cache_dir) != _result_cache.cache_dir):
        _result_cache = ResultCache(cache_dir)
    return _result_cache
