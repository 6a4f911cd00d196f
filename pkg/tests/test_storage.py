"""
结果缓存与运行配置测试用例
"""

import json
import shutil
import tempfile
from pathlib import Path

import pytest
from pydantic import ValidationError

from lelong.records import Command, ResultRecord, RunConfig, outputs_checksum
from lelong.storage import ResultCache, get_result_cache


@pytest.fixture
def temp_dir():
    """创建临时目录"""
    path = tempfile.mkdtemp()
    yield path
    shutil.rmtree(path, ignore_errors=True)


@pytest.fixture
def run():
    return RunConfig(command=Command.ESTIMATE, seed=7, expr="log(|z1|^1)", n=2, t=0.0)


class TestRunConfig:
    """运行配置测试类"""

    def test_hash_stable(self, run):
        """测试相同配置哈希相同"""
        again = RunConfig(command="estimate", seed=7, expr="log(|z1|^1)", n=2, t=0.0)
        assert run.config_hash() == again.config_hash()
        assert len(run.config_hash()) == 64

    def test_hash_ignores_non_semantic(self, run):
        """测试输出路径、线程数与格式不影响哈希"""
        other = run.model_copy(update={"workers": 8, "out": "x.csv", "format": "json", "cache_dir": "/tmp/c"})
        assert other.config_hash() == run.config_hash()

    def test_hash_depends_on_seed(self, run):
        """测试种子影响哈希"""
        assert run.model_copy(update={"seed": 8}).config_hash() != run.config_hash()

    def test_seed_required(self):
        """测试种子必须给出"""
        with pytest.raises(ValidationError):
            RunConfig(command=Command.ESTIMATE)

    def test_unknown_command(self):
        """测试未知命令"""
        with pytest.raises(ValidationError):
            RunConfig(command="plot", seed=1)


class TestResultRecord:
    """结果记录测试类"""

    def test_checksum(self, run):
        """测试校验和"""
        record = ResultRecord.create(run, {"nu_hat": 1.0})
        assert record.verify()
        assert record.checksum == outputs_checksum({"nu_hat": 1.0})
        record.outputs["nu_hat"] = 2.0
        assert not record.verify()


class TestResultCache:
    """结果缓存测试类"""

    def test_store_and_lookup(self, temp_dir, run):
        """测试保存后命中"""
        cache = ResultCache(temp_dir)
        cache.store(run, {"nu_hat": 1.0, "ci": [0.9, 1.1]})
        hit = cache.lookup(run)
        assert hit is not None
        assert hit.outputs == {"nu_hat": 1.0, "ci": [0.9, 1.1]}
        assert hit.seed == 7

    def test_miss_on_different_seed(self, temp_dir, run):
        """测试不同种子不命中"""
        cache = ResultCache(temp_dir)
        cache.store(run, {"nu_hat": 1.0})
        assert cache.lookup(run.model_copy(update={"seed": 8})) is None

    def test_hit_ignores_workers(self, temp_dir, run):
        """测试线程数不同仍然命中"""
        cache = ResultCache(temp_dir)
        cache.store(run, {"nu_hat": 1.0})
        assert cache.lookup(run.model_copy(update={"workers": 4})) is not None

    def test_tampered_entry(self, temp_dir, run):
        """测试手工修改的条目校验失败"""
        cache = ResultCache(temp_dir)
        cache.store(run, {"nu_hat": 1.0})
        entry = Path(temp_dir) / f"{run.config_hash()}.json"
        data = json.loads(entry.read_text(encoding="utf-8"))
        data["outputs"]["nu_hat"] = 0.5
        entry.write_text(json.dumps(data), encoding="utf-8")
        assert cache.lookup(run) is None

    def test_corrupt_entry(self, temp_dir, run):
        """测试损坏的条目"""
        cache = ResultCache(temp_dir)
        cache.store(run, {"nu_hat": 1.0})
        (Path(temp_dir) / f"{run.config_hash()}.json").write_text("{not json", encoding="utf-8")
        assert cache.lookup(run) is None

    def test_list_entries(self, temp_dir, run):
        """测试列出条目"""
        cache = ResultCache(temp_dir)
        cache.store(run, {"nu_hat": 1.0})
        cache.store(RunConfig(command=Command.EXACT, seed=0, expr="log(|z1|^1)"), {"value": "1"})
        assert len(cache.list_entries()) == 2
        only = cache.list_entries(command="exact")
        assert len(only) == 1
        assert only[0]["command"] == "exact"

    def test_singleton_rebuilds_for_new_dir(self, temp_dir):
        """测试给出新目录时重建单例"""
        first = get_result_cache(Path(temp_dir) / "a")
        assert get_result_cache() is first
        second = get_result_cache(Path(temp_dir) / "b")
        assert second is not first
        assert second.cache_dir == Path(temp_dir) / "b"
