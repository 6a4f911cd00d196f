"""
命令行测试用例
"""

import json
import shutil
import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from lelong.cli import build_parser, budget_of, config_from_args, main, parse_grid, parse_point, parse_t_grid
from lelong.errors import InputError
from lelong.records import Command

SPHERE3 = "0.5*log(|z1|^2+|z2|^2+|z3|^2)"
SPHERE2 = "0.5*log(|z1|^2+|z2|^2)"
SMALL = ["--k-range", "3:12", "--samples", "1024", "--tol", "0.05"]


@pytest.fixture
def temp_dir():
    """创建临时目录"""
    path = tempfile.mkdtemp()
    yield path
    shutil.rmtree(path, ignore_errors=True)


class TestParsing:
    """参数解析测试类"""

    def test_point(self):
        """测试解析复数点"""
        assert parse_point("0.1+0.2j, 0") == (0.1 + 0.2j, 0j)
        assert parse_point("2i,1") == (2j, 1 + 0j)
        with pytest.raises(InputError):
            parse_point("a,b")

    def test_grid(self):
        """测试解析点网格"""
        assert parse_grid("0,0;0.5,0") == [(0j, 0j), (0.5 + 0j, 0j)]
        with pytest.raises(InputError):
            parse_grid(" ; ")

    def test_t_grid(self):
        """测试解析 t 网格"""
        assert parse_t_grid("0:1:1/2") == [Fraction(0), Fraction(1, 2), Fraction(1)]
        assert parse_t_grid("1/3, 2") == [Fraction(1, 3), Fraction(2)]
        with pytest.raises(InputError):
            parse_t_grid("0:1")

    def test_seed_required(self):
        """测试随机命令缺少种子"""
        args = build_parser().parse_args(["estimate", "--expr", SPHERE2])
        with pytest.raises(InputError):
            config_from_args(args)

    def test_exact_without_seed(self):
        """测试 exact 不需要种子"""
        args = build_parser().parse_args(["exact", "--expr", SPHERE2, "--t", "1/2"])
        run = config_from_args(args)
        assert run.command == Command.EXACT
        assert run.t_grid == "1/2"
        assert run.t == 0.5

    def test_budget(self):
        """测试预算参数"""
        args = build_parser().parse_args(["estimate", "--expr", SPHERE2, "--seed", "1", "--k-range", "3:12",
                                          "--annuli", "6", "--samples", "512", "--workers", "2"])
        budget = budget_of(config_from_args(args))
        assert (budget["k_min"], budget["k_max"]) == (3, 8)
        assert budget["n_samples"] == 512
        assert budget["workers"] == 2

    def test_bad_k_range(self):
        """测试环带范围格式错误"""
        args = build_parser().parse_args(["estimate", "--expr", SPHERE2, "--seed", "1", "--k-range", "3-12"])
        with pytest.raises(InputError):
            budget_of(config_from_args(args))


class TestMain:
    """命令执行测试类"""

    def test_exact_value(self, capsys):
        """测试 exact 打印分数"""
        assert main(["exact", "--expr", SPHERE3]) == 0
        assert capsys.readouterr().out.strip() == "1/3"

    def test_exact_t(self, capsys):
        """测试 exact 给定 t"""
        assert main(["exact", "--expr", SPHERE2, "--t", "1"]) == 0
        assert capsys.readouterr().out.strip() == "1"

    def test_exact_grid_csv(self, capsys):
        """测试 exact 的 t 网格输出 CSV"""
        assert main(["exact", "--expr", SPHERE2, "--t-grid", "0:1:1/2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "t,nu,lo,hi,exact"
        assert lines[1].startswith("0,1/2,")
        assert lines[1].endswith(",True")
        assert len(lines) == 5
        assert lines[-1].startswith("# seed=0 version=")

    def test_exact_json(self, capsys):
        """测试 JSON 输出"""
        assert main(["exact", "--expr", SPHERE2, "--t", "1", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["command"] == "exact"
        assert payload["rows"][0]["nu"] == "1"
        assert payload["rows"][0]["exact"] is True

    def test_missing_seed(self, capsys):
        """测试缺少种子返回 1"""
        assert main(["estimate", "--expr", SPHERE2]) == 1

    def test_bad_expression(self, capsys):
        """测试表达式语法错误返回 1"""
        assert main(["exact", "--expr", "log(|z1|"]) == 1

    def test_unknown_option(self, capsys):
        """测试未知参数以 1 退出"""
        with pytest.raises(SystemExit) as info:
            main(["exact", "--bogus"])
        assert info.value.code == 1

    def test_estimate_csv(self, temp_dir, capsys):
        """测试 estimate 的 CSV 输出"""
        argv = ["estimate", "--expr", SPHERE2, "--seed", "3", "--cache-dir", temp_dir, *SMALL]
        assert main(argv) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0] == "t,nu_hat,ci_lo,ci_hi,exact,flags"
        assert lines[-1].startswith("# seed=3 version=")
        assert float(lines[1].split(",")[1]) == pytest.approx(0.5, abs=0.1)

    def test_cache_hit_identical(self, temp_dir, capsys):
        """测试缓存命中与新算结果逐字节相同"""
        argv = ["estimate", "--expr", SPHERE2, "--seed", "5", "--cache-dir", temp_dir, *SMALL]
        assert main(argv) == 0
        fresh = capsys.readouterr().out
        entries = [p for p in Path(temp_dir).glob("*.json") if p.name != "index.json"]
        assert len(entries) == 1
        assert main(argv + ["--workers", "2"]) == 0
        assert capsys.readouterr().out == fresh

    def test_out_file(self, temp_dir):
        """测试写入输出文件"""
        out = Path(temp_dir) / "sub" / "scan.json"
        argv = ["scan-t", "--expr", SPHERE2, "--seed", "2", "--t-grid", "0,1", "--format", "json",
                "--out", str(out), "--no-cache", *SMALL]
        assert main(argv) == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["seed"] == 2
        assert [row["exact"] for row in payload["rows"]] == [0.5, 1.0]

    def test_kiselman(self, capsys):
        """测试方向 Lelong 数命令"""
        argv = ["kiselman", "--expr", "log(|z1|^1)", "--n", "2", "--dirs", "2,1", "--seed", "1",
                "--samples", "128", "--no-cache", "--format", "json"]
        assert main(argv) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary"]["nu"] == pytest.approx(2.0, abs=1e-9)

    def test_kiselman_needs_direction(self, capsys):
        """测试缺少方向"""
        assert main(["kiselman", "--expr", "log(|z1|^1)", "--seed", "1", "--no-cache"]) == 1

    def test_bergman(self, capsys):
        """测试 Bergman 命令在圆盘中心"""
        argv = ["bergman", "--expr", "0", "--n", "1", "--seed", "1", "--degree", "3", "--no-cache",
                "--format", "json"]
        assert main(argv) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rows"][0]["bergman"] == pytest.approx(1 / 3.141592653589793)

    def test_scan_t_csv_columns(self, capsys):
        """测试 scan-t 的 CSV 列顺序"""
        argv = ["scan-t", "--expr", SPHERE2, "--seed", "4", "--t-grid", "0,1", "--no-cache", *SMALL]
        assert main(argv) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "t,nu_hat,ci_lo,ci_hi,exact,flags"
        assert [line.split(",")[0] for line in lines[1:3]] == ["0.0", "1.0"]

    def test_restrict_csv_columns(self, capsys):
        """测试 restrict 的 CSV 列顺序"""
        argv = ["restrict", "--expr", SPHERE2, "--seed", "4", "--lines", "3", "--no-cache", *SMALL]
        assert main(argv) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "line_index,nu_hat,ci_lo,ci_hi"

    def test_verify_independent_of_workers(self, capsys):
        """测试 verify 的输出与工作线程数无关"""
        argv = ["verify", "--suite", "fast", "--seed", "7", "--no-cache"]
        assert main(argv + ["--workers", "1"]) in (0, 3)
        serial = capsys.readouterr().out
        assert main(argv + ["--workers", "4"]) in (0, 3)
        assert capsys.readouterr().out == serial
        assert serial.splitlines()[0] == "check,passed,violations,detail"
