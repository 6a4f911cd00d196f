"""
命令行入口

lelong <command> [options]

命令:
    exact      环面族的闭式值或区间界
    estimate   蒙特卡洛阈值估计
    scan-t     在 t 网格上估计
    restrict   沿一般直线估计
    bergman    截断 Bergman 模型
    kiselman   方向 Lelong 数
    verify     性质检查套件
    levelset   上水平集扫描

唯一有文件副作用的模块；结果按配置哈希缓存。
"""

import argparse
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from lelong import __version__
from lelong.bergman import bergman_value, build_model, eigen_oracle_value, psi_m
from lelong.config import config
from lelong.errors import InputError, LelongError, PropertyViolation, UnsupportedFormError
from lelong.expr import PshExpr, classify_toric, parse
from lelong.geometry import lelong_via_lines
from lelong.kiselman import DirectionSpec, directional_nu
from lelong.log import logger, setup_logging
from lelong.montecarlo import bracket_flags, estimate_threshold, levelset_scan, scan_t
from lelong.records import Command, OutputFormat, RunConfig
from lelong.storage import get_result_cache
from lelong.toric import as_fraction, exact_t_grid, interval_bounds, nu_exact
from lelong.verify import run_suite
from lelong.weights import WeightSpec, family_predictions, make_expr_weight, make_radial

Outputs = Dict[str, Any]


# ----------------------------------------------------------------------
# 参数解析
# ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """参数错误时打印用法并以退出码 1 结束"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: 错误: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    """构造参数解析器"""
    parser = _Parser(prog="lelong", description="广义 Lelong 数的计算与交叉验证")
    parser.add_argument("--version", action="version", version=f"lelong {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--expr", help="φ 的 DSL 表达式")
    common.add_argument("--n", type=int, help="变量个数，缺省取表达式中出现的最大下标")
    common.add_argument("--seed", type=int, help="随机种子（随机命令必需）")
    common.add_argument("--center", help="中心 a，如 0,0 或 0.1+0.2j,0")
    common.add_argument("--out", help="输出文件，缺省写到标准输出")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default="csv")
    common.add_argument("--cache-dir", help="缓存目录，缺省取 LELONG_CACHE_DIR")
    common.add_argument("--no-cache", action="store_true", help="不读写缓存")
    common.add_argument("--workers", type=int, help="并行线程数（不影响结果）")
    common.add_argument("--log-dir", help="日志目录")

    budget = _Parser(add_help=False)
    budget.add_argument("--k-range", help="环带下标范围 k_min:k_max")
    budget.add_argument("--annuli", type=int, help="环带个数，从 k_min 起")
    budget.add_argument("--samples", type=int, help="每个环带的样本数")
    budget.add_argument("--tol", type=float, help="二分容差")

    weight = _Parser(add_help=False)
    weight.add_argument("--weight-t", type=float, help="径向权 ψ = t·log|z − a| 的 t")
    weight.add_argument("--weight-expr", help="表达式权 ψ(z − a)")

    def add(name: str, help_text: str, parents: List[argparse.ArgumentParser]) -> argparse.ArgumentParser:
        return commands.add_parser(name, help=help_text, parents=parents)

    p = add("exact", "环面族的闭式值", [common])
    p.add_argument("--t", type=str, help="t（可写成分数，如 1/2）")
    p.add_argument("--t-grid", help="lo:hi:step")

    p = add("estimate", "蒙特卡洛阈值估计", [common, budget, weight])
    p.add_argument("--t", type=float, help="同 --weight-t")

    p = add("scan-t", "在 t 网格上估计", [common, budget])
    p.add_argument("--t-grid", required=True, help="lo:hi:step")

    p = add("restrict", "沿一般直线估计", [common, budget])
    p.add_argument("--lines", type=int, help="直线条数")

    p = add("bergman", "截断 Bergman 模型", [common, weight])
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--degree", type=int)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--grid", help="求值点，分号分隔，如 0.1,0;0,0.2")
    p.add_argument("--samples", type=int)

    p = add("kiselman", "方向 Lelong 数", [common])
    p.add_argument("--dirs", help="方向 a_1,...,a_n")
    p.add_argument("--p", help="有理方向的分子 p_1,...,p_n")
    p.add_argument("--q", type=int, help="有理方向的分母")
    p.add_argument("--point", help="点 w")
    p.add_argument("--samples", type=int, help="每个环面上的样本数")

    p = add("verify", "性质检查套件", [common])
    p.add_argument("--suite", choices=["fast", "full"], default="fast")

    p = add("levelset", "上水平集扫描", [common, budget, weight])
    p.add_argument("--grid", required=True, help="扫描点，分号分隔")
    p.add_argument("--level", type=float, required=True, help="水平 c")

    return parser


def parse_point(text: str) -> Tuple[complex, ...]:
    """逗号分隔的复数，如 "0.1+0.2j,0"；虚数单位也可写作 i"""
    try:
        return tuple(complex(s.strip().replace("i", "j")) for s in text.split(",") if s.strip())
    except ValueError as e:
        raise InputError(f"无法解析点: {text}") from e


def parse_grid(text: str) -> List[Tuple[complex, ...]]:
    """分号分隔的点列表"""
    points = [parse_point(s) for s in text.split(";") if s.strip()]
    if not points:
        raise InputError("网格不能为空")
    return points


def parse_t_grid(text: str) -> List[Fraction]:
    """lo:hi:step 或逗号分隔的 t 值"""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"t 网格格式应为 lo:hi:step: {text}")
        return exact_t_grid(*parts)
    try:
        return [as_fraction(s.strip()) for s in text.split(",") if s.strip()]
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"无法解析 t 网格: {text}") from e


def _format_point(point: Sequence[complex]) -> str:
    return ",".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in point)


def _format_number(value: Any) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


# ----------------------------------------------------------------------
# 配置
# ----------------------------------------------------------------------

RANDOMIZED = {Command.ESTIMATE, Command.SCAN_T, Command.RESTRICT, Command.BERGMAN,
              Command.KISELMAN, Command.VERIFY, Command.LEVELSET}

NEEDS_EXPR = {Command.EXACT, Command.ESTIMATE, Command.SCAN_T, Command.RESTRICT,
              Command.BERGMAN, Command.KISELMAN, Command.LEVELSET}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    由命令行参数构造 RunConfig

    Raises:
        InputError: 缺少必需参数
    """
    command = Command(args.command)
    if command in RANDOMIZED and args.seed is None:
        raise InputError(f"{command.value} 是随机命令，必须给出 --seed")
    if command in NEEDS_EXPR and not args.expr:
        raise InputError(f"{command.value} 需要 --expr")

    fields = {
        "command": command,
        "seed": 0 if args.seed is None else args.seed,
        "format": OutputFormat(args.format),
        "cache": not args.no_cache,
    }
    names = ["expr", "n", "center", "out", "cache_dir", "workers", "log_dir", "t", "t_grid", "k_range",
             "annuli", "samples", "tol", "weight_t", "weight_expr", "lines", "m", "degree", "radius",
             "grid", "dirs", "p", "q", "point", "suite", "level"]
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if command == Command.EXACT and "t" in fields:
        # 精确的 t 以文本形式走 t_grid
        fields["t_grid"] = fields.get("t_grid") or str(args.t)
        try:
            fields["t"] = float(as_fraction(args.t))
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"无法解析 t: {args.t}") from e
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        raise InputError(f"参数不合法: {e}") from e


def budget_of(run: RunConfig) -> Dict[str, Any]:
    """蒙特卡洛预算"""
    budget: Dict[str, Any] = {"workers": run.workers}
    if run.k_range:
        try:
            lo, hi = (int(s) for s in run.k_range.split(":"))
        except ValueError as e:
            raise InputError(f"环带范围格式应为 k_min:k_max: {run.k_range}") from e
        budget["k_min"], budget["k_max"] = lo, hi
    if run.annuli:
        k_min = budget.get("k_min", config.K_MIN)
        budget["k_min"], budget["k_max"] = k_min, k_min + run.annuli - 1
    if run.samples:
        budget["n_samples"] = run.samples
    if run.tol:
        budget["tol"] = run.tol
    return budget


def _expr(run: RunConfig) -> PshExpr:
    return parse(run.expr, run.n)


def _center(run: RunConfig, n: int) -> Tuple[complex, ...]:
    if not run.center:
        return (0j,) * n
    center = parse_point(run.center)
    if len(center) != n:
        raise InputError(f"中心的维数 {len(center)} 与 n={n} 不一致")
    return center


def _weight(run: RunConfig, n: int, center: Tuple[complex, ...], t: Optional[float]) -> WeightSpec:
    """--weight-expr 给出表达式权，否则为径向权"""
    if not run.weight_expr:
        return make_radial(t or 0.0, center)
    psi = parse(run.weight_expr, n)
    predicted = family_predictions(psi)
    if predicted is None or predicted[0] <= 0:
        raise InputError("--weight-expr 须为 c·log Σ|f_i|^β 形式且在中心有奇点")
    lelong, hoelder = predicted
    return make_expr_weight(psi, center, tau=1.0, l=lelong, M=lelong, alpha=hoelder)


# ----------------------------------------------------------------------
# 命令
# ----------------------------------------------------------------------

def _cmd_exact(run: RunConfig) -> Outputs:
    expr = _expr(run)
    grid = parse_t_grid(run.t_grid) if run.t_grid else [Fraction(0)]
    form = classify_toric(expr)
    rows = []
    for t in grid:
        value: Any = None
        if form is not None:
            try:
                value = nu_exact(form, t)
            except UnsupportedFormError:
                value = None
        bounds = interval_bounds(expr, t)
        rows.append({
            "t": str(t),
            "nu": _format_number(value) if value is not None else "",
            "lo": bounds.lo,
            "hi": bounds.hi,
            "exact": value is not None,
        })
    return {"form": form.describe() if form is not None else None, "rows": rows}


def _cmd_estimate(run: RunConfig) -> Outputs:
    expr = _expr(run)
    center = _center(run, expr.n)
    t = run.weight_t if run.weight_t is not None else run.t
    w = _weight(run, expr.n, center, t)
    est = estimate_threshold(expr, w, seed=run.seed, **budget_of(run))
    exact = None
    form = classify_toric(expr)
    if form is not None and not run.weight_expr and all(z == 0 for z in center):
        try:
            exact = float(nu_exact(form, t or 0.0))
        except UnsupportedFormError:
            exact = None
    row = {"t": None if run.weight_expr else float(t or 0.0), "nu_hat": est.nu_hat, "ci_lo": est.ci[0],
           "ci_hi": est.ci[1], "exact": exact, "flags": bracket_flags(est)}
    return {"weight": w.describe(), "rows": [row], "estimate": est.to_dict()}


def _cmd_scan_t(run: RunConfig) -> Outputs:
    expr = _expr(run)
    grid = [float(t) for t in parse_t_grid(run.t_grid)]
    rows = scan_t(expr, grid, a=_center(run, expr.n), seed=run.seed, **budget_of(run))
    return {"rows": [r.to_dict() for r in rows]}


def _cmd_restrict(run: RunConfig) -> Outputs:
    expr = _expr(run)
    lines = lelong_via_lines(expr, a=_center(run, expr.n), n_lines=run.lines or 11, seed=run.seed,
                             **budget_of(run))
    summary = lines.to_dict()
    rows = summary.pop("rows")
    return {"rows": rows, "summary": summary}


def _cmd_bergman(run: RunConfig) -> Outputs:
    expr = _expr(run)
    center = _center(run, expr.n)
    model = build_model(expr, _weight(run, expr.n, center, run.weight_t), m=run.m or 1, degree=run.degree,
                        r=run.radius or 1.0, seed=run.seed, samples=run.samples, workers=run.workers)
    points = parse_grid(run.grid) if run.grid else [center]
    rows = []
    for z in points:
        rows.append({
            "point": _format_point(z),
            "bergman": bergman_value(model, z),
            "eigen_oracle": eigen_oracle_value(model, z),
            "psi_m": psi_m(model, z),
        })
    return {"rows": rows, "model": model.to_dict()}


def _cmd_kiselman(run: RunConfig) -> Outputs:
    expr = _expr(run)
    if run.dirs:
        dirs = DirectionSpec.parse(run.dirs)
    elif run.p and run.q:
        dirs = DirectionSpec.from_rational([int(s) for s in run.p.split(",")], run.q)
    else:
        raise InputError("kiselman 需要 --dirs 或 --p 与 --q")
    point = parse_point(run.point) if run.point else None
    kwargs = {"samples_per_shell": run.samples} if run.samples else {}
    est = directional_nu(expr, dirs, point, seed=run.seed, workers=run.workers, **kwargs)
    summary = est.to_dict()
    rows = summary.pop("shells")
    return {"rows": rows, "summary": summary}


def _cmd_verify(run: RunConfig) -> Outputs:
    report = run_suite(run.suite or "fast", seed=run.seed, workers=run.workers or 1)
    return {"rows": report.rows(), "passed": report.passed, "failed": report.failed,
            "results": [r.to_dict() for r in report.results]}


def _cmd_levelset(run: RunConfig) -> Outputs:
    expr = _expr(run)
    center = _center(run, expr.n)
    w = _weight(run, expr.n, center, run.weight_t)
    points = levelset_scan(expr, w, parse_grid(run.grid), run.level, seed=run.seed, **budget_of(run))
    rows = [{"point": _format_point(p.point), "nu_hat": p.nu_hat, "ci_lo": p.ci[0], "ci_hi": p.ci[1],
             "above": p.above} for p in points]
    return {"rows": rows}


COMMANDS: Dict[Command, Callable[[RunConfig], Outputs]] = {
    Command.EXACT: _cmd_exact,
    Command.ESTIMATE: _cmd_estimate,
    Command.SCAN_T: _cmd_scan_t,
    Command.RESTRICT: _cmd_restrict,
    Command.BERGMAN: _cmd_bergman,
    Command.KISELMAN: _cmd_kiselman,
    Command.VERIFY: _cmd_verify,
    Command.LEVELSET: _cmd_levelset,
}

# CSV 列顺序
COLUMNS: Dict[Command, List[str]] = {
    Command.EXACT: ["t", "nu", "lo", "hi", "exact"],
    Command.ESTIMATE: ["t", "nu_hat", "ci_lo", "ci_hi", "exact", "flags"],
    Command.SCAN_T: ["t", "nu_hat", "ci_lo", "ci_hi", "exact", "flags"],
    Command.RESTRICT: ["line_index", "nu_hat", "ci_lo", "ci_hi"],
    Command.BERGMAN: ["point", "bergman", "eigen_oracle", "psi_m"],
    Command.KISELMAN: ["r", "shell_sup", "quotient"],
    Command.VERIFY: ["check", "passed", "violations", "detail"],
    Command.LEVELSET: ["point", "nu_hat", "ci_lo", "ci_hi", "above"],
}


# ----------------------------------------------------------------------
# 输出
# ----------------------------------------------------------------------

def _normalize(outputs: Outputs) -> Outputs:
    """经一次 JSON 往返，使新算结果与缓存命中完全一致"""
    return json.loads(json.dumps(outputs, sort_keys=True, default=_json_default))


def _json_default(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"无法序列化: {type(value)}")


def render(run: RunConfig, outputs: Outputs) -> str:
    """
    渲染输出文本

    CSV 末尾带 "# seed=... version=..." 注释行；JSON 包含 seed 与版本号。
    """
    if run.format == OutputFormat.JSON:
        payload = {"command": run.command.value, "seed": run.seed, "version": __version__, **outputs}
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    buffer = io.StringIO()
    frame = pd.DataFrame(outputs.get("rows", []), columns=COLUMNS[run.command])
    frame.to_csv(buffer, index=False, lineterminator="\n")
    buffer.write(f"# seed={run.seed} version={__version__}\n")
    return buffer.getvalue()


def _exact_value(outputs: Outputs) -> Optional[str]:
    """单个 t 的 exact 命令直接打印数值，没有闭式时打印区间"""
    rows = outputs.get("rows", [])
    if len(rows) != 1:
        return None
    row = rows[0]
    return row["nu"] if row["exact"] else f"[{row['lo']!r}, {row['hi']!r}]"


def write_output(run: RunConfig, text: str, outputs: Outputs):
    """写到 --out 或标准输出"""
    if run.out:
        path = Path(run.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"结果已写入: {path}")
        return
    value = _exact_value(outputs) if run.command == Command.EXACT and run.format == OutputFormat.CSV else None
    sys.stdout.write(text if value is None else value + "\n")


def run(run_config: RunConfig) -> int:
    """
    执行一次命令

    Args:
        run_config: 运行配置

    Returns:
        int: 退出码（0 成功，1 输入错误，2 数值失败，3 性质检查失败）
    """
    try:
        cache = None
        if run_config.cache and run_config.command != Command.EXACT:
            cache = get_result_cache(run_config.cache_dir)
        record = cache.lookup(run_config) if cache is not None else None
        if record is not None:
            outputs = record.outputs
        else:
            logger.info(f"运行命令: {run_config.command.value}, seed={run_config.seed}")
            outputs = _normalize(COMMANDS[run_config.command](run_config))
            if cache is not None:
                cache.store(run_config, outputs)
        write_output(run_config, render(run_config, outputs), outputs)
        if run_config.command == Command.VERIFY and not outputs.get("passed", False):
            raise PropertyViolation("性质检查失败", outputs.get("failed"))
        return 0
    except LelongError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行主函数"""
    args = build_parser().parse_args(argv)
    log_dir = args.log_dir or config.LOG_DIR or None
    if log_dir:
        setup_logging(log_dir=Path(log_dir), log_level=config.LOG_LEVEL)
    try:
        run_config = config_from_args(args)
    except LelongError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return run(run_config)


if __name__ == "__main__":
    sys.exit(main())
