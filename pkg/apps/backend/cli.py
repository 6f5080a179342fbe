"""sm 展开与重整化引擎的命令行入口。

子命令 expand / extend / example / verify / dimreg；--json 输出确定性 JSON，
否则以表格文本输出。任一检查失败时退出码为 1。
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from apps.backend.algebra.errors import SmxError
from apps.backend.algebra.serialize import render_text
from apps.backend.compat import canonical_json, model_dump
from apps.backend.contracts.metadata import SCHEMA_VERSION
from apps.backend.contracts.reports import PipelineReport
from apps.backend.dimreg import LineIndexing, RegFactor, bin_label, reg_check, reg_product_sm
from apps.backend.extension.tables import ROW_METHODS, EngineConfig
from apps.backend.models.propagators import PropagatorModel
from apps.backend.services.pipeline import PIPELINES, PipelineConfig, expand_pipeline, extend_pipeline, run_pipeline
from apps.backend.services.rendering import render_checks, render_pipeline, render_sm
from apps.backend.services.verification import SUITES, VerifyConfig, run_verification
from apps.backend.smx.expansion import SmExpansion

LOGGER = logging.getLogger(__name__)

KINDS = ("Wightman", "Feynman", "Hadamard", "HadamardDifference")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--json", action="store_true", help="输出确定性 JSON 报告。")
    parser.add_argument("--log-level", default="WARNING", help="日志级别，默认 WARNING。")


def _add_model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d", type=int, default=4, help="时空维数 d。")
    parser.add_argument("--L", type=int, default=None, help="截断阶 L，缺省取 --truncation。")
    parser.add_argument("--truncation", type=int, default=2, help="传播子模型已知的最高质量幂。")
    parser.add_argument("--metric", choices=("minkowski", "euclidean"), default="minkowski", help="度规约定。")
    parser.add_argument("--kind", choices=KINDS, default="Feynman", help="传播子类型。")
    parser.add_argument("--exponent", type=int, default=1, help="传播子幂次 n。")
    parser.add_argument("--group", default="x", help="变量组名称。")
    parser.add_argument("--no-prefactor", action="store_true", help="不乘 n!ħⁿ。")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smx", description="sm 展开、延拓与重整化。")
    subparsers = parser.add_subparsers(dest="command", required=True)

    expand = subparsers.add_parser("expand", help="传播子幂次的 sm 展开与 sm_check。")
    _add_model(expand)
    _add_common(expand)

    extend = subparsers.add_parser("extend", help="逐行延拓传播子幂次。")
    _add_model(extend)
    extend.add_argument("--method", choices=ROW_METHODS, default="auto", help="l ≤ L₀ 行的延拓方法。")
    extend.add_argument("--ambient", type=int, default=None, help="环境维数 k，缺省取 d。")
    extend.add_argument("--max-log-power", type=int, default=1, help="反项的最高 log(m/M) 幂。")
    _add_common(extend)

    example = subparsers.add_parser("example", help="内置示例流水线。")
    example.add_argument("name", choices=PIPELINES)
    example.add_argument("--L", type=int, default=2, help="传播子截断阶。")
    example.add_argument("--no-prefactor", action="store_true", help="去掉 6ħ³。")
    _add_common(example)

    verify = subparsers.add_parser("verify", help="欧氏约定下的数值验证套件。")
    verify.add_argument("suite", choices=SUITES + ("all",))
    verify.add_argument("--tolerance", type=float, default=1e-6, help="相对容差。")
    verify.add_argument("--seed", type=int, default=0, help="随机系数的种子。")
    verify.add_argument("--workers", type=int, default=1, help="ρ 网格并行线程数。")
    _add_common(verify)

    dimreg = subparsers.add_parser("dimreg", help="正则化传播子乘积的 (p, c, h) 分箱。")
    dimreg.add_argument("--d", type=int, default=4, help="时空维数 d（偶数）。")
    dimreg.add_argument("--vertices", type=int, default=2, help="顶点数 n。")
    dimreg.add_argument(
        "--factor",
        action="append",
        default=None,
        help="因子 i,j[:boxes]，可重复；缺省为一条 (1,2) 线。",
    )
    dimreg.add_argument("--L", type=int, default=2, help="截断的最高 p。")
    _add_common(dimreg)
    return parser


def _pipeline_config(args: argparse.Namespace, engine: Optional[EngineConfig] = None) -> PipelineConfig:
    model = PropagatorModel(
        kind=args.kind,
        dimension=args.d,
        truncation=args.truncation,
        sign=-1 if args.metric == "minkowski" else 1,
    )
    order = args.truncation if args.L is None else args.L
    settings = engine or EngineConfig(with_prefactor=not args.no_prefactor)
    return PipelineConfig(task_id="cli", model=model, order=order, engine=settings)


def _parse_factor(text: str) -> RegFactor:
    pair_text, _, boxes_text = text.partition(":")
    parts = [item.strip() for item in pair_text.split(",")]
    if len(parts) != 2:
        message = f"因子 {text!r} 需写成 i,j 或 i,j:boxes。"
        raise ValueError(message)
    return RegFactor(pair=(int(parts[0]), int(parts[1])), boxes=int(boxes_text or 0))


def _emit_pipeline(report: PipelineReport, as_json: bool, table: Optional[SmExpansion] = None) -> int:
    if as_json:
        print(canonical_json(report))
    else:
        if table is not None:
            print(render_sm(table))
            print()
        print(render_pipeline(report))
    return 0 if report.passed else 1


def _run_expand(args: argparse.Namespace) -> int:
    outcome = expand_pipeline(_pipeline_config(args), exponent=args.exponent, group=args.group)
    return _emit_pipeline(outcome.report, args.json, outcome.outputs.get("expand"))


def _run_extend(args: argparse.Namespace) -> int:
    engine = EngineConfig(
        with_prefactor=not args.no_prefactor,
        method=args.method,
        max_log_power=args.max_log_power,
    )
    outcome = extend_pipeline(
        _pipeline_config(args, engine),
        exponent=args.exponent,
        group=args.group,
        ambient=args.ambient,
    )
    extension = outcome.outputs.get("extend")
    return _emit_pipeline(outcome.report, args.json, getattr(extension, "table", None))


def _run_example(args: argparse.Namespace) -> int:
    config = PipelineConfig(task_id="cli", order=args.L, engine=EngineConfig(with_prefactor=not args.no_prefactor))
    outcome = run_pipeline(args.name, config)
    return _emit_pipeline(outcome.report, args.json)


def _run_verify(args: argparse.Namespace) -> int:
    config = VerifyConfig(tolerance=args.tolerance, seed=args.seed, workers=args.workers)
    return _emit_pipeline(run_verification(args.suite, config), args.json)


def _run_dimreg(args: argparse.Namespace) -> int:
    factors = [_parse_factor(text) for text in (args.factor or ["1,2"])]
    expansion = reg_product_sm(factors, LineIndexing(vertices=args.vertices), dimension=args.d, order=args.L)
    report = reg_check(expansion)
    if args.json:
        print(canonical_json({"expansion": model_dump(expansion.to_document()), "check": model_dump(report)}))
    else:
        print(f"D = {expansion.degree}, lines = {expansion.lines}, bins = {len(expansion.bins)}")
        for key, value in sorted(expansion.bins.items()):
            print(f"  [{bin_label(key)}] {render_text(value)}")
        print()
        print(render_checks(report.checks))
    return 0 if report.passed else 1


COMMANDS = {
    "expand": _run_expand,
    "extend": _run_extend,
    "example": _run_example,
    "verify": _run_verify,
    "dimreg": _run_dimreg,
}


def _error_document(error: Exception) -> str:
    payload = {"schema": SCHEMA_VERSION, "error": {"type": error.__class__.__name__, "message": str(error)}}
    return json.dumps(payload, ensure_ascii=False, sort_keys=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数并执行子命令，返回退出码。"""

    args = build_parser().parse_args(list(argv) if argv is not None else None)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (SmxError, ValueError, KeyError) as error:
        LOGGER.debug("Command failed", extra={"command": args.command, "error_type": error.__class__.__name__})
        print(_error_document(error), file=sys.stderr)
        return 1
    except Exception as error:  # noqa: BLE001 - 未预期的异常同样以 JSON 报告
        LOGGER.debug("Command crashed", extra={"command": args.command}, exc_info=True)
        print(_error_document(error), file=sys.stderr)
        return 1


def entrypoint(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))


if __name__ == "__main__":
    entrypoint()
