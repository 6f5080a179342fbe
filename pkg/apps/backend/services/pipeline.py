"""端到端流水线：setting sun、带帽的 setting sun、Hadamard 分解与自由度扫描。

每条流水线是 StateMachineOrchestrator 上的一串 Agent 节点；输出
PipelineReport（确定性 JSON，无时间戳）与单独的 TraceRecord。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import sympy as sp

from apps.backend.agents import (
    AgentContext,
    ExpandPayload,
    ExtendPayload,
    FreedomOutcome,
    FreedomPayload,
    FreedomScanAgent,
    HadamardPayload,
    HadamardSplitAgent,
    MinimalSubtraction,
    MinimalSubtractionAgent,
    SmExpansionAgent,
    SmExtensionAgent,
    SubtractPayload,
    row_label,
)
from apps.backend.agents.base import AgentOutcome
from apps.backend.compat import model_dump
from apps.backend.contracts.reports import HadamardReport, PipelineReport, PropertyCheck
from apps.backend.contracts.trace import TraceRecord
from apps.backend.extension.tables import EngineConfig, SmExtension
from apps.backend.infra.clock import UtcClock
from apps.backend.infra.tracing import TraceRecorder
from apps.backend.models.propagators import PropagatorModel, propagator_sm
from apps.backend.models.vev import rename_table, vev_prefactor
from apps.backend.services.orchestrator import OrchestratorResult, StateMachineOrchestrator, StateNode
from apps.backend.smx.expansion import SmExpansion, odd_rows, sm_check

LOGGER = logging.getLogger(__name__)

PIPELINES = ("setting-sun", "setting-sun-hat", "hadamard-split", "freedom")

SUN_GROUP = "w"
"""带帽图里子图的变量组 w = x - y。"""

HAT_GROUPS = ("x", "y")

DIFFREN_SIGN_NOTE = (
    "u0 行在 s=-1 下离开原点给出 □□(log(M²X)/(32X)) = -X^(-3)，"
    "符号按计算结果保留。"
)


@dataclass(frozen=True)
class PipelineConfig:
    """流水线参数。

    Attributes
    ----------
    task_id: str
        任务标识，只进入 Trace。
    model: PropagatorModel
        传播子模型，setting sun 使用其 Feynman 表。
    order: int
        传播子表的截断阶 L。
    engine: EngineConfig
        延拓引擎配置；with_prefactor 控制 6ħ³ 是否保留。
    """

    task_id: str = "local"
    model: PropagatorModel = field(default_factory=PropagatorModel)
    order: int = 2
    engine: EngineConfig = field(default_factory=EngineConfig)


@dataclass(frozen=True)
class PipelineOutcome:
    """流水线报告、Trace 与各节点原始输出。"""

    report: PipelineReport
    trace: TraceRecord
    outputs: Dict[str, object]


def _check(name: str, passed: bool, detail: str = "") -> PropertyCheck:
    return PropertyCheck(name=name, passed=bool(passed), detail="" if passed else detail)


def _run_nodes(
    pipeline: str,
    nodes: List[StateNode],
    config: PipelineConfig,
    clock: Optional[UtcClock],
    progress_callback: Optional[Callable[[str, AgentOutcome], None]],
) -> Tuple[OrchestratorResult, TraceRecord]:
    timer = clock or UtcClock()
    recorder = TraceRecorder(clock=timer)
    context = AgentContext(task_id=config.task_id, pipeline=pipeline, trace_recorder=recorder, clock=timer)
    result = StateMachineOrchestrator(nodes=nodes).run(
        context=context,
        shared_inputs={},
        progress_callback=progress_callback,
    )
    trace = recorder.build_trace(task_id=config.task_id, pipeline=pipeline, spans=result.spans)
    return result, trace


def _sun_payload(config: PipelineConfig, group: str) -> ExpandPayload:
    """6ħ³(Δ^F)³ 或（不带前因子时）(Δ^F)³。"""

    feynman = propagator_sm(config.model.with_kind("Feynman"), config.order, group)
    prefactor = vev_prefactor(3, 3, with_prefactor=config.engine.with_prefactor)
    return ExpandPayload(
        name="setting_sun",
        factors=(feynman, feynman, feynman),
        prefactor=prefactor,
        order=config.order,
    )


def _table_checks(prefix: str, table: SmExpansion) -> List[PropertyCheck]:
    report = sm_check(table, n_max=8)
    checks = [_check(f"{prefix}.sm", report.passed, f"未通过：{report.failures()}")]
    odd = [f"{row.l},{row.p}" for row in odd_rows(table)]
    checks.append(_check(f"{prefix}.parity", not odd, f"奇数质量幂行非零：{odd}"))
    return checks


def _extension_checks(prefix: str, extension: SmExtension) -> List[PropertyCheck]:
    failed = [
        f"{l},{p}"
        for (l, p), result in extension.results.items()
        if not result.restricts_to(extension.source.row(l, p))
    ]
    checks = [_check(f"{prefix}.restriction", not failed, f"行 {failed} 离开原点后不重现输入。")]
    checks.extend(_table_checks(f"{prefix}.extended", extension.table))
    return checks


def _extension_documents(prefix: str, extension: SmExtension) -> Dict[str, object]:
    return {row_label(prefix, key): model_dump(result.to_document()) for key, result in extension.results.items()}


def _freedom_document(outcome: FreedomOutcome) -> Dict[str, object]:
    return model_dump(outcome.report)


def _report(
    pipeline: str,
    result: OrchestratorResult,
    documents: Dict[str, object],
    checks: List[PropertyCheck],
    notes: List[str],
) -> PipelineReport:
    report = PipelineReport(
        pipeline=pipeline,
        stages=result.stages(),
        documents=documents,
        notes=notes,
        passed=all(item.passed for item in checks),
        checks=checks,
    )
    LOGGER.info(
        "Pipeline finished",
        extra={"pipeline": pipeline, "passed": report.passed, "failures": report.failures()},
    )
    return report


def _notes(config: PipelineConfig) -> List[str]:
    notes = [DIFFREN_SIGN_NOTE]
    if config.engine.with_prefactor:
        notes.append("组合归一化为 6ħ³(Δ^F)³；关闭 with_prefactor 可与不带前因子的表比较。")
    else:
        notes.append("已去掉组合前因子，行与 (Δ^F)³ 逐项对应。")
    return notes


def setting_sun_pipeline(
    config: Optional[PipelineConfig] = None,
    *,
    clock: Optional[UtcClock] = None,
    progress_callback: Optional[Callable[[str, AgentOutcome], None]] = None,
) -> PipelineOutcome:
    """(Δ^F)³ 的 sm 表（D = 6, k = 4, L₀ = 2）→ 逐行延拓 → 自由度扫描。"""

    settings = config or PipelineConfig()
    nodes = [
        StateNode(name="expand", agent=SmExpansionAgent(), payload_builder=lambda _: _sun_payload(settings, "x")),
        StateNode(
            name="extend",
            agent=SmExtensionAgent(),
            payload_builder=lambda shared: ExtendPayload(table=shared["expand"], config=settings.engine),
        ),
        StateNode(
            name="freedom",
            agent=FreedomScanAgent(),
            payload_builder=lambda shared: FreedomPayload(
                extension=shared["extend"],
                max_log_power=settings.engine.max_log_power,
                prefix=settings.engine.counterterm_prefix,
            ),
        ),
    ]
    result, trace = _run_nodes("setting-sun", nodes, settings, clock, progress_callback)
    source: SmExpansion = result.outputs["expand"]
    extension: SmExtension = result.outputs["extend"]
    freedom: FreedomOutcome = result.outputs["freedom"]
    checks = _table_checks("source", source) + _extension_checks("ext", extension)
    checks.append(_check("freedom.basis", freedom.consistent, "逐行反项与枚举的反项基不一致。"))
    documents = {
        "sm": {"source": model_dump(source.to_document()), "extended": model_dump(extension.table.to_document())},
        "ext": _extension_documents("u", extension),
        "freedom": _freedom_document(freedom),
    }
    report = _report("setting-sun", result, documents, checks, _notes(settings))
    return PipelineOutcome(report=report, trace=trace, outputs=result.outputs)


def hat_engine(engine: EngineConfig) -> EngineConfig:
    """带帽图的行用 (M²X)^ζ(M²Y)^ζ 正则化后做 MS。"""

    return replace(engine, method="MS", regulator_groups=HAT_GROUPS)


def _hat_payload(settings: PipelineConfig, renormalized_sun: SmExpansion) -> ExpandPayload:
    """t(φ³,φ³)(x−y)·Δ^F(x)·Δ^F(y)，子图常数改名为 Cs*，k = 8，D = 10。"""

    feynman = settings.model.with_kind("Feynman")
    subdiagram = rename_table(
        renormalized_sun,
        settings.engine.subdiagram_prefix,
        source_prefix=settings.engine.counterterm_prefix,
    )
    return ExpandPayload(
        name="setting_sun_hat",
        factors=(
            subdiagram,
            propagator_sm(feynman, settings.order, HAT_GROUPS[0]),
            propagator_sm(feynman, settings.order, HAT_GROUPS[1]),
        ),
        ambient=2 * settings.model.dimension,
        order=settings.order,
        tag="hat",
    )


def setting_sun_hat_pipeline(
    config: Optional[PipelineConfig] = None,
    *,
    clock: Optional[UtcClock] = None,
    progress_callback: Optional[Callable[[str, AgentOutcome], None]] = None,
) -> PipelineOutcome:
    """重整化子图 → t⁰(x,y) 的 sm 表 → 正则化矩延拓 + MS → 自由度扫描。

    文档 "ms" 下按 v0、v20、v21 给出方括号多项式（ℓ = L_x + L_y）与极点阶。
    """

    settings = config or PipelineConfig()
    nodes = [
        StateNode(
            name="expand.sun",
            agent=SmExpansionAgent(),
            payload_builder=lambda _: _sun_payload(settings, SUN_GROUP),
        ),
        StateNode(
            name="extend.sun",
            agent=SmExtensionAgent(),
            payload_builder=lambda shared: ExtendPayload(table=shared["expand.sun"], config=settings.engine),
        ),
        StateNode(
            name="expand.hat",
            agent=SmExpansionAgent(),
            payload_builder=lambda shared: _hat_payload(settings, shared["extend.sun"].table),
        ),
        StateNode(
            name="extend.hat",
            agent=SmExtensionAgent(),
            payload_builder=lambda shared: ExtendPayload(
                table=shared["expand.hat"],
                config=hat_engine(settings.engine),
            ),
        ),
        StateNode(
            name="ms",
            agent=MinimalSubtractionAgent(),
            payload_builder=lambda shared: SubtractPayload(extension=shared["extend.hat"], prefix="v"),
        ),
        StateNode(
            name="freedom",
            agent=FreedomScanAgent(),
            payload_builder=lambda shared: FreedomPayload(
                extension=shared["extend.hat"],
                groups=HAT_GROUPS,
                max_log_power=settings.engine.max_log_power,
                prefix=settings.engine.counterterm_prefix,
            ),
        ),
    ]
    result, trace = _run_nodes("setting-sun-hat", nodes, settings, clock, progress_callback)
    sun: SmExtension = result.outputs["extend.sun"]
    hat_source: SmExpansion = result.outputs["expand.hat"]
    hat: SmExtension = result.outputs["extend.hat"]
    subtraction: MinimalSubtraction = result.outputs["ms"]
    freedom: FreedomOutcome = result.outputs["freedom"]
    checks = _extension_checks("sun", sun)
    checks.extend(_table_checks("hat.source", hat_source))
    checks.extend(_extension_checks("hat", hat))
    checks.append(_check("freedom.basis", freedom.consistent, "逐行反项与枚举的反项基不一致。"))
    documents = {
        "sm": {
            "sun": model_dump(sun.table.to_document()),
            "source": model_dump(hat_source.to_document()),
            "extended": model_dump(hat.table.to_document()),
        },
        "ext": _extension_documents("v", hat),
        "ms": subtraction.documents(),
        "freedom": _freedom_document(freedom),
    }
    notes = _notes(settings) + [
        f"子图常数以 {settings.engine.subdiagram_prefix} 为前缀保持符号形式。",
        "方括号多项式中 ell = log(M²X) + log(M²Y)。",
    ]
    report = _report("setting-sun-hat", result, documents, checks, notes)
    return PipelineOutcome(report=report, trace=trace, outputs=result.outputs)


def hadamard_split_pipeline(
    config: Optional[PipelineConfig] = None,
    *,
    clock: Optional[UtcClock] = None,
    progress_callback: Optional[Callable[[str, AgentOutcome], None]] = None,
) -> PipelineOutcome:
    """6ħ³(Δ^F)³ 的 Hadamard 分解恒等式。"""

    settings = config or PipelineConfig()
    payload = HadamardPayload(
        model=settings.model,
        order=settings.order,
        with_prefactor=settings.engine.with_prefactor,
    )
    nodes = [StateNode(name="hadamard", agent=HadamardSplitAgent(), payload_builder=lambda _: payload)]
    result, trace = _run_nodes("hadamard-split", nodes, settings, clock, progress_callback)
    hadamard: HadamardReport = result.outputs["hadamard"]
    checks = [item.model_copy(update={"name": f"hadamard.{item.name}"}) for item in hadamard.checks]
    documents = {"hadamard": model_dump(hadamard)}
    report = _report("hadamard-split", result, documents, checks, [])
    return PipelineOutcome(report=report, trace=trace, outputs=result.outputs)


def freedom_pipeline(
    config: Optional[PipelineConfig] = None,
    *,
    clock: Optional[UtcClock] = None,
    progress_callback: Optional[Callable[[str, AgentOutcome], None]] = None,
) -> PipelineOutcome:
    """不做延拓，直接比较两种图的 sd 自由度与 sm 限制。

    setting sun：D = 6、k = d；带帽图：D = 10、k = 2d，δ 支撑在 (x, y)。
    """

    settings = config or PipelineConfig()
    d = settings.model.dimension
    sun_degree = 3 * settings.model.degree
    engine = settings.engine
    nodes = [
        StateNode(
            name="freedom.sun",
            agent=FreedomScanAgent(),
            payload_builder=lambda _: FreedomPayload(
                degree=sun_degree,
                ambient=d,
                groups=("x",),
                max_log_power=engine.max_log_power,
                prefix=engine.counterterm_prefix,
            ),
        ),
        StateNode(
            name="freedom.hat",
            agent=FreedomScanAgent(),
            payload_builder=lambda _: FreedomPayload(
                degree=sun_degree + 2 * settings.model.degree,
                ambient=2 * d,
                groups=HAT_GROUPS,
                max_log_power=engine.max_log_power,
                prefix=engine.counterterm_prefix,
            ),
        ),
    ]
    result, trace = _run_nodes("freedom", nodes, settings, clock, progress_callback)
    documents = {
        "sun": _freedom_document(result.outputs["freedom.sun"]),
        "hat": _freedom_document(result.outputs["freedom.hat"]),
    }
    report = _report("freedom", result, documents, [], [])
    return PipelineOutcome(report=report, trace=trace, outputs=result.outputs)


def _power_payload(settings: PipelineConfig, exponent: int, group: str) -> ExpandPayload:
    feynman = propagator_sm(settings.model, settings.order, group)
    prefactor = vev_prefactor(exponent, exponent, with_prefactor=settings.engine.with_prefactor)
    factors = (feynman,) * exponent
    return ExpandPayload(name=f"power{exponent}", factors=factors, prefactor=prefactor, order=settings.order)


def expand_pipeline(
    config: Optional[PipelineConfig] = None,
    *,
    exponent: int = 1,
    group: str = "x",
    clock: Optional[UtcClock] = None,
) -> PipelineOutcome:
    """模型传播子 n 次幂（带 n!ħⁿ 前因子时即 t(φⁿ, φⁿ)）的 sm 表与 sm_check。"""

    settings = config or PipelineConfig()
    if exponent < 1:
        message = f"幂次 {exponent} 至少为 1。"
        raise ValueError(message)
    nodes = [
        StateNode(
            name="expand",
            agent=SmExpansionAgent(),
            payload_builder=lambda _: _power_payload(settings, exponent, group),
        ),
    ]
    result, trace = _run_nodes("expand", nodes, settings, clock, None)
    table: SmExpansion = result.outputs["expand"]
    documents = {"sm": {"source": model_dump(table.to_document())}}
    report = _report("expand", result, documents, _table_checks("source", table), [])
    return PipelineOutcome(report=report, trace=trace, outputs=result.outputs)


def extend_pipeline(
    config: Optional[PipelineConfig] = None,
    *,
    exponent: int = 1,
    group: str = "x",
    ambient: Optional[int] = None,
    clock: Optional[UtcClock] = None,
) -> PipelineOutcome:
    """在 expand_pipeline 的表上按 config.engine 逐行延拓。"""

    settings = config or PipelineConfig()
    nodes = [
        StateNode(
            name="expand",
            agent=SmExpansionAgent(),
            payload_builder=lambda _: _power_payload(settings, exponent, group),
        ),
        StateNode(
            name="extend",
            agent=SmExtensionAgent(),
            payload_builder=lambda shared: ExtendPayload(
                table=shared["expand"],
                ambient=ambient,
                config=settings.engine,
            ),
        ),
        StateNode(
            name="ms",
            agent=MinimalSubtractionAgent(),
            payload_builder=lambda shared: SubtractPayload(extension=shared["extend"], prefix="u"),
        ),
    ]
    result, trace = _run_nodes("extend", nodes, settings, clock, None)
    source: SmExpansion = result.outputs["expand"]
    extension: SmExtension = result.outputs["extend"]
    subtraction: MinimalSubtraction = result.outputs["ms"]
    documents = {
        "sm": {"source": model_dump(source.to_document()), "extended": model_dump(extension.table.to_document())},
        "ext": _extension_documents("u", extension),
        "ms": subtraction.documents(),
    }
    report = _report("extend", result, documents, _extension_checks("ext", extension), [])
    return PipelineOutcome(report=report, trace=trace, outputs=result.outputs)


RUNNERS: Dict[str, Callable[..., PipelineOutcome]] = {
    "setting-sun": setting_sun_pipeline,
    "setting-sun-hat": setting_sun_hat_pipeline,
    "hadamard-split": hadamard_split_pipeline,
    "freedom": freedom_pipeline,
}


def run_pipeline(
    name: str,
    config: Optional[PipelineConfig] = None,
    *,
    clock: Optional[UtcClock] = None,
) -> PipelineOutcome:
    """按名称运行流水线。"""

    if name not in RUNNERS:
        message = f"未知的流水线 {name!r}，可选 {PIPELINES}。"
        raise KeyError(message)
    return RUNNERS[name](config, clock=clock)


def pole_orders(outcome: PipelineOutcome) -> Dict[str, int]:
    """带帽图各 MS 行的极点阶。"""

    subtraction = outcome.outputs.get("ms")
    if not isinstance(subtraction, MinimalSubtraction):
        return {}
    return subtraction.pole_orders()


def brackets(outcome: PipelineOutcome, row: str) -> Dict[int, sp.Expr]:
    """带帽图某一行的方括号多项式 {矩阶: 多项式}。"""

    subtraction = outcome.outputs.get("ms")
    if not isinstance(subtraction, MinimalSubtraction) or row not in subtraction.rows:
        message = f"没有名为 {row} 的 MS 行。"
        raise KeyError(message)
    return subtraction.rows[row].brackets


__all__ = [
    "PIPELINES",
    "PipelineConfig",
    "PipelineOutcome",
    "hat_engine",
    "setting_sun_pipeline",
    "setting_sun_hat_pipeline",
    "hadamard_split_pipeline",
    "freedom_pipeline",
    "expand_pipeline",
    "extend_pipeline",
    "run_pipeline",
    "pole_orders",
    "brackets",
]
