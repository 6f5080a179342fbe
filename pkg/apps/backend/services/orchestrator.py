"""状态图编排器，按顺序串联流水线各阶段的 Agent。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome
from apps.backend.contracts.reports import StageRecord
from apps.backend.contracts.trace import TraceSpan

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateNode:
    """状态图中的节点定义。"""

    name: str
    agent: Agent
    payload_builder: Callable[[Dict[str, object]], object]


@dataclass
class OrchestratorResult:
    """编排执行结果，spans[0] 为 orchestrate.run 根节点。"""

    outputs: Dict[str, object] = field(default_factory=dict)
    spans: List[TraceSpan] = field(default_factory=list)
    node_spans: Dict[str, TraceSpan] = field(default_factory=dict)

    def stages(self) -> List[StageRecord]:
        """不含时间信息的阶段摘要，可写入确定性报告。"""

        records = []
        for name, span in self.node_spans.items():
            records.append(
                StageRecord(
                    name=name,
                    operation=span.operation,
                    terms_in=span.metrics.terms_in or 0,
                    terms_out=span.metrics.terms_out or 0,
                ),
            )
        return records


class StateMachineOrchestrator:
    """顺序执行节点，任一节点失败即终止，形成 Trace → Span 列表。"""

    def __init__(self, nodes: List[StateNode]) -> None:
        """初始化编排器。

        Parameters
        ----------
        nodes: List[StateNode]
            按顺序排列的状态图节点，名称不可重复。
        """

        names = [node.name for node in nodes]
        if len(set(names)) != len(names):
            message = f"节点名称重复：{names}。"
            raise ValueError(message)
        self._nodes = nodes

    def run(
        self,
        context: AgentContext,
        shared_inputs: Dict[str, object],
        progress_callback: Optional[Callable[[str, AgentOutcome], None]] = None,
    ) -> OrchestratorResult:
        """执行状态图。

        Parameters
        ----------
        context: AgentContext
            任务上下文。
        shared_inputs: Dict[str, object]
            运行时共享输入，供各节点构造参数。
        progress_callback: Optional[Callable[[str, AgentOutcome], None]]
            在每个节点完成时触发的回调。

        Returns
        -------
        OrchestratorResult
            各节点输出与 Trace Span 列表。
        """

        outputs: Dict[str, object] = {}
        spans: List[TraceSpan] = []
        node_spans: Dict[str, TraceSpan] = {}
        node_names = [node.name for node in self._nodes]
        combined_detail = {"nodes": node_names, "pipeline": context.pipeline, "policy": "fail_fast"}
        # 顶层 orchestrate.run Span 作为全链路父节点。
        orchestrate_span_id = context.trace_recorder.start_span(
            operation="orchestrate.run",
            agent_name="state_machine_orchestrator",
            parent_span_id=None,
            start_detail=combined_detail,
        )
        child_context = replace(context, parent_span_id=orchestrate_span_id)
        current_node: Optional[str] = None
        try:
            for node in self._nodes:
                current_node = node.name
                payload = node.payload_builder(shared_inputs | outputs)
                outcome = node.agent.run(context=child_context, payload=payload)
                outputs[node.name] = outcome.output
                spans.append(outcome.trace_span)
                node_spans[node.name] = outcome.trace_span
                if progress_callback is not None:
                    progress_callback(node.name, outcome)
        except Exception as error:
            context.trace_recorder.finish_span(
                span_id=orchestrate_span_id,
                status="failed",
                failure_category=error.__class__.__name__,
                status_detail={"failed_node": current_node, "nodes": node_names},
            )
            LOGGER.error(
                "Pipeline node failed",
                extra={"task_id": context.task_id, "pipeline": context.pipeline, "node": current_node},
            )
            raise
        root_span = context.trace_recorder.finish_span(
            span_id=orchestrate_span_id,
            status="success",
            failure_category=None,
            status_detail=combined_detail,
        )
        spans.insert(0, root_span)
        return OrchestratorResult(outputs=outputs, spans=spans, node_spans=node_spans)
