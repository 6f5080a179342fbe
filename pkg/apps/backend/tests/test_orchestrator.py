"""状态图编排器单元测试。"""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from apps.backend.agents import AgentContext, AgentOutcome
from apps.backend.infra import FixedClock, TraceRecorder, UtcClock
from apps.backend.services import StateMachineOrchestrator, StateNode


class DoublingAgent:
    """简单的倍增 Agent，用于验证 orchestrator 行为。"""

    name = "doubling"

    def run(self, context: AgentContext, payload: int) -> AgentOutcome:
        """将输入整数乘以 2，负数视为非法输入。"""

        span_id = context.trace_recorder.start_span(
            operation=f"{self.name}.execute",
            agent_name=self.name,
            parent_span_id=context.parent_span_id,
        )
        if payload < 0:
            context.trace_recorder.finish_span(span_id=span_id, status="failed", failure_category="ValueError")
            raise ValueError("payload 不能为负。")
        context.trace_recorder.update_span(span_id, terms_in=1, terms_out=1)
        trace_span = context.trace_recorder.finish_span(
            span_id=span_id,
            status="success",
            failure_category=None,
        )
        return AgentOutcome(output=payload * 2, span_id=span_id, trace_span=trace_span)


def _context(clock: UtcClock) -> AgentContext:
    return AgentContext(
        task_id="task_orchestrator",
        pipeline="doubling",
        trace_recorder=TraceRecorder(clock=clock),
        clock=clock,
    )


def _nodes(start: int) -> list[StateNode]:
    agent = DoublingAgent()

    def second_payload(shared: dict[str, object]) -> int:
        """使用上一节点输出。"""

        if "first" not in shared:
            raise AssertionError("缺少 first 节点输出。")
        return shared["first"]

    return [
        StateNode(name="first", agent=agent, payload_builder=lambda shared: shared.get("start", start)),
        StateNode(name="second", agent=agent, payload_builder=second_payload),
    ]


def test_orchestrator_executes_nodes_in_order() -> None:
    """编排器应当顺序执行节点并汇总输出。"""

    seen: list[str] = []
    orchestrator = StateMachineOrchestrator(nodes=_nodes(2))
    result = orchestrator.run(
        context=_context(UtcClock()),
        shared_inputs={},
        progress_callback=lambda name, outcome: seen.append(name),
    )
    assert result.outputs == {"first": 4, "second": 8}
    assert seen == ["first", "second"]
    assert len(result.spans) == 3
    root_span = result.spans[0]
    assert root_span.operation == "orchestrate.run"
    assert {span.parent_span_id for span in result.spans[1:]} == {root_span.span_id}
    assert [(stage.name, stage.terms_in, stage.terms_out) for stage in result.stages()] == [
        ("first", 1, 1),
        ("second", 1, 1),
    ]


def test_orchestrator_rejects_duplicate_node_names() -> None:
    agent = DoublingAgent()
    with pytest.raises(ValueError):
        StateMachineOrchestrator(
            nodes=[
                StateNode(name="same", agent=agent, payload_builder=lambda shared: 1),
                StateNode(name="same", agent=agent, payload_builder=lambda shared: 1),
            ],
        )


def test_orchestrator_fails_fast() -> None:
    """首个节点失败时异常向上抛出，后续节点不执行。"""

    seen: list[str] = []
    orchestrator = StateMachineOrchestrator(nodes=_nodes(-1))
    with pytest.raises(ValueError):
        orchestrator.run(
            context=_context(UtcClock()),
            shared_inputs={},
            progress_callback=lambda name, outcome: seen.append(name),
        )
    assert seen == []


def test_fixed_clock_gives_reproducible_timings() -> None:
    """FixedClock 下两次执行的 Span 时间与耗时一致。"""

    start = datetime(2024, 1, 1, tzinfo=timezone.utc)
    first = StateMachineOrchestrator(nodes=_nodes(3)).run(context=_context(FixedClock(start)), shared_inputs={})
    second = StateMachineOrchestrator(nodes=_nodes(3)).run(context=_context(FixedClock(start)), shared_inputs={})
    assert [span.started_at for span in first.spans] == [span.started_at for span in second.spans]
    assert [span.metrics.duration_ms for span in first.spans] == [span.metrics.duration_ms for span in second.spans]
    assert first.spans[0].started_at == start
