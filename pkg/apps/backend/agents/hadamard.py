"""Hadamard 分解检查 Agent。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome
from apps.backend.models.propagators import PropagatorModel
from apps.backend.models.vev import hadamard_split_check

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class HadamardPayload:
    """hadamard.split 阶段的输入。"""

    model: PropagatorModel = field(default_factory=PropagatorModel)
    exponent: int = 3
    order: Optional[int] = None
    with_prefactor: bool = True


class HadamardSplitAgent(Agent):
    """验证 n!ħⁿ(Δ^F)ⁿ 的 Hadamard 分解恒等式。"""

    name = "hadamard_splitter"

    def run(self, context: AgentContext, payload: HadamardPayload) -> AgentOutcome:
        span_id = context.trace_recorder.start_span(
            operation="hadamard.split",
            agent_name=self.name,
            parent_span_id=context.parent_span_id,
            start_detail={"exponent": payload.exponent, "dimension": payload.model.dimension},
        )
        try:
            report = hadamard_split_check(
                payload.model,
                exponent=payload.exponent,
                order=payload.order,
                with_prefactor=payload.with_prefactor,
            )
        except Exception as error:  # noqa: BLE001 - 需要捕获以结束 Span
            context.trace_recorder.finish_span(
                span_id=span_id,
                status="failed",
                failure_category=error.__class__.__name__,
                status_detail={"message": str(error)},
            )
            raise
        context.trace_recorder.update_span(span_id=span_id, terms_in=payload.exponent + 1, terms_out=len(report.terms))
        trace_span = context.trace_recorder.finish_span(
            span_id=span_id,
            status="success",
            failure_category=None,
            status_detail={"passed": report.passed, "failures": report.failures()},
        )
        LOGGER.info("Hadamard split finished", extra={"task_id": context.task_id, "passed": report.passed})
        return AgentOutcome(output=report, span_id=span_id, trace_span=trace_span)


__all__ = ["HadamardPayload", "HadamardSplitAgent"]
