"""sm 延拓 Agent：逐行几乎齐次延拓并直接延拓余项。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome, count_terms, input_digest
from apps.backend.extension.tables import EngineConfig, extend_sm_detailed
from apps.backend.smx.expansion import SmExpansion

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtendPayload:
    """sm.extend 阶段的输入。"""

    table: SmExpansion
    ambient: Optional[int] = None
    config: EngineConfig = field(default_factory=EngineConfig)


class SmExtensionAgent(Agent):
    """把未重整化表变为延拓后的表。"""

    name = "sm_extender"

    def run(self, context: AgentContext, payload: ExtendPayload) -> AgentOutcome:
        """执行 extend_sm，输出 SmExtension（含逐行结果与 Laurent 中间量）。"""

        span_id = context.trace_recorder.start_span(
            operation="sm.extend",
            agent_name=self.name,
            parent_span_id=context.parent_span_id,
            start_detail={"method": payload.config.method, "ambient": payload.ambient or payload.table.ambient},
        )
        context.trace_recorder.update_span(
            span_id=span_id,
            terms_in=count_terms(payload.table),
            input_digest=input_digest(payload.table.to_document()),
        )
        try:
            extension = extend_sm_detailed(payload.table, payload.ambient, payload.config)
        except Exception as error:  # noqa: BLE001 - 需要捕获以结束 Span
            context.trace_recorder.finish_span(
                span_id=span_id,
                status="failed",
                failure_category=error.__class__.__name__,
                status_detail={"message": str(error)},
            )
            raise
        context.trace_recorder.update_span(span_id=span_id, terms_out=count_terms(extension.table))
        trace_span = context.trace_recorder.finish_span(
            span_id=span_id,
            status="success",
            failure_category=None,
            status_detail={"threshold": extension.threshold, "methods": extension.methods()},
        )
        LOGGER.info(
            "Extension finished",
            extra={
                "task_id": context.task_id,
                "threshold": extension.threshold,
                "counterterms": len(extension.counterterm_basis()),
            },
        )
        return AgentOutcome(output=extension, span_id=span_id, trace_span=trace_span)


__all__ = ["ExtendPayload", "SmExtensionAgent"]
