"""最小减除 Agent：汇总正则化行的 Laurent 数据、方括号多项式与极点阶。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict

import sympy as sp

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome, count_terms
from apps.backend.compat import model_dump
from apps.backend.extension.tables import SmExtension
from apps.backend.smx.expansion import RowKey

LOGGER = logging.getLogger(__name__)


def row_label(prefix: str, key: RowKey) -> str:
    """(0,0) → v0，(2,1) → v21。"""

    l, p = key
    return f"{prefix}0" if l == 0 and p == 0 else f"{prefix}{l}{p}"


@dataclass(frozen=True)
class SubtractPayload:
    """ms.subtract 阶段的输入。"""

    extension: SmExtension
    prefix: str = "v"


@dataclass(frozen=True)
class RowSubtraction:
    """单行的 MS 摘要。"""

    key: RowKey
    pole_order: int
    brackets: Dict[int, sp.Expr]
    moments: Dict[int, sp.Expr]
    document: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class MinimalSubtraction:
    """按行名索引的 MS 摘要。"""

    rows: Dict[str, RowSubtraction] = field(default_factory=dict)

    def pole_orders(self) -> Dict[str, int]:
        return {name: row.pole_order for name, row in sorted(self.rows.items())}

    def documents(self) -> Dict[str, Dict[str, Any]]:
        return {name: row.document for name, row in sorted(self.rows.items())}


def summarize_rows(extension: SmExtension, prefix: str = "v") -> MinimalSubtraction:
    """只收录经过正则化 + MS 的行。"""

    rows: Dict[str, RowSubtraction] = {}
    for key, series in extension.series.items():
        result = extension.results[key]
        moment = extension.moments[key]
        name = row_label(prefix, key)
        document = {
            "brackets": {str(order): sp.sstr(value) for order, value in sorted(result.brackets.items())},
            "moments": {str(order): sp.sstr(value) for order, value in sorted(moment.moment_coefficients.items())},
            "pole_order": series.pole_order,
            "counterterms": [item.constant for item in result.counterterm_basis],
            "laurent": model_dump(series.to_document()),
        }
        rows[name] = RowSubtraction(
            key=key,
            pole_order=series.pole_order,
            brackets=dict(result.brackets),
            moments=dict(moment.moment_coefficients),
            document=document,
        )
    return MinimalSubtraction(rows=rows)


class MinimalSubtractionAgent(Agent):
    """读取延拓中保留的级数，输出 MS 摘要。"""

    name = "minimal_subtractor"

    def run(self, context: AgentContext, payload: SubtractPayload) -> AgentOutcome:
        """汇总 MS 行，逐行记录极点阶事件。"""

        span_id = context.trace_recorder.start_span(
            operation="ms.subtract",
            agent_name=self.name,
            parent_span_id=context.parent_span_id,
            start_detail={"rows": len(payload.extension.series)},
        )
        context.trace_recorder.update_span(span_id=span_id, terms_in=count_terms(payload.extension.table))
        summary = summarize_rows(payload.extension, payload.prefix)
        for name, row in sorted(summary.rows.items()):
            context.trace_recorder.record_event(
                span_id=span_id,
                event_type="sample",
                detail={"row": name, "pole_order": row.pole_order},
            )
        finite = [payload.extension.results[row.key].extended for row in summary.rows.values()]
        context.trace_recorder.update_span(span_id=span_id, terms_out=count_terms(*finite))
        trace_span = context.trace_recorder.finish_span(
            span_id=span_id,
            status="success",
            failure_category=None,
            status_detail={"pole_orders": summary.pole_orders()},
        )
        LOGGER.info(
            "Minimal subtraction summarized",
            extra={"task_id": context.task_id, "pole_orders": summary.pole_orders()},
        )
        return AgentOutcome(output=summary, span_id=span_id, trace_span=trace_span)


__all__ = [
    "row_label",
    "SubtractPayload",
    "RowSubtraction",
    "MinimalSubtraction",
    "summarize_rows",
    "MinimalSubtractionAgent",
]
