"""sm 展开 Agent：把若干 sm 表相乘并乘上组合前因子。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import sympy as sp

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome, count_terms, input_digest
from apps.backend.smx.expansion import SmExpansion, sm_product, sm_scale

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExpandPayload:
    """sm.expand 阶段的输入。

    Attributes
    ----------
    name: str
        阶段产物名称，例如 setting_sun。
    factors: Tuple[SmExpansion, ...]
        按顺序相乘的因子表。
    ambient: Optional[int]
        最终乘积的环境维数；变量组相关时必须给出。
    prefactor: sp.Expr
        组合前因子，例如 6ħ³。
    order: Optional[int]
        截断阶，缺省取因子截断阶的最小值。
    tag: Optional[str]
        余项标签。
    """

    name: str
    factors: Tuple[SmExpansion, ...]
    ambient: Optional[int] = None
    prefactor: sp.Expr = sp.Integer(1)
    order: Optional[int] = None
    tag: Optional[str] = None


def expand_product(payload: ExpandPayload) -> SmExpansion:
    """按左结合逐次相乘，最后一步使用 payload.ambient。"""

    if not payload.factors:
        raise ValueError("sm.expand 至少需要一个因子。")
    result = payload.factors[0] if payload.order is None else payload.factors[0].truncate(payload.order)
    last = len(payload.factors) - 1
    for index, factor in enumerate(payload.factors[1:], start=1):
        result = sm_product(
            result,
            factor,
            ambient=payload.ambient if index == last else None,
            order=payload.order,
            tag=payload.tag if index == last else None,
        )
    if sp.sympify(payload.prefactor) != 1:
        result = sm_scale(result, payload.prefactor)
    return result


class SmExpansionAgent(Agent):
    """构造未重整化 sm 表的 Agent。"""

    name = "sm_expander"

    def run(self, context: AgentContext, payload: ExpandPayload) -> AgentOutcome:
        """执行乘积展开，返回 SmExpansion。

        Parameters
        ----------
        context: AgentContext
            任务上下文，包含 Trace 记录器。
        payload: ExpandPayload
            因子表与前因子。

        Returns
        -------
        AgentOutcome
            输出乘积 sm 表并携带 Trace Span。
        """

        LOGGER.info(
            "Expansion started",
            extra={"task_id": context.task_id, "pipeline": context.pipeline, "factors": len(payload.factors)},
        )
        span_id = context.trace_recorder.start_span(
            operation="sm.expand",
            agent_name=self.name,
            parent_span_id=context.parent_span_id,
            start_detail={"name": payload.name, "factors": [factor.tag for factor in payload.factors]},
        )
        context.trace_recorder.update_span(
            span_id=span_id,
            terms_in=count_terms(*payload.factors),
            input_digest=input_digest([factor.to_document() for factor in payload.factors]),
        )
        try:
            table = expand_product(payload)
        except Exception as error:  # noqa: BLE001 - 需要捕获以结束 Span
            context.trace_recorder.finish_span(
                span_id=span_id,
                status="failed",
                failure_category=error.__class__.__name__,
                status_detail={"message": str(error)},
            )
            raise
        context.trace_recorder.update_span(span_id=span_id, terms_out=count_terms(table))
        trace_span = context.trace_recorder.finish_span(
            span_id=span_id,
            status="success",
            failure_category=None,
            status_detail={"degree": sp.sstr(table.degree), "order": table.order, "rows": len(table.rows)},
        )
        LOGGER.info(
            "Expansion finished",
            extra={"task_id": context.task_id, "name": payload.name, "rows": len(table.rows)},
        )
        return AgentOutcome(output=table, span_id=span_id, trace_span=trace_span)
