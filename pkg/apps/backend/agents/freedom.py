"""重整化自由度扫描 Agent。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome
from apps.backend.contracts.reports import CountertermReport
from apps.backend.extension.tables import SmExtension
from apps.backend.models.freedom import basis_matches, extension_freedom, renorm_freedom_scan

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class FreedomPayload:
    """freedom.scan 阶段的输入。

    给出 extension 时 (D, k) 取自延拓后的表，并与逐行反项比对；
    否则使用显式的 degree 与 ambient。groups 为 δ 反项所在的变量组。
    """

    extension: Optional[SmExtension] = None
    degree: Optional[int] = None
    ambient: Optional[int] = None
    groups: Optional[Tuple[str, ...]] = None
    max_log_power: int = 1
    prefix: str = "C"


@dataclass(frozen=True)
class FreedomOutcome:
    """扫描报告以及它与逐行延拓反项的一致性。"""

    report: CountertermReport
    consistent: bool


class FreedomScanAgent(Agent):
    """对比 sd 公理与 sm 公理允许的反项。"""

    name = "freedom_scanner"

    def run(self, context: AgentContext, payload: FreedomPayload) -> AgentOutcome:
        """输出 FreedomOutcome；没有延拓结果时 consistent 恒为 True。"""

        extension = payload.extension
        if extension is None and (payload.degree is None or payload.ambient is None):
            raise ValueError("freedom.scan 需要 extension，或同时给出 degree 与 ambient。")
        groups = payload.groups
        if groups is None:
            groups = extension.table.groups if extension is not None else ("x",)
        span_id = context.trace_recorder.start_span(
            operation="freedom.scan",
            agent_name=self.name,
            parent_span_id=context.parent_span_id,
            start_detail={"groups": list(groups)},
        )
        produced = extension.counterterm_basis() if extension is not None else []
        context.trace_recorder.update_span(span_id=span_id, terms_in=len(produced))
        if extension is not None:
            report = extension_freedom(
                extension,
                groups=groups,
                max_log_power=payload.max_log_power,
                prefix=payload.prefix,
            )
            consistent = basis_matches(extension, report)
        else:
            report = renorm_freedom_scan(
                payload.degree,
                payload.ambient,
                groups=groups,
                max_log_power=payload.max_log_power,
                prefix=payload.prefix,
            )
            consistent = True
        context.trace_recorder.update_span(span_id=span_id, terms_out=len(report.basis))
        trace_span = context.trace_recorder.finish_span(
            span_id=span_id,
            status="success",
            failure_category=None,
            status_detail={"functions": len(report.sd_freedom), "consistent": consistent},
        )
        if not consistent:
            LOGGER.warning(
                "Counterterms differ from enumerated basis",
                extra={"task_id": context.task_id, "produced": [item.constant for item in produced]},
            )
        return AgentOutcome(
            output=FreedomOutcome(report=report, consistent=consistent),
            span_id=span_id,
            trace_span=trace_span,
        )


__all__ = ["FreedomPayload", "FreedomOutcome", "FreedomScanAgent"]
