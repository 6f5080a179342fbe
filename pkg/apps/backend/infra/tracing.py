"""阶段执行记录器：为每个流水线阶段开启、更新并结束 Span。"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional
from uuid import uuid4

from apps.backend.contracts.trace import SpanEvent, SpanMetrics, TraceRecord, TraceSpan
from apps.backend.infra.clock import UtcClock

LOGGER = logging.getLogger(__name__)

STATUSES = ("success", "failed")


@dataclass
class _SpanRuntime:
    """Span 完成前累积的运行期数据。"""

    span_id: str
    parent_span_id: Optional[str]
    operation: str
    agent_name: str
    started_at: datetime
    input_digest: Optional[str] = None
    terms_in: Optional[int] = None
    terms_out: Optional[int] = None
    events: List[SpanEvent] = field(default_factory=list)


class TraceRecorder:
    """记录 orchestrate.run → 各阶段 Span 的树结构并输出契约对象。"""

    def __init__(self, clock: UtcClock) -> None:
        """初始化记录器。

        Parameters
        ----------
        clock: UtcClock
            提供时间戳的统一时钟；测试中使用 FixedClock 以获得确定耗时。
        """

        self._clock = clock
        self._span_index: Dict[str, _SpanRuntime] = {}
        self._root_span_id: Optional[str] = None

    @staticmethod
    def _serialize_detail(detail: Optional[Any]) -> Optional[str]:
        if detail is None:
            return None
        if isinstance(detail, str):
            return detail
        try:
            return json.dumps(detail, ensure_ascii=True, separators=(",", ":"), sort_keys=True)
        except TypeError:
            fallback = {"detail": str(detail)}
            return json.dumps(fallback, ensure_ascii=True, separators=(",", ":"), sort_keys=True)

    def _runtime(self, span_id: str, action: str) -> _SpanRuntime:
        if span_id not in self._span_index:
            message = f"span_id={span_id} 不存在，无法{action}。"
            raise KeyError(message)
        return self._span_index[span_id]

    def start_span(
        self,
        operation: str,
        agent_name: str,
        parent_span_id: Optional[str],
        start_detail: Optional[Any] = None,
    ) -> str:
        """创建新的 Span 并返回标识。

        Parameters
        ----------
        operation: str
            阶段名称，遵循 `范畴.动作` 的命名规范，例如 sm.extend。
        agent_name: str
            执行阶段的 Agent 名称。
        parent_span_id: Optional[str]
            父节点的 Span 标识。
        start_detail: Optional[Any]
            start 事件的补充信息，例如截断阶或行数。

        Returns
        -------
        str
            新 Span 的唯一标识。
        """

        span_id = str(uuid4())
        started_at = self._clock.now()
        runtime = _SpanRuntime(
            span_id=span_id,
            parent_span_id=parent_span_id,
            operation=operation,
            agent_name=agent_name,
            started_at=started_at,
        )
        runtime.events.append(
            SpanEvent(
                event_type="start",
                timestamp=started_at,
                detail=self._serialize_detail(detail=start_detail),
            ),
        )
        self._span_index[span_id] = runtime
        if parent_span_id is None and self._root_span_id is None:
            self._root_span_id = span_id
        LOGGER.debug("Span started", extra={"span_id": span_id, "operation": operation})
        return span_id

    def record_event(self, span_id: str, event_type: str, *, detail: Optional[Any] = None) -> None:
        """为已有 Span 追加事件。"""

        runtime = self._runtime(span_id, "记录事件")
        runtime.events.append(
            SpanEvent(event_type=event_type, timestamp=self._clock.now(), detail=self._serialize_detail(detail)),
        )
        LOGGER.debug("Span event recorded", extra={"span_id": span_id, "event_type": event_type})

    def update_span(
        self,
        span_id: str,
        *,
        terms_in: Optional[int] = None,
        terms_out: Optional[int] = None,
        input_digest: Optional[str] = None,
    ) -> None:
        """更新阶段规模与输入摘要，None 表示保持原值。"""

        runtime = self._runtime(span_id, "更新")
        if terms_in is not None:
            runtime.terms_in = terms_in
        if terms_out is not None:
            runtime.terms_out = terms_out
        if input_digest is not None:
            runtime.input_digest = input_digest

    def finish_span(
        self,
        span_id: str,
        status: str,
        failure_category: Optional[str],
        status_detail: Optional[Any] = None,
    ) -> TraceSpan:
        """结束 Span 并返回对应的契约对象。

        Parameters
        ----------
        span_id: str
            需要结束的 Span 标识。
        status: str
            success 或 failed。
        failure_category: Optional[str]
            失败时的异常类名，写入 error_class 与 abort 事件。
        status_detail: Optional[Any]
            结束事件的补充信息。

        Returns
        -------
        TraceSpan
            可用于序列化的 Span 契约对象。
        """

        if status not in STATUSES:
            message = f"status={status} 非法，仅支持 success/failed。"
            raise ValueError(message)
        runtime = self._runtime(span_id, "结束")
        completed_at = self._clock.now()
        duration_ms = max(0, int((completed_at - runtime.started_at).total_seconds() * 1000))
        error_class: Optional[str] = None
        if status == "failed":
            error_class = failure_category
            detail_payload: Dict[str, Any] = {"error_class": failure_category}
            if status_detail is not None:
                detail_payload["meta"] = status_detail
            event = SpanEvent(event_type="abort", timestamp=completed_at, detail=self._serialize_detail(detail_payload))
        else:
            event = SpanEvent(event_type="success", timestamp=completed_at, detail=self._serialize_detail(status_detail))
        runtime.events.append(event)
        trace_span = TraceSpan(
            span_id=runtime.span_id,
            parent_span_id=runtime.parent_span_id,
            operation=runtime.operation,
            agent_name=runtime.agent_name,
            status=status,
            started_at=runtime.started_at,
            metrics=SpanMetrics(duration_ms=duration_ms, terms_in=runtime.terms_in, terms_out=runtime.terms_out),
            input_digest=runtime.input_digest,
            error_class=error_class,
            events=runtime.events,
        )
        LOGGER.info(
            "Span finished",
            extra={
                "span_id": span_id,
                "operation": runtime.operation,
                "status": status,
                "duration_ms": duration_ms,
                "terms_out": runtime.terms_out,
            },
        )
        return trace_span

    def get_root_span_id(self) -> Optional[str]:
        """返回首个根 Span 的标识。"""

        return self._root_span_id

    def build_trace(self, task_id: str, pipeline: str, spans: List[TraceSpan]) -> TraceRecord:
        """根据已完成的 Span 构造 Trace 记录。

        Parameters
        ----------
        task_id: str
            任务标识。
        pipeline: str
            流水线名称。
        spans: List[TraceSpan]
            完成后的 Span 顺序列表。

        Returns
        -------
        TraceRecord
            随流水线报告一并返回的 Trace 契约。
        """

        trace = TraceRecord(
            trace_id=str(uuid4()),
            task_id=task_id,
            pipeline=pipeline,
            created_at=self._clock.now(),
            spans=spans,
        )
        LOGGER.debug("Trace assembled", extra={"task_id": task_id, "span_count": len(spans)})
        return trace
