"""流水线执行记录契约。

每个阶段（sm.expand、sm.extend、ms.subtract 等）对应一个 Span，记录输入输出的
规范项个数与输入摘要；一次流水线运行的全部 Span 组成 TraceRecord。
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import List, Literal, Optional

from apps.backend.compat import ConfigDict, Field, model_validator

from apps.backend.contracts.metadata import VersionedContractModel

SpanStatus = Literal["success", "failed"]
EventType = Literal["start", "sample", "abort", "success"]


def _ensure_utc(dt: datetime, field_name: str) -> None:
    if dt.tzinfo is None:
        message = f"{field_name} 必须包含 UTC 时区。"
        raise ValueError(message)
    if dt.tzinfo.utcoffset(dt) != timezone.utc.utcoffset(dt):
        message = f"{field_name} 必须为 UTC 时间。"
        raise ValueError(message)


class SpanEvent(VersionedContractModel):
    """阶段内的离散事件；sample 用于逐行记录（如 MS 行的极点阶）。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "span_event"

    event_type: EventType = Field(description="事件类型。")
    timestamp: datetime = Field(description="事件发生时间（UTC）。")
    detail: Optional[str] = Field(
        default=None,
        description="事件附带的 JSON 文本。",
    )

    @model_validator(mode="after")
    def ensure_utc(self) -> "SpanEvent":
        _ensure_utc(dt=self.timestamp, field_name="timestamp")
        return self


class SpanMetrics(VersionedContractModel):
    """阶段规模：耗时与输入输出的规范项个数。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "span_metrics"

    duration_ms: int = Field(
        description="阶段执行耗时（毫秒）。",
        ge=0,
    )
    terms_in: Optional[int] = Field(
        default=None,
        description="输入的规范项个数，缺失表示未记录。",
        ge=0,
    )
    terms_out: Optional[int] = Field(
        default=None,
        description="输出的规范项个数，缺失表示未记录。",
        ge=0,
    )


class TraceSpan(VersionedContractModel):
    """单个流水线阶段的执行记录。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "trace_span"

    span_id: str = Field(description="Span 唯一标识。", min_length=1)
    parent_span_id: Optional[str] = Field(
        default=None,
        description="父 Span 标识；orchestrate.run 根节点为空。",
    )
    operation: str = Field(
        description="阶段名称，遵循 范畴.动作 格式，例如 sm.expand。",
        min_length=1,
    )
    agent_name: str = Field(description="执行该阶段的 Agent 名称。", min_length=1)
    status: SpanStatus = Field(description="阶段执行状态。")
    started_at: datetime = Field(description="Span 开始时间（UTC）。")
    metrics: SpanMetrics = Field(description="阶段规模指标。")
    input_digest: Optional[str] = Field(
        default=None,
        description="输入文档确定性 JSON 的 sha256 摘要。",
    )
    error_class: Optional[str] = Field(
        default=None,
        description="失败时的异常类名，例如 ResonantDegree。",
    )
    events: List[SpanEvent] = Field(
        description="按时间排列的事件。",
        default_factory=list,
    )

    @model_validator(mode="after")
    def ensure_temporal_order(self) -> "TraceSpan":
        """强制 UTC，operation 带语义分段，事件不早于 started_at。"""

        _ensure_utc(dt=self.started_at, field_name="started_at")
        if "." not in self.operation:
            raise ValueError("operation 需包含语义分段，例如 sm.expand。")
        if self.events:
            earliest = min(event.timestamp for event in self.events)
            if earliest < self.started_at:
                raise ValueError("事件时间不能早于 started_at。")
        return self


class TraceRecord(VersionedContractModel):
    """一次流水线运行的全部 Span，spans[0] 为 orchestrate.run。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "trace_record"

    trace_id: str = Field(description="Trace 唯一标识。", min_length=1)
    task_id: str = Field(description="任务标识。", min_length=1)
    pipeline: str = Field(description="流水线名称，例如 setting-sun。", min_length=1)
    created_at: datetime = Field(description="Trace 创建时间（UTC）。")
    spans: List[TraceSpan] = Field(
        description="按执行顺序排列的 Span 列表。",
        json_schema_extra={"minItems": 1},
    )

    @model_validator(mode="after")
    def ensure_created_at(self) -> "TraceRecord":
        _ensure_utc(dt=self.created_at, field_name="created_at")
        if not self.spans:
            raise ValueError("Trace 至少需要一个 Span。")
        return self
