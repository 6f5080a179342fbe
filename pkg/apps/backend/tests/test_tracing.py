"""TraceRecorder 与 Trace 契约测试。"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest

from apps.backend.compat import model_dump
from apps.backend.contracts.trace import SpanEvent, SpanMetrics, TraceRecord, TraceSpan
from apps.backend.infra import FixedClock, TraceRecorder

START = datetime(2024, 1, 1, tzinfo=timezone.utc)


def _recorder() -> TraceRecorder:
    return TraceRecorder(clock=FixedClock(start=START, step_ms=5))


def test_span_tree_and_trace_record() -> None:
    """根 Span 与子 Span 组装成 TraceRecord，事件按时间排列。"""

    recorder = _recorder()
    root_id = recorder.start_span("orchestrate.run", "orchestrator", parent_span_id=None)
    child_id = recorder.start_span("sm.expand", "sm_expansion", parent_span_id=root_id, start_detail={"order": 2})
    recorder.update_span(child_id, terms_in=3, terms_out=9, input_digest="abc")
    recorder.record_event(child_id, "sample", detail="rows=3")
    child = recorder.finish_span(child_id, status="success", failure_category=None)
    root = recorder.finish_span(root_id, status="success", failure_category=None)
    assert recorder.get_root_span_id() == root_id
    assert child.parent_span_id == root_id
    assert (child.metrics.terms_in, child.metrics.terms_out) == (3, 9)
    assert child.input_digest == "abc"
    assert [event.event_type for event in child.events] == ["start", "sample", "success"]
    assert json.loads(child.events[0].detail) == {"order": 2}
    assert child.metrics.duration_ms == 10
    trace = recorder.build_trace(task_id="task-1", pipeline="setting-sun", spans=[root, child])
    assert trace.pipeline == "setting-sun"
    assert [span.operation for span in trace.spans] == ["orchestrate.run", "sm.expand"]


def test_failed_span_records_abort_event() -> None:
    recorder = _recorder()
    span_id = recorder.start_span("sm.extend", "sm_extension", parent_span_id=None)
    span = recorder.finish_span(
        span_id,
        status="failed",
        failure_category="ResonantDegree",
        status_detail={"row": "2,1"},
    )
    assert span.status == "failed"
    assert span.error_class == "ResonantDegree"
    detail = json.loads(span.events[-1].detail)
    assert span.events[-1].event_type == "abort"
    assert detail == {"error_class": "ResonantDegree", "meta": {"row": "2,1"}}


def test_recorder_rejects_unknown_span_and_status() -> None:
    recorder = _recorder()
    with pytest.raises(KeyError):
        recorder.update_span("missing", terms_in=1)
    with pytest.raises(KeyError):
        recorder.record_event("missing", "sample")
    span_id = recorder.start_span("sm.expand", "sm_expansion", parent_span_id=None)
    with pytest.raises(ValueError):
        recorder.finish_span(span_id, status="skipped", failure_category=None)
    with pytest.raises(ValueError):
        recorder.finish_span(span_id, status="aborted", failure_category=None)


def _span(operation: str = "sm.expand", started_at: datetime = START) -> TraceSpan:
    return TraceSpan(
        span_id="span-1",
        operation=operation,
        agent_name="sm_expansion",
        status="success",
        started_at=started_at,
        metrics=SpanMetrics(duration_ms=1),
        events=[SpanEvent(event_type="start", timestamp=started_at)],
    )


def test_trace_contracts_validate_timestamps_and_operation() -> None:
    assert _span().operation == "sm.expand"
    with pytest.raises(ValueError):
        _span(operation="expand")
    with pytest.raises(ValueError):
        _span(started_at=datetime(2024, 1, 1))
    with pytest.raises(ValueError):
        TraceSpan(
            span_id="span-2",
            operation="sm.expand",
            agent_name="sm_expansion",
            status="success",
            started_at=START,
            metrics=SpanMetrics(duration_ms=1),
            events=[SpanEvent(event_type="start", timestamp=START - timedelta(seconds=1))],
        )
    with pytest.raises(ValueError):
        TraceRecord(trace_id="t", task_id="task", pipeline="p", created_at=START, spans=[])


def test_span_document_carries_stage_size_only() -> None:
    """Span 文档只记录阶段规模与输入摘要。"""

    recorder = _recorder()
    span_id = recorder.start_span("ms.subtract", "minimal_subtractor", parent_span_id=None)
    recorder.update_span(span_id, terms_in=4, terms_out=2, input_digest="d1")
    document = model_dump(recorder.finish_span(span_id, status="success", failure_category=None), by_alias=True)
    assert set(document["metrics"]) == {"schema", "duration_ms", "terms_in", "terms_out"}
    assert set(document) == {
        "schema",
        "span_id",
        "parent_span_id",
        "operation",
        "agent_name",
        "status",
        "started_at",
        "metrics",
        "input_digest",
        "error_class",
        "events",
    }
    assert document["error_class"] is None
