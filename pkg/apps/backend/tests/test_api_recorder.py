"""针对 ReportRecorder 的脱敏、大小限制与确定性报告测试。"""

from __future__ import annotations

import json
from datetime import datetime, timezone

from apps.backend.infra import FixedClock
from apps.backend.infra.persistence import MASK_TOKEN, ReportRecorder


def test_report_recorder_masks_path_fields(tmp_path) -> None:
    """以 _path 结尾的字段应被掩码。"""

    recorder = ReportRecorder(base_path=tmp_path)
    recorder.record(endpoint="api_expand", direction="request", payload={"output_path": "/secret/out", "order": 2})
    files = list((tmp_path / "api_expand").glob("*_request.json"))
    assert files, "请求文件未落盘。"
    payload = json.loads(files[0].read_text(encoding="utf-8"))
    assert payload["output_path"] == MASK_TOKEN
    assert payload["order"] == 2


def test_report_recorder_truncates_large_payload(tmp_path) -> None:
    """超出大小限制的 payload 应返回截断提示。"""

    recorder = ReportRecorder(base_path=tmp_path, max_bytes=32)
    recorder.record(endpoint="endpoint", direction="response", payload={"huge": "x" * 100})
    files = list((tmp_path / "endpoint").glob("*_response.json"))
    assert files, "响应文件未落盘。"
    payload = json.loads(files[0].read_text(encoding="utf-8"))
    assert payload["truncated"] is True
    assert payload["original_size"] > payload["max_bytes"]


def test_report_recorder_writes_deterministic_reports(tmp_path) -> None:
    """同一报告两次写入应逐字节一致，浮点数保留 17 位有效数字。"""

    clock = FixedClock(start=datetime(2024, 1, 1, tzinfo=timezone.utc))
    recorder = ReportRecorder(base_path=tmp_path, clock=clock)
    payload = {"b": 0.1, "a": [1, 2]}
    first = recorder.write_report("examples/sun", payload).read_bytes()
    second = recorder.write_report("examples/sun", payload).read_bytes()
    assert first == second
    assert (tmp_path / "examples__sun.json").exists()
    text = first.decode("utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text


def test_report_recorder_rejects_unknown_direction(tmp_path) -> None:
    """direction 只接受 request 与 response。"""

    recorder = ReportRecorder(base_path=tmp_path)
    try:
        recorder.record(endpoint="x", direction="sideways", payload={})
    except ValueError as error:
        assert "direction" in str(error)
    else:
        raise AssertionError("未知 direction 应当报错。")
