"""FastAPI 依赖注入配置。"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from apps.backend.infra.clock import UtcClock
from apps.backend.infra.persistence import ReportRecorder


@lru_cache
def get_clock() -> UtcClock:
    """提供全局 UTC 时钟实例。"""

    return UtcClock()


@lru_cache
def get_report_recorder() -> ReportRecorder:
    """提供请求/响应与报告落盘器。"""

    base_path = Path("var/reports")
    return ReportRecorder(base_path=base_path, clock=get_clock())
