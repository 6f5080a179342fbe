"""基础设施组件导出。"""

from apps.backend.infra.clock import FixedClock, UtcClock
from apps.backend.infra.persistence import ReportRecorder
from apps.backend.infra.tracing import TraceRecorder

__all__ = [
    "UtcClock",
    "FixedClock",
    "ReportRecorder",
    "TraceRecorder",
]
