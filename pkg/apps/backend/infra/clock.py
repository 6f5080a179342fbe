"""提供统一的 UTC 时钟接口，避免直接调用 datetime.now。"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone


class UtcClock:
    """UTC 时钟，用于统一时间获取方式。"""

    def now(self) -> datetime:
        """返回当前 UTC 时间。

        Returns
        -------
        datetime
            带有 UTC 时区信息的当前时间。
        """

        current = datetime.now(timezone.utc)
        return current


class FixedClock(UtcClock):
    """每次调用前进固定步长的时钟，用于可复现的 Trace。"""

    def __init__(self, start: datetime, step_ms: int = 1) -> None:
        if start.tzinfo is None:
            raise ValueError("start 必须包含 UTC 时区。")
        self._current = start
        self._step = timedelta(milliseconds=step_ms)

    def now(self) -> datetime:
        """返回当前时间后前进一步。"""

        current = self._current
        self._current = current + self._step
        return current
