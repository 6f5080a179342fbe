"""命令行文本模式：把 sm 表与检查报告渲染为表格。"""

from __future__ import annotations

from typing import Any, Iterable, List, Optional

from apps.backend.algebra.serialize import render_text
from apps.backend.contracts.reports import PipelineReport, PropertyCheck
from apps.backend.smx.expansion import SmExpansion

_PD_MODULE: Optional[Any] = None


def _get_pandas() -> Any:
    """延迟加载 pandas，只有文本输出需要它。"""

    global _PD_MODULE
    if _PD_MODULE is None:
        import pandas as pd  # noqa: WPS433 - 延迟导入

        _PD_MODULE = pd
    return _PD_MODULE


def sm_frame(s: SmExpansion) -> Any:
    """列 l、p、u 的 DataFrame，按 (l, p) 排序。"""

    pd = _get_pandas()
    records = [{"l": row.l, "p": row.p, "u": render_text(row.expr)} for row in s.rows]
    return pd.DataFrame.from_records(records, columns=["l", "p", "u"])


def checks_frame(checks: Iterable[PropertyCheck]) -> Any:
    pd = _get_pandas()
    records = [{"check": item.name, "passed": item.passed, "detail": item.detail} for item in checks]
    return pd.DataFrame.from_records(records, columns=["check", "passed", "detail"])


def render_sm(s: SmExpansion) -> str:
    header = f"D = {s.degree}, L = {s.order}, k = {s.ambient}, groups = {', '.join(s.groups) or '-'}"
    frame = sm_frame(s)
    body = frame.to_string(index=False) if not frame.empty else "(空表)"
    return f"{header}\n{body}"


def render_checks(checks: Iterable[PropertyCheck]) -> str:
    frame = checks_frame(checks)
    return frame.to_string(index=False) if not frame.empty else "(无检查)"


def render_pipeline(report: PipelineReport) -> str:
    """阶段表、检查表与说明。"""

    pd = _get_pandas()
    stages = pd.DataFrame.from_records(
        [item.model_dump() for item in report.stages],
        columns=["name", "operation", "terms_in", "terms_out"],
    )
    lines: List[str] = [f"pipeline: {report.pipeline}  passed: {report.passed}", ""]
    lines.append(stages.to_string(index=False) if not stages.empty else "(无阶段)")
    lines.extend(["", render_checks(report.checks)])
    for note in report.notes:
        lines.append(f"注：{note}")
    return "\n".join(lines)


__all__ = ["sm_frame", "checks_frame", "render_sm", "render_checks", "render_pipeline"]
