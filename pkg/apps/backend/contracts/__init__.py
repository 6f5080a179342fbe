"""数据契约模型包。

报告与文档模型均派生自 VersionedContractModel，序列化后带有
`"schema": "smx/1"` 字段，可落盘、回放并在版本变化时被拒绝。
"""

from apps.backend.contracts.documents import (
    CountertermDocument,
    ExprDocument,
    ExtensionDocument,
    LaurentDocument,
    RegSmDocument,
    RemainderDocument,
    SmExpansionDocument,
    SmRowDocument,
)
from apps.backend.contracts.metadata import SCHEMA_VERSION, ContractModel, VersionedContractModel
from apps.backend.contracts.reports import (
    CountertermItem,
    CountertermReport,
    ExtractionReport,
    HadamardReport,
    HomogeneityRecord,
    LimitReport,
    LimitSample,
    PairingReport,
    PipelineReport,
    PropertyCheck,
    RegCheckReport,
    ScalingFitReport,
    SmCheckReport,
    StageRecord,
)
from apps.backend.contracts.trace import SpanEvent, SpanMetrics, TraceRecord, TraceSpan

__all__ = [
    "SCHEMA_VERSION",
    "ContractModel",
    "VersionedContractModel",
    "ExprDocument",
    "SmRowDocument",
    "RemainderDocument",
    "SmExpansionDocument",
    "CountertermDocument",
    "ExtensionDocument",
    "LaurentDocument",
    "RegSmDocument",
    "PropertyCheck",
    "HomogeneityRecord",
    "SmCheckReport",
    "RegCheckReport",
    "PairingReport",
    "LimitSample",
    "LimitReport",
    "ScalingFitReport",
    "ExtractionReport",
    "CountertermItem",
    "CountertermReport",
    "HadamardReport",
    "StageRecord",
    "PipelineReport",
    "SpanEvent",
    "SpanMetrics",
    "TraceSpan",
    "TraceRecord",
]
