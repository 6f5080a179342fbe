"""后端 API 请求与响应模型。"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Tuple

from apps.backend.compat import BaseModel, ConfigDict, Field, model_validator

from apps.backend.contracts.documents import RegSmDocument
from apps.backend.contracts.reports import PipelineReport, RegCheckReport
from apps.backend.contracts.trace import TraceRecord
from apps.backend.extension.tables import EngineConfig
from apps.backend.models.propagators import PropagatorModel
from apps.backend.services.pipeline import PipelineConfig


class ApiModel(BaseModel):
    """统一约束的 API 模型基类，强制禁止额外字段。"""

    model_config = ConfigDict(extra="forbid")


class ModelSpec(ApiModel):
    """传播子模型参数。"""

    kind: Literal["Wightman", "Feynman", "Hadamard", "HadamardDifference"] = Field(
        default="Feynman",
        description="传播子类型。",
    )
    dimension: int = Field(default=4, description="时空维数 d。", ge=3, le=12)
    truncation: int = Field(default=2, description="模型已知的最高质量幂。", ge=0, le=8)
    metric: Literal["minkowski", "euclidean"] = Field(default="minkowski", description="度规约定。")

    def to_model(self) -> PropagatorModel:
        return PropagatorModel(
            kind=self.kind,
            dimension=self.dimension,
            truncation=self.truncation,
            sign=-1 if self.metric == "minkowski" else 1,
        )


class ExpandRequest(ApiModel):
    """传播子幂次的 sm 展开请求。"""

    task_id: str = Field(default="api", description="任务标识。", min_length=1)
    model: ModelSpec = Field(default_factory=ModelSpec, description="传播子模型。")
    exponent: int = Field(default=1, description="传播子幂次 n。", ge=1, le=4)
    order: Optional[int] = Field(default=None, description="截断阶 L，缺省取模型截断阶。", ge=0)
    group: str = Field(default="x", description="变量组名称。", min_length=1)
    with_prefactor: bool = Field(default=True, description="是否乘上 n!ħⁿ。")

    @model_validator(mode="after")
    def ensure_order(self) -> "ExpandRequest":
        """截断阶不能超过模型截断阶。"""

        if self.order is not None and self.order > self.model.truncation:
            message = f"order={self.order} 超过模型截断阶 {self.model.truncation}。"
            raise ValueError(message)
        return self

    def to_config(self, engine: Optional[EngineConfig] = None) -> PipelineConfig:
        settings = engine or EngineConfig(with_prefactor=self.with_prefactor)
        order = self.model.truncation if self.order is None else self.order
        return PipelineConfig(task_id=self.task_id, model=self.model.to_model(), order=order, engine=settings)


class PipelineResponse(ApiModel):
    """流水线响应：确定性报告与独立的 Trace。"""

    report: PipelineReport = Field(description="检查、阶段与文档。")
    trace: TraceRecord = Field(description="对应的 Trace 记录。")


class ExtendRequest(ExpandRequest):
    """sm 延拓请求。"""

    method: Literal["auto", "diffren", "MS"] = Field(default="auto", description="l ≤ L₀ 行的延拓方法。")
    ambient: Optional[int] = Field(default=None, description="环境维数 k，缺省取 d。", ge=1)
    max_log_power: int = Field(default=1, description="m > 0 反项的最高 log(m/M) 幂。", ge=0, le=3)

    def engine(self) -> EngineConfig:
        return EngineConfig(
            with_prefactor=self.with_prefactor,
            method=self.method,
            max_log_power=self.max_log_power,
        )


class ExampleRequest(ApiModel):
    """内置示例的参数。"""

    task_id: str = Field(default="api", description="任务标识。", min_length=1)
    order: int = Field(default=2, description="传播子截断阶。", ge=0, le=4)
    with_prefactor: bool = Field(default=True, description="是否保留 6ħ³。")

    def to_config(self) -> PipelineConfig:
        return PipelineConfig(
            task_id=self.task_id,
            order=self.order,
            engine=EngineConfig(with_prefactor=self.with_prefactor),
        )


class RegFactorSpec(ApiModel):
    """正则化乘积的一个因子。"""

    pair: Tuple[int, int] = Field(description="连接的两个顶点 (i, j)。")
    boxes: int = Field(default=0, description="作用在该线上的 □ 次数。", ge=0, le=2)


class DimregRequest(ApiModel):
    """正则化传播子乘积请求。"""

    dimension: int = Field(default=4, description="时空维数 d。", ge=3, le=8)
    vertices: int = Field(default=2, description="顶点数 n。", ge=2, le=4)
    factors: List[RegFactorSpec] = Field(description="乘积中的因子。", min_length=1)
    order: int = Field(default=2, description="截断的最高 p。", ge=0, le=3)


class DimregResponse(ApiModel):
    """正则化 sm 展开响应。"""

    expansion: RegSmDocument = Field(description="(p, c, h) 分箱。")
    check: RegCheckReport = Field(description="逐条性质检查。")


class SchemaExportResponse(ApiModel):
    """契约 JSON Schema 导出。"""

    schemas: Dict[str, dict] = Field(description="Schema 名称 → JSON Schema。")


class ErrorPayload(ApiModel):
    """422 响应中的错误结构。"""

    type: str = Field(description="异常类名。")
    message: str = Field(description="错误信息。")


__all__ = [
    "ApiModel",
    "ModelSpec",
    "ExpandRequest",
    "PipelineResponse",
    "ExtendRequest",
    "ExampleRequest",
    "RegFactorSpec",
    "DimregRequest",
    "DimregResponse",
    "SchemaExportResponse",
    "ErrorPayload",
]
