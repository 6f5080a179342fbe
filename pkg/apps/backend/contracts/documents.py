"""符号对象的 JSON 文档契约：sm 表、延拓结果、Laurent 级数与正则化展开。"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from apps.backend.compat import ConfigDict, Field, model_validator

from apps.backend.contracts.metadata import ContractModel, VersionedContractModel
from apps.backend.contracts.reports import HomogeneityRecord


class ExprDocument(ContractModel):
    """表达式树及其可读文本。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "expr_document"

    tree: Dict[str, Any] = Field(description="带 kind 标签的表达式树。")
    text: str = Field(description="规范化后的单行文本。")


class SmRowDocument(ContractModel):
    """sm 表中的一行 u_{l,p}。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "sm_row"

    l: int = Field(description="质量幂 l。")
    p: int = Field(description="log(m/M) 幂 p。", ge=0)
    expr: ExprDocument = Field(description="行表达式。")


class RemainderDocument(ContractModel):
    """余项元数据。"""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @classmethod
    def schema_name(cls) -> str:
        return "remainder"

    degree: str = Field(alias="D", description="联合标度次数。")
    order: int = Field(description="m↓0 时的消失阶 L+1。", ge=1)
    extended: bool = Field(default=False, description="是否已做直接延拓。")


class SmExpansionDocument(VersionedContractModel):
    """SmExpansion 的 JSON 形式 {D, L, rows, remainder}。"""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @classmethod
    def schema_name(cls) -> str:
        return "sm_expansion"

    degree: str = Field(alias="D", description="展开次数 D。")
    order: int = Field(alias="L", description="截断阶 L。", ge=0)
    ambient: int = Field(description="环境维数 k。", ge=1)
    groups: List[str] = Field(description="变量组名称。")
    rows: List[SmRowDocument] = Field(description="按 (l, p) 排序的非零行。")
    remainder: RemainderDocument = Field(description="余项元数据。")

    @model_validator(mode="after")
    def ensure_remainder(self) -> "SmExpansionDocument":
        """余项阶为 L+1 且行按 (l, p) 有序。"""

        if self.remainder.order != self.order + 1:
            raise ValueError("remainder.order 必须等于 L+1。")
        keys = [(row.l, row.p) for row in self.rows]
        if keys != sorted(keys):
            raise ValueError("rows 需按 (l, p) 排序。")
        return self


class CountertermDocument(ContractModel):
    """带自由常数的反项。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "counterterm"

    constant: str = Field(description="自由常数名称。")
    expr: ExprDocument = Field(description="反项（常数系数置 1）。")


class ExtensionDocument(VersionedContractModel):
    """ExtensionResult 的 JSON 形式。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "extension"

    method: str = Field(description="延拓方法 direct/diffren/moment/MS。")
    extended: ExprDocument = Field(description="延拓后的表达式（不含反项）。")
    counterterm_basis: List[CountertermDocument] = Field(default_factory=list, description="反项基。")
    homogeneity: Optional[HomogeneityRecord] = Field(default=None, description="延拓后的齐次数据。")
    brackets: Dict[str, str] = Field(default_factory=dict, description="MS 方括号多项式，键为矩阶。")
    pole_order: Optional[int] = Field(default=None, description="正则化延拓的极点阶。")


class LaurentDocument(VersionedContractModel):
    """LaurentSeries 的 JSON 形式。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "laurent_series"

    regulator: str = Field(description="正则参数符号名。")
    min_exponent: int = Field(description="最低幂次。")
    order: int = Field(description="截断阶（含）。")
    pole_order: int = Field(description="极点阶，无极点时为 0。", ge=0)
    coefficients: Dict[str, ExprDocument] = Field(description="幂次 → 系数。")


class RegSmDocument(VersionedContractModel):
    """RegSmExpansion 的 JSON 形式，bins 键为 "p:c-vector:h-vector"。"""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @classmethod
    def schema_name(cls) -> str:
        return "reg_sm_expansion"

    degree: str = Field(alias="D", description="展开次数 D。")
    lines: int = Field(description="传播子因子个数 Q。", ge=0)
    line_names: List[str] = Field(description="线的变量组名称。")
    bins: Dict[str, ExprDocument] = Field(description="(p, c, h) 分箱。")


__all__ = [
    "ExprDocument",
    "SmRowDocument",
    "RemainderDocument",
    "SmExpansionDocument",
    "CountertermDocument",
    "ExtensionDocument",
    "LaurentDocument",
    "RegSmDocument",
]
