"""检查类与数值类报告契约。

报告类操作（sm_check、reg_check、hadamard_split_check）不抛出性质失败，
而是在这些模型中逐条给出结论。
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from apps.backend.compat import ConfigDict, Field, model_validator

from apps.backend.contracts.metadata import ContractModel, VersionedContractModel


class PropertyCheck(ContractModel):
    """单条性质检查的结论。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "property_check"

    name: str = Field(description="性质名称，例如 A、C[2,0]、restriction。", min_length=1)
    passed: bool = Field(description="是否通过。")
    detail: str = Field(default="", description="失败原因或补充说明。")


class _CheckedReport(VersionedContractModel):
    """带有 passed 汇总字段的报告基类。"""

    passed: bool = Field(description="全部检查是否通过。")
    checks: List[PropertyCheck] = Field(default_factory=list, description="逐条检查结果。")

    @model_validator(mode="after")
    def ensure_consistent(self) -> "_CheckedReport":
        """passed 必须与逐条结论一致。"""

        expected = all(item.passed for item in self.checks)
        if self.passed != expected:
            message = f"passed={self.passed} 与逐条检查结论 {expected} 不一致。"
            raise ValueError(message)
        return self

    def failures(self) -> List[str]:
        """未通过的检查名称。"""

        return [item.name for item in self.checks if not item.passed]


class HomogeneityRecord(VersionedContractModel):
    """几乎齐次标度数据 {degree, power, with_mass}。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "homogeneity_record"

    degree: str = Field(description="齐次次数 D，可含正则参数。")
    power: int = Field(description="幂次 N-1。", ge=0)
    with_mass: bool = Field(description="是否同时缩放质量。")
    annihilator_order: int = Field(description="零化阶 N。", ge=1)

    @model_validator(mode="after")
    def ensure_power(self) -> "HomogeneityRecord":
        """power = annihilator_order - 1。"""

        if self.power != self.annihilator_order - 1:
            raise ValueError("power 必须等于 annihilator_order - 1。")
        return self


class SmCheckReport(_CheckedReport):
    """sm 展开性质 (A)-(E) 的检查报告。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "sm_check_report"

    degree: str = Field(description="展开次数 D。")
    order: int = Field(description="截断阶 L。", ge=0)
    ambient: int = Field(description="环境维数 k。", ge=1)


class RegCheckReport(_CheckedReport):
    """正则化 sm 展开性质的检查报告。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "reg_check_report"

    degree: str = Field(description="展开次数 D。")
    lines: int = Field(description="传播子因子个数 Q。", ge=0)
    numeric_limit_checked: bool = Field(default=False, description="是否执行了 m↓0 的数值极限检查。")


class PairingReport(VersionedContractModel):
    """⟨e, h⟩ 的数值结果。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "pairing_report"

    value: float = Field(description="配对数值。")
    error: float = Field(description="误差估计。", ge=0.0)
    nodes: int = Field(description="使用的求积节点数。", ge=0)
    converged: bool = Field(description="求积是否收敛。")


class LimitSample(ContractModel):
    """截断序列中的一个样本。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "limit_sample"

    rho: float = Field(description="截断参数 ρ。", gt=0.0)
    value: float = Field(description="⟨e, χ_ρ h⟩。")
    increment: Optional[float] = Field(default=None, description="与上一样本的相对增量。")


class LimitReport(VersionedContractModel):
    """直接延拓截断极限的检查报告。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "limit_report"

    limit: float = Field(description="最后一个样本的值，作为极限估计。")
    converged: bool = Field(description="增量是否收缩并低于容差。")
    tolerance: float = Field(description="相对增量容差。", gt=0.0)
    samples: List[LimitSample] = Field(default_factory=list, description="按 ρ 递增排列的样本。")


class ScalingFitReport(VersionedContractModel):
    """ρ^(D-k)⟨e, h(·/ρ)⟩ 对 log ρ 的多项式拟合结果。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "scaling_fit_report"

    expected_degree: str = Field(description="假设的齐次次数 D。")
    degree: int = Field(description="拟合得到的 log ρ 多项式次数。", ge=0)
    residual: float = Field(description="相对残差。", ge=0.0)
    coefficients: List[float] = Field(default_factory=list, description="从常数项开始的拟合系数。")


class ExtractionReport(VersionedContractModel):
    """由质量样本提取 u_{l,p} 配对值的结果。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "extraction_report"

    mass_power: int = Field(description="目标行 l。", ge=0)
    coefficients: Dict[str, float] = Field(description="p → u_{l,p} 的极限值。")
    errors: Dict[str, float] = Field(description="p → 相邻网格外推差。")
    log_power: int = Field(description="检测到的 P_l。", ge=0)
    smallest_mass: float = Field(description="网格中最小的 m。", gt=0.0)


class CountertermItem(ContractModel):
    """单个 δ 反项基元。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "counterterm_item"

    constant: str = Field(description="自由常数名称。")
    operator: str = Field(description="作用在 δ 上的微分算子。")
    mass_power: int = Field(description="m 的幂次。", ge=0)
    log_m_power: int = Field(description="log(m/M) 的幂次。", ge=0)
    order: int = Field(description="微分阶 |β|。", ge=0)


class CountertermReport(VersionedContractModel):
    """重整化自由度：sd 公理与 sm 公理下的对比。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "counterterm_report"

    degree: int = Field(description="展开次数 D。")
    ambient: int = Field(description="环境维数 k。", ge=1)
    sd_freedom: List[str] = Field(description="sd 公理允许的形式，系数为 m/M 的任意函数。")
    sm_restriction: Dict[str, str] = Field(description="sm 公理下各函数的允许形式。")
    basis: List[CountertermItem] = Field(default_factory=list, description="sm 公理下的反项基。")


class HadamardReport(_CheckedReport):
    """Hadamard 分解恒等式的检查报告。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "hadamard_report"

    truncation: int = Field(description="截断阶 L。", ge=0)
    terms: Dict[str, str] = Field(description="各分解项在截断下的文本形式。")
    residual: str = Field(description="两侧之差的规范形式，通过时为 0。")


class StageRecord(ContractModel):
    """流水线中的单个阶段摘要。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "stage_record"

    name: str = Field(description="阶段名称。", min_length=1)
    operation: str = Field(description="对应的 Span 操作名。", min_length=1)
    terms_in: int = Field(description="输入规范项个数。", ge=0)
    terms_out: int = Field(description="输出规范项个数。", ge=0)


class PipelineReport(_CheckedReport):
    """端到端流水线的汇总报告。"""

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def schema_name(cls) -> str:
        return "pipeline_report"

    pipeline: str = Field(description="流水线名称。", min_length=1)
    stages: List[StageRecord] = Field(default_factory=list, description="按执行顺序排列的阶段。")
    documents: Dict[str, Any] = Field(default_factory=dict, description="各阶段输出文档。")
    notes: List[str] = Field(default_factory=list, description="约定与已知差异说明。")


__all__ = [
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
]
