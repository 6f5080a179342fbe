"""sm 展开：表结构、乘积与导数演算、性质检查和质量极限提取。"""

from apps.backend.smx.expansion import (
    SmExpansion,
    SmRow,
    odd_rows,
    sm_check,
    sm_derivative,
    sm_joint_scaling,
    sm_power,
    sm_product,
    sm_remainder_bound,
    sm_rows_text,
    sm_scale,
    sm_sum,
    sm_trivial,
)
from apps.backend.smx.extract import ExtractionConfig, sm_extract_from_samples

__all__ = [
    "SmExpansion",
    "SmRow",
    "sm_trivial",
    "sm_product",
    "sm_power",
    "sm_sum",
    "sm_scale",
    "sm_derivative",
    "sm_joint_scaling",
    "sm_check",
    "sm_remainder_bound",
    "sm_rows_text",
    "odd_rows",
    "ExtractionConfig",
    "sm_extract_from_samples",
]
