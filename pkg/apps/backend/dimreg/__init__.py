"""正则化 sm 展开：逐线 ζ_ij 的传播子、(p, c, h) 分箱与投影。"""

from apps.backend.dimreg.expansion import (
    BinKey,
    RegFactor,
    RegSmExpansion,
    bin_label,
    reg_check,
    reg_derivative,
    reg_product_sm,
    reg_project_coeff,
    reg_remainder_bound,
)
from apps.backend.dimreg.lines import LineIndexing, coefficient_symbols, reg_propagator, reg_terms

__all__ = [
    "LineIndexing",
    "coefficient_symbols",
    "reg_terms",
    "reg_propagator",
    "BinKey",
    "RegFactor",
    "RegSmExpansion",
    "bin_label",
    "reg_product_sm",
    "reg_derivative",
    "reg_project_coeff",
    "reg_remainder_bound",
    "reg_check",
]
