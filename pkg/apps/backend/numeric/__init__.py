"""欧氏约定下的数值验证：试验函数、径向配对、截断极限与标度拟合。"""

from apps.backend.numeric.evaluate import DEFAULT_MASSES, evaluate, massless_part, reg_massless_limit_check
from apps.backend.numeric.limits import (
    DEFAULT_FIT_GRID,
    DEFAULT_LIMIT_GRID,
    cutoff,
    direct_limit_check,
    restriction_oracle,
    scaling_fit,
)
from apps.backend.numeric.pairing import NumericConfig, pair_numeric, pair_terms
from apps.backend.numeric.testfunc import FAMILIES, TestFunction, finite_difference, radial_laplacian, sphere_area

__all__ = [
    "FAMILIES",
    "TestFunction",
    "sphere_area",
    "radial_laplacian",
    "finite_difference",
    "NumericConfig",
    "pair_numeric",
    "pair_terms",
    "DEFAULT_LIMIT_GRID",
    "DEFAULT_FIT_GRID",
    "cutoff",
    "direct_limit_check",
    "scaling_fit",
    "restriction_oracle",
    "DEFAULT_MASSES",
    "evaluate",
    "massless_part",
    "reg_massless_limit_check",
]
