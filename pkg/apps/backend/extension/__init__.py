"""延拓（重整化）算法：直接延拓、微分重整化、矩方法、Laurent/MS 与整表延拓。"""

from apps.backend.extension.diffren import box_preimage, diff_renorm_extend
from apps.backend.extension.direct import direct_extend, direct_extend_remainder, try_homogeneity
from apps.backend.extension.laurent import (
    ELL,
    LaurentSeries,
    coefficient_series,
    laurent_expand,
    minimal_subtract,
    ms_brackets,
    regularized_ms_extend,
)
from apps.backend.extension.moments import (
    ETA,
    ZETA,
    MomentSolution,
    moment_solver,
    regularize,
    regularized_extend,
    regulator_groups,
)
from apps.backend.extension.result import (
    METHODS,
    CountertermPattern,
    ExtensionResult,
    coordinate_operators,
    counterterm_basis,
    invariant_operators,
    row_counterterms,
)
from apps.backend.extension.tables import (
    EngineConfig,
    SmExtension,
    differs_by_local_terms,
    extend_row,
    extend_sm,
    extend_sm_detailed,
    extended_remainder,
    rescale_mass_scale,
    threshold,
)

__all__ = [
    "METHODS",
    "CountertermPattern",
    "ExtensionResult",
    "invariant_operators",
    "coordinate_operators",
    "row_counterterms",
    "counterterm_basis",
    "try_homogeneity",
    "direct_extend",
    "direct_extend_remainder",
    "box_preimage",
    "diff_renorm_extend",
    "ETA",
    "ZETA",
    "MomentSolution",
    "moment_solver",
    "regulator_groups",
    "regularize",
    "regularized_extend",
    "ELL",
    "LaurentSeries",
    "coefficient_series",
    "laurent_expand",
    "ms_brackets",
    "minimal_subtract",
    "regularized_ms_extend",
    "EngineConfig",
    "SmExtension",
    "threshold",
    "extend_row",
    "extend_sm_detailed",
    "extend_sm",
    "extended_remainder",
    "rescale_mass_scale",
    "differs_by_local_terms",
]
