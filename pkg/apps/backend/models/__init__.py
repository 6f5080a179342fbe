"""传播子模型与两顶点真空期望值。"""

from apps.backend.models.propagators import KINDS, LOG_MU, PropagatorModel, model_pair, propagator_sm
from apps.backend.models.vev import (
    HBAR,
    binomial_weights,
    constant_symbols,
    hadamard_split_check,
    rename_constants,
    rename_table,
    two_vertex_vev,
    two_vertex_vev_sm,
    vev_prefactor,
)

__all__ = [
    "KINDS",
    "LOG_MU",
    "PropagatorModel",
    "propagator_sm",
    "model_pair",
    "HBAR",
    "vev_prefactor",
    "two_vertex_vev_sm",
    "two_vertex_vev",
    "hadamard_split_check",
    "constant_symbols",
    "rename_constants",
    "rename_table",
    "binomial_weights",
]
