"""分级项代数子包：表达式树、规范化、微积分与标度分析。"""

from apps.backend.algebra.calculus import (
    apply_box,
    apply_euler,
    mass_dimension,
    moment_div_reduce,
    multiply,
    reduce_away_from_origin,
    shifted_euler,
)
from apps.backend.algebra.errors import SmxError
from apps.backend.algebra.expr import (
    BoxOp,
    DeltaCT,
    DeltaOperator,
    Expr,
    MetricConvention,
    Mono,
    Monomial,
    MomentDiv,
    Overline,
    Product,
    Remainder,
    Sum,
    const,
    delta,
    inv,
    mono,
    zero,
)
from apps.backend.algebra.fields import FieldFactor, FieldMonomial, count_pairings, submonomials
from apps.backend.algebra.normal import equivalent, is_zero, normalize
from apps.backend.algebra.scaling import HomogeneityReport, homogeneity_analyze, scale_transform, scaling_degree
from apps.backend.algebra.serialize import from_payload, render_text, to_payload

__all__ = [
    "Expr",
    "Sum",
    "Mono",
    "Monomial",
    "Product",
    "Overline",
    "MomentDiv",
    "BoxOp",
    "DeltaOperator",
    "DeltaCT",
    "Remainder",
    "MetricConvention",
    "const",
    "inv",
    "mono",
    "delta",
    "zero",
    "normalize",
    "is_zero",
    "equivalent",
    "multiply",
    "apply_box",
    "apply_euler",
    "shifted_euler",
    "moment_div_reduce",
    "reduce_away_from_origin",
    "mass_dimension",
    "FieldFactor",
    "FieldMonomial",
    "submonomials",
    "count_pairings",
    "scaling_degree",
    "homogeneity_analyze",
    "HomogeneityReport",
    "scale_transform",
    "to_payload",
    "from_payload",
    "render_text",
    "SmxError",
]
