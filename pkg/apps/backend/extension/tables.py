"""整张 sm 表的保持 sm 结构的延拓。

L₀ = D - k 以上的行与余项 r_{L₀+1} 直接延拓；l ≤ L₀ 的行逐行做几乎
齐次延拓，尺度取 M₁ = M。反项常数按 (l 降序, p 升序, 算子) 统一编号。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Optional, Tuple

import sympy as sp

from apps.backend.algebra.calculus import reduce_away_from_origin
from apps.backend.algebra.errors import TruncationTooSmall, UnsupportedForm
from apps.backend.algebra.expr import (
    BoxOp,
    DeltaCT,
    Exact,
    Expr,
    MetricConvention,
    Mono,
    Monomial,
    MomentDiv,
    Overline,
    Product,
    Remainder,
    Sum,
    as_exact,
    rational_part,
)
from apps.backend.algebra.normal import is_zero, normalize
from apps.backend.algebra.scaling import DEFAULT_N_MAX, scaling_degree
from apps.backend.extension.diffren import diff_renorm_extend
from apps.backend.extension.direct import direct_extend, direct_extend_remainder
from apps.backend.extension.laurent import LaurentSeries, regularized_ms_extend
from apps.backend.extension.moments import ZETA
from apps.backend.extension.result import CountertermPattern, ExtensionResult
from apps.backend.smx.expansion import RowKey, SmExpansion

LOGGER = logging.getLogger(__name__)

ROW_METHODS = ("auto", "diffren", "MS")


@dataclass(frozen=True)
class EngineConfig:
    """延拓引擎配置。

    Attributes
    ----------
    n_max: int
        齐次性分析允许的最大零化幂次。
    with_prefactor: bool
        是否保留组合前因子（例如 6ħ³）。
    metric: Optional[MetricConvention]
        度规约定，缺省时沿用 sm 表自身的约定。
    max_log_power: int
        m > 0 的反项允许的最高 log(m/M) 幂次。
    subdiagram_prefix: str
        插入子图时其反项常数的前缀。
    counterterm_prefix: str
        当前图反项常数的前缀。
    method: str
        auto 时单变量组先试微分重整化，否则走正则化 + MS。
    regulator_groups: Optional[Tuple[str, ...]]
        乘 (M²X_g)^ζ 的变量组，缺省时取单项式部分出现的组。
    """

    n_max: int = DEFAULT_N_MAX
    with_prefactor: bool = True
    metric: Optional[MetricConvention] = None
    max_log_power: int = 1
    subdiagram_prefix: str = "Cs"
    counterterm_prefix: str = "C"
    method: str = "auto"
    regulator_groups: Optional[Tuple[str, ...]] = None
    regulator: sp.Symbol = ZETA

    def __post_init__(self) -> None:
        if self.method not in ROW_METHODS:
            message = f"未知的行延拓方法 {self.method!r}，可选 {ROW_METHODS}。"
            raise ValueError(message)
        if self.max_log_power < 0:
            message = f"max_log_power={self.max_log_power} 不能为负。"
            raise ValueError(message)


@dataclass(frozen=True)
class SmExtension:
    """extend_sm 的完整输出：输入表、延拓后的表、逐行结果与阈值 L₀。"""

    source: SmExpansion
    table: SmExpansion
    results: Dict[RowKey, ExtensionResult] = field(default_factory=dict)
    threshold: int = 0
    moments: Dict[RowKey, ExtensionResult] = field(default_factory=dict)
    series: Dict[RowKey, LaurentSeries] = field(default_factory=dict)

    def counterterm_basis(self) -> List[CountertermPattern]:
        """整张表的反项 m^l·log^p(m/M)·C·P(∂)δ，按常数编号排列。"""

        patterns: List[CountertermPattern] = []
        for (l, p), result in self.results.items():
            prefactor = Mono(mono=Monomial.build(mass_power=l, log_m_power=p))
            for item in result.counterterm_basis:
                patterns.append(
                    CountertermPattern(
                        constant=item.constant,
                        expr=normalize(Product(factors=(prefactor, item.expr))),
                        mass_power=l,
                        log_m_power=p,
                        order=item.order,
                    ),
                )
        return sorted(patterns, key=lambda item: _constant_index(item.constant))

    def methods(self) -> Dict[str, str]:
        """{"l,p": 方法}。"""

        return {f"{l},{p}": result.method for (l, p), result in sorted(self.results.items())}


def _constant_index(name: str) -> Tuple[str, int]:
    digits = "".join(ch for ch in name if ch.isdigit())
    prefix = name[: len(name) - len(digits)]
    return prefix, int(digits) if digits else -1


def threshold(s: SmExpansion, ambient: Optional[int] = None) -> int:
    """L₀ = ⌊D - k⌋，可以为负。"""

    k = ambient if ambient is not None else s.ambient
    return int(sp.floor(rational_part(s.degree) - k))


RowDetails = Tuple[ExtensionResult, Optional[ExtensionResult], Optional[LaurentSeries]]


def _extend_row_detailed(
    expr: Expr,
    ambient: int,
    *,
    metric: MetricConvention,
    config: EngineConfig,
    start: int = 0,
) -> RowDetails:
    """返回 (延拓结果, 正则化矩延拓, Laurent 级数)；非 MS 路径后两者为 None。"""

    degree = scaling_degree(expr, ambient)
    if degree == -sp.oo or rational_part(degree) < ambient:
        return direct_extend(expr, ambient, n_max=config.n_max), None, None
    prefix = config.counterterm_prefix
    if config.method in {"auto", "diffren"} and metric.dimension == ambient:
        try:
            result = diff_renorm_extend(expr, ambient, metric=metric, prefix=prefix, start=start, n_max=config.n_max)
            return result, None, None
        except UnsupportedForm:
            if config.method == "diffren":
                raise
            LOGGER.debug("Differential renormalization not applicable, falling back to MS", extra={"ambient": ambient})
    elif config.method == "diffren":
        message = f"微分重整化要求环境维数 {ambient} 等于时空维数 {metric.dimension}。"
        raise UnsupportedForm(message)
    moment, result, series = regularized_ms_extend(
        expr,
        config.regulator,
        ambient,
        groups=config.regulator_groups,
        prefix=prefix,
        start=start,
        n_max=config.n_max,
    )
    if result is None:
        return moment, None, None
    return result, moment, series


def extend_row(
    expr: Expr,
    ambient: int,
    *,
    metric: MetricConvention,
    config: EngineConfig,
    start: int = 0,
) -> ExtensionResult:
    """单行的几乎齐次延拓。

    sd < k 时直接延拓；否则按 config.method 选择微分重整化或正则化 + MS。
    """

    result, _, _ = _extend_row_detailed(expr, ambient, metric=metric, config=config, start=start)
    return result


def extend_sm_detailed(
    s: SmExpansion,
    ambient: Optional[int] = None,
    config: Optional[EngineConfig] = None,
) -> SmExtension:
    """逐行延拓并保留中间结果。

    Parameters
    ----------
    s: SmExpansion
        未重整化的表。
    ambient: Optional[int]
        环境维数 k，缺省为 s.ambient。
    config: Optional[EngineConfig]
        引擎配置。

    Raises
    ------
    TruncationTooSmall
        L < L₀，余项无法直接延拓。
    """

    settings = config or EngineConfig()
    k = ambient if ambient is not None else s.ambient
    metric = settings.metric or s.metric
    limit = threshold(s, k)
    if s.order < limit:
        message = f"截断阶 L={s.order} 低于 L₀={limit}，余项的 scaling degree 不低于 {k}。"
        raise TruncationTooSmall(message)
    direct_extend_remainder(s.remainder, k)
    ordered = sorted(s.table(), key=lambda key: (-key[0], key[1]))
    results: Dict[RowKey, ExtensionResult] = {}
    moments: Dict[RowKey, ExtensionResult] = {}
    series: Dict[RowKey, LaurentSeries] = {}
    count = 0
    for key in ordered:
        row = s.row(*key)
        if key[0] > limit:
            result = direct_extend(row, k, n_max=settings.n_max)
        else:
            result, moment, laurent = _extend_row_detailed(row, k, metric=metric, config=settings, start=count)
            if moment is not None and laurent is not None:
                moments[key], series[key] = moment, laurent
        count += len(result.counterterm_basis)
        results[key] = result
        LOGGER.info(
            "Row extended",
            extra={"row": f"{key[0]},{key[1]}", "method": result.method, "counterterms": len(result.counterterm_basis)},
        )
    table = SmExpansion.build(
        degree=s.degree,
        order=s.order,
        table={key: result.with_counterterms() for key, result in results.items()},
        ambient=k,
        groups=s.groups,
        metric=s.metric,
        tag=s.tag,
        remainder_extended=True,
    )
    return SmExtension(
        source=s,
        table=table,
        results=dict(sorted(results.items())),
        threshold=limit,
        moments=dict(sorted(moments.items())),
        series=dict(sorted(series.items())),
    )


def extend_sm(s: SmExpansion, ambient: Optional[int] = None, config: Optional[EngineConfig] = None) -> SmExpansion:
    """延拓后的 sm 表，行中含带自由常数的反项。"""

    return extend_sm_detailed(s, ambient, config).table


def extended_remainder(extension: SmExtension, lower: int) -> Sum:
    """r̄_{L₁+1} = Σ_{L₁<l≤L} m^l log^p(m/M) ū_{l,p} + r̄_{L+1}。

    L₁ < L₀ 时这就是余项延拓的定义，L₁ ≥ L₀ 时与直接延拓一致。
    """

    table = extension.table
    if lower < 0 or lower > table.order:
        message = f"L₁={lower} 必须在 [0, {table.order}] 内。"
        raise ValueError(message)
    pieces: List[Expr] = [table.row_function(l) for l in table.mass_powers() if l > lower]
    pieces.append(table.remainder)
    return normalize(Sum(terms=tuple(pieces)))


def _shift_monomial(item: Monomial, kappa: sp.Expr) -> List[Expr]:
    """L_g → L_g + 2κ，log(m/M) → log(m/M) - κ 的二项式展开。"""

    combos: List[Tuple[sp.Expr, Dict[str, Tuple[sp.Expr, int]]]] = [(item.coeff, {})]
    for part in item.factors:
        combos = [
            (
                coeff * comb(part.log_power, j) * (2 * kappa) ** (part.log_power - j),
                {**mapping, part.group: (part.power, j)},
            )
            for coeff, mapping in combos
            for j in range(part.log_power + 1)
        ]
    result: List[Expr] = []
    for coeff, mapping in combos:
        for j in range(item.log_m_power + 1):
            weight = comb(item.log_m_power, j) * (-kappa) ** (item.log_m_power - j)
            result.append(
                Mono(
                    mono=Monomial.build(
                        coeff=coeff * weight,
                        mass_power=item.mass_power,
                        log_m_power=j,
                        factors=mapping,
                    ),
                ),
            )
    return result


def _shift_tree(e: Expr, kappa: sp.Expr) -> Expr:
    if isinstance(e, Mono):
        return Sum(terms=tuple(_shift_monomial(e.mono, kappa)))
    if isinstance(e, Sum):
        return Sum(terms=tuple(_shift_tree(item, kappa) for item in e.terms))
    if isinstance(e, Product):
        return Product(factors=tuple(_shift_tree(item, kappa) for item in e.factors))
    if isinstance(e, Overline):
        return Overline(child=_shift_tree(e.child, kappa), ambient=e.ambient, moment=e.moment)
    if isinstance(e, MomentDiv):
        return MomentDiv(order=e.order, child=_shift_tree(e.child, kappa), ambient=e.ambient)
    if isinstance(e, BoxOp):
        return BoxOp(group=e.group, child=_shift_tree(e.child, kappa), metric=e.metric)
    if isinstance(e, DeltaCT):
        pieces = []
        for j in range(e.log_m_power + 1):
            weight = comb(e.log_m_power, j) * (-kappa) ** (e.log_m_power - j)
            pieces.append(
                DeltaCT(
                    operator=e.operator,
                    support=e.support,
                    dimension=e.dimension,
                    coeff=e.coeff * weight,
                    mass_power=e.mass_power,
                    log_m_power=j,
                ),
            )
        return Sum(terms=tuple(pieces))
    if isinstance(e, Remainder):
        return e
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def rescale_mass_scale(e: Expr, log_ratio: Exact) -> Sum:
    """把以 M₁ = M·e^κ 书写的表达式改写为以 M 书写，κ = log_ratio。

    log(M₁²X) = log(M²X) + 2κ，log(m/M₁) = log(m/M) - κ，延拓节点内部同样替换。
    """

    kappa = as_exact(log_ratio)
    return normalize(_shift_tree(normalize(e), kappa))


def differs_by_local_terms(left: Expr, right: Expr, ambient: int) -> bool:
    """两式之差是否支撑在原点（离开原点约化为零）。"""

    difference = Sum(terms=(left, Product(factors=(Mono(mono=Monomial.build(coeff=-1)), right))))
    return is_zero(reduce_away_from_origin(difference, ambient))


__all__ = [
    "ROW_METHODS",
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
