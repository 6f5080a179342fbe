"""正则参数的 Laurent 展开与最小减除 (MS)。

正则化延拓里 ζ 出现在三处：不变量指数 X^(a+bζ)（隐含 M^(2bζ)）、
质量指数 m^(cζ)（隐含 M^(-cζ)）以及系数 c_l(η(ζ))。前两者按
e^(ζ·log) 展开为对数幂级数，系数按有理函数的 Laurent 级数展开。
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import sympy as sp

from apps.backend.algebra.errors import TruncationTooSmall, UnsupportedForm
from apps.backend.algebra.expr import (
    BoxOp,
    DeltaCT,
    Expr,
    Mono,
    Monomial,
    MomentDiv,
    Overline,
    Product,
    Remainder,
    Sum,
    zero,
)
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.algebra.scaling import DEFAULT_N_MAX
from apps.backend.algebra.serialize import expr_document
from apps.backend.contracts.documents import LaurentDocument
from apps.backend.extension.direct import try_homogeneity
from apps.backend.extension.moments import ETA, ZETA, regularized_extend, regulator_groups
from apps.backend.extension.result import CountertermPattern, ExtensionResult, row_counterterms

LOGGER = logging.getLogger(__name__)

ELL = sp.Symbol("ell")

Series = Dict[int, List[Expr]]


@dataclass(frozen=True)
class LaurentSeries:
    """Σ_{n=min_exponent}^{order} ζⁿ·coefficients[n]，缺失的幂次系数为零。"""

    regulator: sp.Symbol
    min_exponent: int
    order: int
    coefficients: Dict[int, Sum] = field(default_factory=dict)

    def coefficient(self, exponent: int) -> Sum:
        """ζ^exponent 的系数。

        Raises
        ------
        TruncationTooSmall
            exponent 超过截断阶。
        """

        if exponent > self.order:
            message = f"ζ^{exponent} 超过截断阶 {self.order}。"
            raise TruncationTooSmall(message)
        return self.coefficients.get(exponent, zero())

    def principal_part(self) -> Dict[int, Sum]:
        """负幂部分 {n < 0: 系数}。"""

        return {exponent: value for exponent, value in sorted(self.coefficients.items()) if exponent < 0}

    @property
    def pole_order(self) -> int:
        """最低非零负幂的阶，无极点时为 0。"""

        poles = [-exponent for exponent in self.principal_part()]
        return max(poles) if poles else 0

    def to_document(self) -> LaurentDocument:
        return LaurentDocument(
            regulator=self.regulator.name,
            min_exponent=self.min_exponent,
            order=self.order,
            pole_order=self.pole_order,
            coefficients={str(exponent): expr_document(value) for exponent, value in sorted(self.coefficients.items())},
        )


def _valuation(value: sp.Expr, zeta: sp.Symbol) -> int:
    """有理函数在 ζ = 0 处的阶。"""

    numerator, denominator = sp.fraction(sp.cancel(sp.together(value)))

    def lowest(poly_expr: sp.Expr) -> int:
        poly = sp.Poly(poly_expr, zeta)
        return min(monom[0] for monom in poly.monoms())

    return lowest(numerator) - lowest(denominator)


def coefficient_series(value: sp.Expr, zeta: sp.Symbol, order: int) -> Dict[int, sp.Expr]:
    """系数的 Laurent 级数 {n: c_n}，n ≤ order。"""

    value = sp.sympify(value)
    if value == 0:
        return {}
    if not value.has(zeta):
        return {0: value} if order >= 0 else {}
    if not value.is_rational_function(zeta):
        message = f"系数 {value} 不是 {zeta} 的有理函数。"
        raise UnsupportedForm(message)
    valuation = _valuation(value, zeta)
    regular = sp.cancel(value * zeta ** (-valuation))
    if order < valuation:
        return {}
    expanded = sp.expand(sp.series(regular, zeta, 0, order - valuation + 1).removeO())
    result = {}
    for power in range(order - valuation + 1):
        coeff = sp.factor(expanded.coeff(zeta, power))
        if coeff != 0:
            result[power + valuation] = coeff
    return result


def _split_rate(exponent: sp.Expr, zeta: sp.Symbol) -> Tuple[sp.Expr, sp.Expr]:
    expanded = sp.expand(exponent)
    rate = expanded.coeff(zeta, 1)
    rest = sp.expand(expanded - rate * zeta)
    if rest.has(zeta):
        message = f"指数 {exponent} 不是 {zeta} 的线性函数。"
        raise UnsupportedForm(message)
    return rate, rest


def _scalar_series(item: Monomial, zeta: sp.Symbol, order: int) -> Series:
    """m^(a+cζ)·∏X_g^(b_g+β_gζ) 的指数部分按对数展开，再乘系数级数。"""

    mass_rate, mass_rest = _split_rate(item.mass_power, zeta)
    slots: List[Tuple[Optional[str], sp.Expr]] = [(None, mass_rate)] if mass_rate != 0 else []
    base_factors: Dict[str, Tuple[sp.Expr, int]] = {}
    for part in item.factors:
        rate, rest = _split_rate(part.power, zeta)
        base_factors[part.group] = (rest, part.log_power)
        if rate != 0:
            slots.append((part.group, rate))
    coeffs = coefficient_series(item.coeff, zeta, order)
    if not coeffs:
        return {}
    valuation = min(coeffs)
    budget = order - valuation
    # (系数, 质量对数增量, {组: 对数增量}) 的卷积
    exp_terms: Dict[int, List[Tuple[sp.Expr, int, Dict[str, int]]]] = {0: [(sp.Integer(1), 0, {})]}
    for group, rate in slots:
        updated: Dict[int, List[Tuple[sp.Expr, int, Dict[str, int]]]] = defaultdict(list)
        for power, items in exp_terms.items():
            for extra in range(budget - power + 1):
                weight = rate**extra / factorial(extra)
                for coeff, log_m, logs in items:
                    if group is None:
                        updated[power + extra].append((coeff * weight, log_m + extra, logs))
                    else:
                        shifted = dict(logs)
                        shifted[group] = shifted.get(group, 0) + extra
                        updated[power + extra].append((coeff * weight, log_m, shifted))
        exp_terms = dict(updated)
    result: Series = defaultdict(list)
    for coeff_power, coeff in coeffs.items():
        for power, items in exp_terms.items():
            total = coeff_power + power
            if total > order:
                continue
            for weight, log_m, logs in items:
                factors = {
                    group: (rest, log_power + logs.get(group, 0)) for group, (rest, log_power) in base_factors.items()
                }
                result[total].append(
                    Mono(
                        mono=Monomial.build(
                            coeff=coeff * weight,
                            mass_power=mass_rest,
                            log_m_power=item.log_m_power + log_m,
                            factors=factors,
                        ),
                    ),
                )
    return dict(result)


def _convolve(left: Series, right: Series, order: int) -> Series:
    result: Series = defaultdict(list)
    for left_power, left_items in left.items():
        for right_power, right_items in right.items():
            total = left_power + right_power
            if total > order:
                continue
            for a in left_items:
                for b in right_items:
                    result[total].append(Product(factors=(a, b)))
    return dict(result)


def _wrap(series: Series, build) -> Series:
    return {power: [build(Sum(terms=tuple(items)))] for power, items in series.items()}


def _node_series(node: Expr, zeta: sp.Symbol, order: int) -> Series:
    """结构节点的级数；单位原子的系数为 1，因此不含负幂。"""

    if isinstance(node, (DeltaCT, Remainder)):
        return {0: [node]}
    if isinstance(node, Overline):
        inner = _expr_series(node.child, zeta, order)
        return _wrap(inner, lambda child: Overline(child=child, ambient=node.ambient, moment=node.moment))
    if isinstance(node, MomentDiv):
        if isinstance(node.child, Overline):
            inner = _node_series(node.child, zeta, order)
        else:
            inner = _expr_series(node.child, zeta, order)
        return {
            power: [MomentDiv(order=node.order, child=item, ambient=node.ambient) for item in items]
            for power, items in inner.items()
        }
    if isinstance(node, BoxOp):
        inner = _expr_series(node.child, zeta, order)
        return _wrap(inner, lambda child: BoxOp(group=node.group, child=child, metric=node.metric))
    return _expr_series(node, zeta, order)


def _expr_series(e: Expr, zeta: sp.Symbol, order: int) -> Series:
    result: Series = defaultdict(list)
    for term in atoms(e):
        scalar = _scalar_series(term.scalar, zeta, order)
        if not scalar:
            continue
        budget = order - min(scalar)
        accumulated = scalar
        for node in term.structures:
            structure = _node_series(node, zeta, budget)
            if structure and min(structure) < 0:
                raise UnsupportedForm("结构节点内部出现 ζ 的负幂。")
            accumulated = _convolve(accumulated, structure, order)
        for power, items in accumulated.items():
            result[power].extend(items)
    return dict(result)


def laurent_expand(e: Expr, regulator: sp.Symbol = ZETA, order: int = 0) -> LaurentSeries:
    """把含正则参数的表达式展开到 ζ^order（含）。

    Parameters
    ----------
    e: Expr
        ζ 只出现在指数与有理系数中的表达式。
    regulator: sp.Symbol
        正则参数。
    order: int
        截断阶。

    Returns
    -------
    LaurentSeries
        各幂次系数已规范化，零系数被丢弃。
    """

    raw = _expr_series(normalize(e), regulator, order)
    coefficients = {}
    for power in sorted(raw):
        value = normalize(Sum(terms=tuple(raw[power])))
        if value.terms:
            coefficients[power] = value
    series = LaurentSeries(
        regulator=regulator,
        min_exponent=min(coefficients) if coefficients else 0,
        order=order,
        coefficients=coefficients,
    )
    LOGGER.info(
        "Laurent expansion computed",
        extra={"regulator": regulator.name, "order": order, "pole_order": series.pole_order},
    )
    return series


def ms_brackets(
    coefficients: Mapping[int, sp.Expr],
    eta: sp.Expr,
    zeta: sp.Symbol = ZETA,
    ell: sp.Symbol = ELL,
) -> Dict[int, sp.Expr]:
    """每个矩阶的方括号多项式 [ζ⁰] c_l(η(ζ))·e^(ζℓ)，ℓ 为正则化对数之和。"""

    result = {}
    for moment, coeff in sorted(coefficients.items()):
        value = coeff.subs(ETA, eta) * sp.exp(zeta * ell)
        expanded = sp.expand(sp.series(value, zeta, 0, 1).removeO())
        result[moment] = sp.expand(expanded.coeff(zeta, 0))
    return result


def minimal_subtract(
    series: LaurentSeries,
    ambient: int,
    *,
    counterterms: Sequence[CountertermPattern] = (),
    source: Optional[Expr] = None,
    brackets: Optional[Mapping[int, sp.Expr]] = None,
    n_max: int = DEFAULT_N_MAX,
) -> ExtensionResult:
    """取 ζ⁰ 系数作为延拓。

    source 给出时校验离开原点后重现 source。

    Raises
    ------
    TruncationTooSmall
        级数没有算到 ζ⁰。
    UnsupportedForm
        限制恒等式不成立。
    """

    finite = series.coefficient(0)
    result = ExtensionResult(
        extended=finite,
        method="MS",
        ambient=ambient,
        counterterm_basis=tuple(counterterms),
        homogeneity=try_homogeneity(finite, n_max) if finite.terms else None,
        brackets=dict(brackets or {}),
        pole_order=series.pole_order,
        regulator=series.regulator,
    )
    if source is not None and not result.restricts_to(source):
        raise UnsupportedForm("MS 延拓在原点之外没有重现输入。")
    LOGGER.info(
        "Minimal subtraction applied",
        extra={"pole_order": series.pole_order, "counterterms": len(result.counterterm_basis)},
    )
    return result


def regularized_ms_extend(
    v0: Expr,
    zeta: sp.Symbol = ZETA,
    ambient: int = 8,
    *,
    groups: Optional[Sequence[str]] = None,
    prefix: str = "C",
    start: int = 0,
    n_max: int = DEFAULT_N_MAX,
) -> Tuple[ExtensionResult, Optional[ExtensionResult], Optional[LaurentSeries]]:
    """正则化矩延拓 → Laurent 展开 → MS，一次完成。

    返回 (矩延拓, MS 结果, 级数)；输入可直接延拓时后两者为 None。
    """

    moment = regularized_extend(v0, zeta, ambient, groups=groups, n_max=n_max)
    if moment.method == "direct":
        return moment, None, None
    series = laurent_expand(moment.extended, zeta, 0)
    support = tuple(groups) if groups is not None else tuple(regulator_groups(normalize(v0)))
    counterterms = row_counterterms(moment.homogeneity.degree, ambient, support, prefix=prefix, start=start)
    brackets = ms_brackets(moment.moment_coefficients, moment.eta, zeta)
    result = minimal_subtract(
        series,
        ambient,
        counterterms=counterterms,
        source=v0,
        brackets=brackets,
        n_max=n_max,
    )
    return moment, result, series


__all__ = [
    "ELL",
    "LaurentSeries",
    "coefficient_series",
    "laurent_expand",
    "ms_brackets",
    "minimal_subtract",
    "regularized_ms_extend",
]
