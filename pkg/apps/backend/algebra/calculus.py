"""分级代数上的乘法、□、Euler 算子与矩散度约化。"""

from __future__ import annotations

import logging
from typing import List, Mapping, Optional

import sympy as sp

from apps.backend.algebra.errors import InhomogeneousDimension, UnsupportedForm
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
    scale,
)
from apps.backend.algebra.fields import FieldMonomial, field_mass_dimension
from apps.backend.algebra.normal import atoms, build_atom, normalize

LOGGER = logging.getLogger(__name__)


def multiply(e1: Expr, e2: Expr) -> Sum:
    """分配律与指数相加的乘积，结果已规范化。

    Raises
    ------
    IllDefinedProduct
        δ 反项或分布与同组奇异因子相乘时。
    """

    return normalize(Product(factors=(e1, e2)))


def apply_box(group: str, e: Expr, metric: Optional[MetricConvention] = None) -> Sum:
    """在指定变量组上施加 □，函数部分闭式求值，结构节点保留为 BoxOp。"""

    convention = metric or MetricConvention()
    return normalize(BoxOp(group=group, child=e, metric=convention))


def _euler_monomial(item: Monomial, with_mass: bool) -> List[Expr]:
    """E X^a L^q = 2a X^a L^q + 2q X^a L^(q-1)；可选减去 m∂_m。"""

    result: List[Expr] = []
    factors = item.factor_map()
    for group, (power, log_power) in factors.items():
        result.append(Mono(mono=item.with_coeff(item.coeff * 2 * power)))
        if log_power > 0:
            lowered = dict(factors)
            lowered[group] = (power, log_power - 1)
            result.append(
                Mono(
                    mono=Monomial.build(
                        coeff=item.coeff * 2 * log_power,
                        mass_power=item.mass_power,
                        log_m_power=item.log_m_power,
                        factors=lowered,
                    ),
                ),
            )
    if with_mass:
        result.append(Mono(mono=item.with_coeff(-item.coeff * item.mass_power)))
        if item.log_m_power > 0:
            result.append(
                Mono(
                    mono=Monomial.build(
                        coeff=-item.coeff * item.log_m_power,
                        mass_power=item.mass_power,
                        log_m_power=item.log_m_power - 1,
                        factors=factors,
                    ),
                ),
            )
    return result


def euler_tree(e: Expr, with_mass: bool = False) -> Expr:
    """对任意树施加 Euler 算子（未规范化）。"""

    if isinstance(e, Mono):
        return Sum(terms=tuple(_euler_monomial(e.mono, with_mass)))
    if isinstance(e, Sum):
        return Sum(terms=tuple(euler_tree(item, with_mass) for item in e.terms))
    if isinstance(e, Product):
        pieces = []
        for index, factor in enumerate(e.factors):
            replaced = e.factors[:index] + (euler_tree(factor, with_mass),) + e.factors[index + 1 :]
            pieces.append(Product(factors=replaced))
        return Sum(terms=tuple(pieces))
    if isinstance(e, Overline):
        return Overline(child=euler_tree(e.child, with_mass), ambient=e.ambient, moment=e.moment)
    if isinstance(e, MomentDiv):
        return MomentDiv(order=e.order, child=euler_tree(e.child, with_mass), ambient=e.ambient)
    if isinstance(e, BoxOp):
        # E∘□ = □∘E - 2□
        shifted = Sum(terms=(euler_tree(e.child, with_mass), scale(e.child, -2)))
        return BoxOp(group=e.group, child=shifted, metric=e.metric)
    if isinstance(e, DeltaCT):
        eigen = -(e.dimension + e.operator.order)
        pieces = [scale(e, eigen)]
        if with_mass:
            pieces.append(scale(e, -e.mass_power))
            if e.log_m_power > 0:
                lowered = DeltaCT(
                    operator=e.operator,
                    support=e.support,
                    dimension=e.dimension,
                    coeff=-e.coeff * e.log_m_power,
                    mass_power=e.mass_power,
                    log_m_power=e.log_m_power - 1,
                )
                pieces.append(lowered)
        return Sum(terms=tuple(pieces))
    if isinstance(e, Remainder):
        message = f"余项 {e.tag} 不透明，不能施加 Euler 算子。"
        raise UnsupportedForm(message)
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def apply_euler(e: Expr, with_mass: bool = False) -> Sum:
    """返回 (Σ z_r∂_r [- m∂_m]) e 的规范形式。

    Parameters
    ----------
    e: Expr
        输入表达式。
    with_mass: bool
        为 True 时同时减去 m∂_m。

    Returns
    -------
    Sum
        规范化结果。
    """

    return normalize(euler_tree(normalize(e), with_mass))


def shifted_euler(e: Expr, shift: Exact, with_mass: bool = False) -> Sum:
    """返回 (E [- m∂_m] + shift) e。"""

    base = normalize(e)
    return normalize(Sum(terms=(euler_tree(base, with_mass), scale(base, shift))))


def moment_div_reduce(order: int, e: Expr, ambient: int) -> Sum:
    """离开原点时 MomentDiv(l, e) 的值 ∏_{j<l}(k + j + E) e。"""

    if order < 0:
        message = f"矩阶 {order} 不能为负。"
        raise ValueError(message)
    current = normalize(e)
    for index in range(order):
        current = shifted_euler(current, ambient + index)
    return current


def reduce_away_from_origin(e: Expr, ambient: int) -> Sum:
    """限制到原点之外：去掉支撑于原点的 δ，展开同维数的延拓节点。

    Overline 与 MomentDiv 只在 ambient 一致时展开，其他维数的节点
    （例如子图的 k=4 延拓）原样保留。
    """

    pieces = []
    for term in atoms(e):
        reduced_factors: List[Expr] = [Mono(mono=term.scalar)]
        dropped = False
        for node in term.structures:
            reduced = _reduce_structure(node, ambient)
            if reduced is None:
                dropped = True
                break
            reduced_factors.append(reduced)
        if not dropped:
            pieces.append(Product(factors=tuple(reduced_factors)))
    return normalize(Sum(terms=tuple(pieces)))


def _reduce_structure(node: Expr, ambient: int) -> Optional[Expr]:
    if isinstance(node, DeltaCT):
        if node.dimension == ambient:
            return None
        return node
    if isinstance(node, Remainder):
        if node.extended:
            return Remainder(
                tag=node.tag,
                degree=node.degree,
                order=node.order,
                groups=node.groups,
                extended=False,
            )
        return node
    if isinstance(node, Overline):
        if node.ambient != ambient:
            return node
        if node.moment:
            raise UnsupportedForm("带矩阶的 Overline 只能在 MomentDiv 内约化。")
        return reduce_away_from_origin(node.child, ambient)
    if isinstance(node, MomentDiv):
        if node.ambient != ambient:
            return node
        inner = node.child.child if isinstance(node.child, Overline) else node.child
        return moment_div_reduce(node.order, reduce_away_from_origin(inner, ambient), ambient)
    if isinstance(node, BoxOp):
        return apply_box(node.group, reduce_away_from_origin(node.child, ambient), node.metric)
    return reduce_away_from_origin(node, ambient)


def _structure_dimension(node: Expr) -> sp.Rational:
    if isinstance(node, Mono):
        return _monomial_dimension(node.mono)
    if isinstance(node, Product):
        return sum((_structure_dimension(item) for item in node.factors), sp.Integer(0))
    if isinstance(node, Overline):
        return _structure_dimension(node.child) - node.moment
    if isinstance(node, MomentDiv):
        extra = node.order if isinstance(node.child, Overline) else 0
        return _structure_dimension(node.child) + extra
    if isinstance(node, BoxOp):
        return _structure_dimension(node.child) + 2
    if isinstance(node, DeltaCT):
        return sp.Integer(node.dimension + node.operator.order) + rational_part(node.mass_power)
    if isinstance(node, Remainder):
        return rational_part(node.degree)
    message = f"无法计算 {type(node).__name__} 的量纲。"
    raise TypeError(message)


def _monomial_dimension(item: Monomial) -> sp.Rational:
    total = rational_part(item.mass_power)
    for factor in item.factors:
        total += -2 * rational_part(factor.power)
    return total


def mass_dimension(e: object, dimension: int = 4) -> sp.Rational:
    """返回所有项的共同质量量纲；正则参数部分隐含 M，不计入。

    Raises
    ------
    InhomogeneousDimension
        两项量纲不同，消息中列出冲突的两项。
    """

    if isinstance(e, FieldMonomial):
        return field_mass_dimension(e, dimension=dimension)
    if not isinstance(e, Expr):
        message = f"不支持的对象类型 {type(e).__name__}。"
        raise TypeError(message)
    terms = atoms(e)
    if not terms:
        raise ValueError("零表达式没有确定的质量量纲。")
    reference = None
    reference_term = None
    for term in terms:
        atom = build_atom(term)
        value = _structure_dimension(atom)
        if reference is None:
            reference, reference_term = value, atom
            continue
        if value != reference:
            message = f"项 {reference_term} 的量纲 {reference} 与项 {atom} 的量纲 {value} 不一致。"
            raise InhomogeneousDimension(message)
    return reference


def scalar_multiple(e: Expr, coeff: Exact) -> Sum:
    """规范化的标量倍。"""

    return normalize(scale(e, as_exact(coeff)))


def _substitute_tree(e: Expr, mapping: dict) -> Expr:
    if isinstance(e, Mono):
        return Mono(mono=e.mono.with_coeff(sp.sympify(e.mono.coeff).subs(mapping)))
    if isinstance(e, Sum):
        return Sum(terms=tuple(_substitute_tree(item, mapping) for item in e.terms))
    if isinstance(e, Product):
        return Product(factors=tuple(_substitute_tree(item, mapping) for item in e.factors))
    if isinstance(e, Overline):
        return Overline(child=_substitute_tree(e.child, mapping), ambient=e.ambient, moment=e.moment)
    if isinstance(e, MomentDiv):
        return MomentDiv(order=e.order, child=_substitute_tree(e.child, mapping), ambient=e.ambient)
    if isinstance(e, BoxOp):
        return BoxOp(group=e.group, child=_substitute_tree(e.child, mapping), metric=e.metric)
    if isinstance(e, DeltaCT):
        return DeltaCT(
            operator=e.operator,
            support=e.support,
            dimension=e.dimension,
            coeff=sp.sympify(e.coeff).subs(mapping),
            mass_power=e.mass_power,
            log_m_power=e.log_m_power,
        )
    if isinstance(e, Remainder):
        return e
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def substitute(e: Expr, mapping: Mapping[sp.Symbol, Exact]) -> Sum:
    """替换所有系数中的符号常数（不触及指数）。"""

    values = {symbol: as_exact(value) for symbol, value in mapping.items()}
    return normalize(_substitute_tree(e, values))


__all__ = [
    "multiply",
    "apply_box",
    "apply_euler",
    "euler_tree",
    "shifted_euler",
    "moment_div_reduce",
    "reduce_away_from_origin",
    "mass_dimension",
    "scalar_multiple",
    "substitute",
]
