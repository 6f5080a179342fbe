"""规范形式：线性展开、系数提取、同类项合并与确定性排序。

规范形式是一个 Sum，每一项要么是 Mono，要么是
Product((标量 Mono, 结构节点...))。结构节点的子节点是系数为 1 的
"单位原子"：单个 Mono、单个结构节点，或二者的 Product。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import sympy as sp

from apps.backend.algebra.errors import IllDefinedProduct, UnsupportedDerivative
from apps.backend.algebra.expr import (
    ONE,
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
    node_groups,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Term:
    """展开过程中的中间项：标量单项式乘若干结构节点。"""

    scalar: Monomial
    structures: Tuple[Expr, ...] = ()


def simplify_coeff(coeff: sp.Expr) -> sp.Expr:
    """系数规范化：有理函数取既约形式。"""

    if coeff.is_Rational:
        return coeff
    return sp.cancel(sp.together(coeff))


def box_factor(power: sp.Expr, log_power: int, metric: MetricConvention) -> List[Tuple[sp.Expr, sp.Expr, int]]:
    """□(X^a L^q) 的闭式，返回 (系数, 新指数, 新对数幂) 列表。

    □(X^a L^q) = 2s·X^(a-1)·[a(d+2a-2)L^q + q(d+4a-2)L^(q-1) + 2q(q-1)L^(q-2)]。
    """

    a = power
    q = log_power
    d = metric.dimension
    s = metric.sign
    items = [
        (2 * s * a * (d + 2 * a - 2), a - 1, q),
        (2 * s * q * (d + 4 * a - 2), a - 1, q - 1),
        (2 * s * 2 * q * (q - 1), a - 1, q - 2),
    ]
    result = []
    for coeff, new_power, new_log in items:
        coeff = sp.expand(coeff)
        if new_log < 0 or coeff == 0:
            continue
        result.append((coeff, sp.expand(new_power), new_log))
    return result


def box_monomial(group: str, x_part: Monomial, metric: MetricConvention) -> List[Monomial]:
    """对 x 部分中 group 因子施加 □，其他组视为常数。"""

    item = x_part.factor(group)
    if item is None:
        return []
    factors = x_part.factor_map()
    result = []
    for coeff, new_power, new_log in box_factor(item.power, item.log_power, metric):
        factors[group] = (new_power, new_log)
        result.append(
            Monomial.build(
                coeff=x_part.coeff * coeff,
                mass_power=x_part.mass_power,
                log_m_power=x_part.log_m_power,
                factors=dict(factors),
            ),
        )
    return result


def _is_trivial_x(x_part: Monomial) -> bool:
    return not x_part.factors


def unit_expr(x_part: Monomial, structures: Sequence[Expr]) -> Expr:
    """由系数为 1 的 x 部分与结构节点构造单位原子。"""

    if not structures:
        return Mono(mono=x_part)
    if _is_trivial_x(x_part) and len(structures) == 1:
        return structures[0]
    head: Tuple[Expr, ...] = () if _is_trivial_x(x_part) else (Mono(mono=x_part),)
    return Product(factors=head + tuple(structures))


def describe(e: Expr) -> str:
    """结构节点的确定性描述串，用作排序与合并键。"""

    if isinstance(e, Mono):
        return f"M{e.mono.x_key()}|{sp.sstr(e.mono.coeff)}"
    if isinstance(e, Overline):
        return f"O[{e.ambient},{e.moment}]({describe(e.child)})"
    if isinstance(e, MomentDiv):
        return f"D[{e.order},{e.ambient}]({describe(e.child)})"
    if isinstance(e, BoxOp):
        return f"B[{e.group},{e.metric.sign},{e.metric.dimension}]({describe(e.child)})"
    if isinstance(e, DeltaCT):
        return (
            f"d[{','.join(e.support)},{e.dimension},{e.operator.invariants},{e.operator.multi_index},"
            f"{sp.sstr(e.coeff)},{sp.sstr(e.mass_power)},{e.log_m_power}]"
        )
    if isinstance(e, Remainder):
        return f"R[{e.tag},{sp.sstr(e.degree)},{e.order},{e.groups},{e.extended}]"
    if isinstance(e, Product):
        return "P(" + "*".join(describe(item) for item in e.factors) + ")"
    if isinstance(e, Sum):
        return "S(" + "+".join(describe(item) for item in e.terms) + ")"
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def _check_product(scalar: Monomial, structures: Sequence[Expr]) -> None:
    """检查逐点乘积是否良定义。"""

    seen: Dict[str, str] = {}
    for node in structures:
        if isinstance(node, Remainder):
            continue
        for group in node_groups(node):
            if group in seen:
                message = f"变量组 {group} 上出现两个分布 {seen[group]} 与 {type(node).__name__} 的乘积。"
                raise IllDefinedProduct(message)
            seen[group] = type(node).__name__
    for item in scalar.factors:
        if item.group in seen and not item.is_smooth():
            message = f"{seen[item.group]} 与变量组 {item.group} 上的奇异因子相乘。"
            raise IllDefinedProduct(message)


def _combine(left: Term, right: Term) -> Term:
    scalar = left.scalar.times(right.scalar)
    structures = tuple(sorted(left.structures + right.structures, key=describe))
    _check_product(scalar=scalar, structures=structures)
    return Term(scalar=scalar, structures=structures)


def expand_terms(e: Expr) -> List[Term]:
    """把任意表达式树展开为中间项列表（未合并）。"""

    if isinstance(e, Mono):
        if e.mono.coeff == 0:
            return []
        return [Term(scalar=e.mono)]
    if isinstance(e, Sum):
        collected: List[Term] = []
        for item in e.terms:
            collected.extend(expand_terms(item))
        return collected
    if isinstance(e, Product):
        accumulated = [Term(scalar=Monomial())]
        for factor in e.factors:
            expanded = expand_terms(factor)
            accumulated = [_combine(left, right) for left in accumulated for right in expanded]
            if not accumulated:
                return []
        return accumulated
    if isinstance(e, Overline):
        return _expand_overline(e)
    if isinstance(e, MomentDiv):
        return _expand_moment(e)
    if isinstance(e, BoxOp):
        return _expand_box(e)
    if isinstance(e, DeltaCT):
        if e.coeff == 0:
            return []
        scalar = Monomial.build(coeff=e.coeff, mass_power=e.mass_power, log_m_power=e.log_m_power)
        unit = DeltaCT(operator=e.operator, support=e.support, dimension=e.dimension)
        return [Term(scalar=scalar, structures=(unit,))]
    if isinstance(e, Remainder):
        return [Term(scalar=Monomial(), structures=(e,))]
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def _merged_units(e: Expr) -> List[Tuple[Monomial, Expr]]:
    """展开子节点并合并，返回 (标量, 单位原子) 列表。"""

    result = []
    for term in merge_terms(expand_terms(e)):
        scalar, x_part = term.scalar.split()
        result.append((scalar, unit_expr(x_part, term.structures)))
    return result


def _expand_overline(e: Overline) -> List[Term]:
    terms = []
    for scalar, unit in _merged_units(e.child):
        node = Overline(child=unit, ambient=e.ambient, moment=e.moment)
        terms.append(Term(scalar=scalar, structures=(node,)))
    return terms


def _expand_moment(e: MomentDiv) -> List[Term]:
    terms = []
    for scalar, unit in _merged_units(e.child):
        if isinstance(unit, Overline) and (unit.moment != e.order or unit.ambient != e.ambient):
            message = "MomentDiv 的 Overline 子项矩阶与外层不一致。"
            raise ValueError(message)
        node = MomentDiv(order=e.order, child=unit, ambient=e.ambient)
        terms.append(Term(scalar=scalar, structures=(node,)))
    return terms


def _expand_box(e: BoxOp) -> List[Term]:
    terms: List[Term] = []
    for term in merge_terms(expand_terms(e.child)):
        scalar, x_part = term.scalar.split()
        dependent = [node for node in term.structures if e.group in node_groups(node)]
        independent = tuple(node for node in term.structures if e.group not in node_groups(node))
        x_dependent = x_part.factor(e.group) is not None
        if not dependent and not x_dependent:
            continue
        if not dependent:
            # 只有 x 部分依赖该组：闭式求值
            for boxed in box_monomial(e.group, x_part, e.metric):
                terms.append(Term(scalar=scalar.times(boxed), structures=independent))
            continue
        if len(dependent) == 1 and not x_dependent:
            node = dependent[0]
            rest_scalar = scalar.times(x_part)
            if isinstance(node, DeltaCT):
                boxed_node = DeltaCT(
                    operator=node.operator.compose(("box", e.group)),
                    support=node.support,
                    dimension=node.dimension,
                )
            else:
                boxed_node = BoxOp(group=e.group, child=node, metric=e.metric)
            structures = tuple(sorted(independent + (boxed_node,), key=describe))
            terms.append(Term(scalar=rest_scalar, structures=structures))
            continue
        if any(isinstance(node, DeltaCT) for node in dependent):
            raise UnsupportedDerivative("□ 作用于 δ 与同组函数的乘积不在支持范围内。")
        x_other = Monomial.build(
            factors={group: value for group, value in x_part.factor_map().items() if group != e.group},
        )
        x_own = x_part.factor(e.group)
        own = Monomial.build(factors={e.group: (x_own.power, x_own.log_power)}) if x_own else Monomial()
        inner = unit_expr(own, tuple(dependent))
        node = BoxOp(group=e.group, child=inner, metric=e.metric)
        structures = tuple(sorted(independent + (node,), key=describe))
        terms.append(Term(scalar=scalar.times(x_other), structures=structures))
    return terms


def merge_terms(terms: Sequence[Term]) -> List[Term]:
    """合并同类项并按确定性顺序排序。"""

    buckets: Dict[Tuple, Tuple[Term, sp.Expr]] = {}
    order: List[Tuple] = []
    for term in terms:
        key = (term.scalar.x_key(), tuple(describe(node) for node in term.structures))
        if key in buckets:
            exemplar, coeff = buckets[key]
            buckets[key] = (exemplar, coeff + term.scalar.coeff)
        else:
            buckets[key] = (term, term.scalar.coeff)
            order.append(key)
    merged = []
    for key in sorted(order, key=_sortable):
        exemplar, coeff = buckets[key]
        coeff = simplify_coeff(coeff)
        if coeff == 0:
            continue
        merged.append(Term(scalar=exemplar.scalar.with_coeff(coeff), structures=exemplar.structures))
    return merged


def _sortable(key: Tuple) -> Tuple:
    x_key, structures = key
    mass_rational, mass_text, log_m, factor_key = x_key
    factors = tuple((group, power, text, log) for group, power, text, log in factor_key)
    return (mass_rational, mass_text, log_m, factors, structures)


def build_atom(term: Term) -> Expr:
    """由合并后的中间项构造规范原子。"""

    if not term.structures:
        return Mono(mono=term.scalar)
    return Product(factors=(Mono(mono=term.scalar),) + term.structures)


def normalize(e: Expr) -> Sum:
    """返回规范形式，满足幂等性 normalize(normalize(e)) == normalize(e)。

    Parameters
    ----------
    e: Expr
        任意表达式树。

    Returns
    -------
    Sum
        规范和，项按 (质量幂, log(m) 幂, 不变量指数, 对数幂, 结构) 排序。
    """

    terms = merge_terms(expand_terms(e))
    LOGGER.debug("Expression normalized", extra={"terms": len(terms)})
    return Sum(terms=tuple(build_atom(term) for term in terms))


def atoms(e: Expr) -> List[Term]:
    """规范化后的中间项列表。"""

    return merge_terms(expand_terms(e))


def is_zero(e: Expr) -> bool:
    """判断表达式是否规范化为零。"""

    return not atoms(e)


def equivalent(left: Expr, right: Expr) -> bool:
    """判断两式差是否规范化为零。"""

    difference = Sum(terms=(left, Product(factors=(Mono(mono=Monomial.build(coeff=-1)), right))))
    return is_zero(difference)


def coefficient_map(e: Expr) -> Dict[str, sp.Expr]:
    """描述串到系数的映射，便于测试逐项比较。"""

    result = {}
    for term in atoms(e):
        key = describe(build_atom(Term(scalar=term.scalar.with_coeff(ONE), structures=term.structures)))
        result[key] = term.scalar.coeff
    return result


__all__ = [
    "Term",
    "simplify_coeff",
    "box_factor",
    "box_monomial",
    "unit_expr",
    "describe",
    "expand_terms",
    "merge_terms",
    "build_atom",
    "normalize",
    "atoms",
    "is_zero",
    "equivalent",
    "coefficient_map",
]
