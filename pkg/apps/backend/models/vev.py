"""两顶点真空期望值、Hadamard 分解恒等式与子图常数改名。"""

from __future__ import annotations

import logging
from math import comb, factorial
from typing import Dict, List, Mapping, Optional

import sympy as sp

from apps.backend.algebra.calculus import substitute
from apps.backend.algebra.expr import DeltaCT, Expr, Mono, Sum, zero
from apps.backend.algebra.fields import FieldMonomial, count_pairings, submonomials
from apps.backend.algebra.normal import atoms, is_zero, normalize
from apps.backend.algebra.serialize import LOG_MASS, render_text, to_sympy
from apps.backend.contracts.reports import HadamardReport, PropertyCheck
from apps.backend.models.propagators import LOG_MU, PropagatorModel, model_pair, propagator_sm
from apps.backend.smx.expansion import SmExpansion, sm_power, sm_product, sm_scale, sm_sum, sm_trivial

LOGGER = logging.getLogger(__name__)

HBAR = sp.Symbol("hbar")


def vev_prefactor(a: int, b: int, *, with_prefactor: bool = True) -> sp.Expr:
    """δ_ab·a!·ħ^a；with_prefactor=False 时只保留 δ_ab。"""

    if a < 0 or b < 0:
        message = f"场的个数 ({a}, {b}) 不能为负。"
        raise ValueError(message)
    pairings = count_pairings(FieldMonomial.power(a), FieldMonomial.power(b))
    if not pairings:
        return sp.Integer(0)
    if not with_prefactor:
        return sp.Integer(1)
    return sp.Integer(pairings) * HBAR**a


def two_vertex_vev_sm(
    a: int,
    b: int,
    propagator: SmExpansion,
    *,
    with_prefactor: bool = True,
) -> Optional[SmExpansion]:
    """t(φ^a, φ^b) 的 sm 表；a ≠ b 时为 None（恒为零）。"""

    prefactor = vev_prefactor(a, b, with_prefactor=with_prefactor)
    if prefactor == 0:
        return None
    if a == 0:
        return sm_trivial(propagator.order, propagator.metric)
    table = sm_power(propagator, a)
    return table if prefactor == 1 else sm_scale(table, prefactor)


def two_vertex_vev(
    a: int,
    b: int,
    model: PropagatorModel,
    *,
    order: Optional[int] = None,
    group: str = "x",
    with_prefactor: bool = True,
) -> Expr:
    """δ_ab·a!·ħ^a·(Δ)^a，Δ 为模型的截断展开（含余项）。"""

    table = two_vertex_vev_sm(a, b, propagator_sm(model, order, group), with_prefactor=with_prefactor)
    if table is None:
        return zero()
    return table.as_expr()


def _split_terms(
    exponent: int,
    hadamard: SmExpansion,
    difference: SmExpansion,
    order: int,
    with_prefactor: bool,
) -> Dict[str, SmExpansion]:
    """Σ_j C(n,j)²·j!·ħ^j·d^j·t^μ(φ^(n-j), φ^(n-j))，按 j 给出各项。"""

    whole = FieldMonomial.power(exponent)
    result: Dict[str, SmExpansion] = {}
    for lower, rest, multiplicity in submonomials(whole):
        j = rest.degree()
        weight = multiplicity**2 * factorial(j) * HBAR**j if with_prefactor else multiplicity
        inner = two_vertex_vev_sm(lower.degree(), lower.degree(), hadamard, with_prefactor=with_prefactor)
        if j == 0:
            piece = inner
        else:
            smooth = sm_power(difference, j, order=order)
            piece = sm_product(inner, smooth, ambient=hadamard.ambient, order=order)
        result[f"j={j}"] = sm_scale(piece, weight)
    return result


def _log_collapse(expansion: SmExpansion) -> sp.Expr:
    """μ = m 的形式代入：log(μ/M) → log(m/M)。"""

    image = to_sympy(expansion.as_expr(include_remainder=False))
    return sp.expand(image.subs(LOG_MU, LOG_MASS))


def hadamard_split_check(
    model: Optional[PropagatorModel] = None,
    *,
    exponent: int = 3,
    order: Optional[int] = None,
    with_prefactor: bool = True,
) -> HadamardReport:
    """n!ħⁿ(Δ^F)ⁿ = Σ_j C(n,j)²·j!·ħ^j·d^j·t^μ(φ^(n-j), φ^(n-j)) 的逐行检查。

    n = 3 时右侧是 t^μ(φ³,φ³) + 9ħ·t^μ(φ²,φ²)·d + 18ħ³·H·d² + 6ħ³·d³。
    另外检查 H + d = Δ^F、d 不含奇异幂，以及 μ = m 时 d 退化为零。
    """

    base = model or PropagatorModel()
    target = base.truncation if order is None else order
    feynman = propagator_sm(base.with_kind("Feynman"), target)
    hadamard, difference = model_pair(base, target)
    checks: List[PropertyCheck] = []

    recombined = sm_sum(hadamard, difference)
    gap = normalize(Sum(terms=(recombined.as_expr(False), -feynman.as_expr(False))))
    checks.append(_check("sum", is_zero(gap), f"H + d - Δ^F = {render_text(gap)}"))

    singular = [
        render_text(Mono(mono=term.scalar))
        for term in atoms(difference.as_expr(False))
        if not all(part.is_smooth() for part in term.scalar.factors)
    ]
    checks.append(_check("smooth", not singular, f"d 含奇异项 {singular}"))

    lhs = two_vertex_vev_sm(exponent, exponent, feynman, with_prefactor=with_prefactor)
    terms = _split_terms(exponent, hadamard, difference, target, with_prefactor)
    total = None
    for piece in terms.values():
        total = piece if total is None else sm_sum(total, piece)
    residual = normalize(Sum(terms=(lhs.as_expr(False), -total.as_expr(False))))
    checks.append(_check("identity", is_zero(residual), "两侧在截断阶内不相等。"))

    collapsed = _log_collapse(difference)
    checks.append(_check("collapse", collapsed == 0, f"μ = m 时 d = {collapsed}"))

    report = HadamardReport(
        truncation=target,
        terms={name: render_text(piece.as_expr(False)) for name, piece in sorted(terms.items())},
        residual=render_text(residual),
        passed=all(item.passed for item in checks),
        checks=checks,
    )
    LOGGER.info("Hadamard split checked", extra={"passed": report.passed, "terms": len(terms)})
    return report


def _check(name: str, passed: bool, detail: str) -> PropertyCheck:
    return PropertyCheck(name=name, passed=bool(passed), detail="" if passed else detail)


def constant_symbols(e: Expr, prefix: str = "C") -> List[sp.Symbol]:
    """系数中以 prefix 加数字命名的自由常数，按编号排列。"""

    found = set()
    for node in normalize(e).walk():
        if isinstance(node, Mono):
            coeff = node.mono.coeff
        elif isinstance(node, DeltaCT):
            coeff = node.coeff
        else:
            continue
        for symbol in sp.sympify(coeff).free_symbols:
            digits = symbol.name[len(prefix) :]
            if symbol.name.startswith(prefix) and digits.isdigit():
                found.add(symbol)
    return sorted(found, key=lambda symbol: int(symbol.name[len(prefix) :]))


def rename_constants(
    e: Expr,
    prefix: str = "Cs",
    *,
    source_prefix: str = "C",
    mapping: Optional[Mapping[sp.Symbol, sp.Symbol]] = None,
) -> Sum:
    """把 C0, C1, … 改名为 Cs0, Cs1, …，供插入更大的图时与新常数区分。"""

    renames = dict(mapping) if mapping is not None else {
        symbol: sp.Symbol(prefix + symbol.name[len(source_prefix) :]) for symbol in constant_symbols(e, source_prefix)
    }
    if not renames:
        return normalize(e)
    LOGGER.debug("Constants renamed", extra={"count": len(renames), "prefix": prefix})
    return substitute(e, renames)


def rename_table(s: SmExpansion, prefix: str = "Cs", *, source_prefix: str = "C") -> SmExpansion:
    """对 sm 表逐行改名。"""

    names: Dict[sp.Symbol, sp.Symbol] = {}
    for row in s.rows:
        for symbol in constant_symbols(row.expr, source_prefix):
            names[symbol] = sp.Symbol(prefix + symbol.name[len(source_prefix) :])
    return SmExpansion.build(
        degree=s.degree,
        order=s.order,
        table={(row.l, row.p): rename_constants(row.expr, mapping=names) for row in s.rows},
        ambient=s.ambient,
        groups=s.groups,
        metric=s.metric,
        tag=s.tag,
        remainder_extended=s.remainder_extended,
    )


def binomial_weights(exponent: int = 3) -> Dict[int, int]:
    """{j: C(n,j)²·j!}，n = 3 时为 {0: 1, 1: 9, 2: 18, 3: 6}。"""

    return {j: comb(exponent, j) ** 2 * factorial(j) for j in range(exponent + 1)}


__all__ = [
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
