"""Scaling degree 与几乎齐次标度分析。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb
from typing import Any, Dict, List, Optional

import sympy as sp

from apps.backend.algebra.errors import NotAlmostHomogeneous, UnsupportedForm
from apps.backend.algebra.expr import (
    BoxOp,
    DeltaCT,
    Exact,
    Expr,
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

LOGGER = logging.getLogger(__name__)

DEFAULT_N_MAX = 8


def _max_degree(values: List[sp.Expr]) -> sp.Expr:
    best = -sp.oo
    for value in values:
        if value == -sp.oo:
            continue
        if best == -sp.oo or rational_part(value) > rational_part(best):
            best = value
    return best


def scaling_degree(e: Expr, ambient: Optional[int] = None) -> sp.Expr:
    """Steinmann scaling degree，结果可含正则参数的线性项。

    Parameters
    ----------
    e: Expr
        不含 Remainder 的表达式。
    ambient: Optional[int]
        环境维数 k，仅用于校验 δ 反项的维数不超过 k。

    Returns
    -------
    sp.Expr
        sd 值；零表达式返回 -oo。
    """

    if isinstance(e, Mono):
        if e.mono.coeff == 0:
            return -sp.oo
        return sp.expand(sum((-2 * item.power for item in e.mono.factors), sp.Integer(0)))
    if isinstance(e, Sum):
        return _max_degree([scaling_degree(item, ambient) for item in e.terms])
    if isinstance(e, Product):
        total = sp.Integer(0)
        for item in e.factors:
            value = scaling_degree(item, ambient)
            if value == -sp.oo:
                return -sp.oo
            total += value
        return sp.expand(total)
    if isinstance(e, Overline):
        inner = scaling_degree(e.child, ambient)
        return inner if inner == -sp.oo else sp.expand(inner - e.moment)
    if isinstance(e, MomentDiv):
        inner = scaling_degree(e.child, ambient)
        if inner == -sp.oo:
            return inner
        return sp.expand(inner + e.order) if isinstance(e.child, Overline) else inner
    if isinstance(e, BoxOp):
        inner = scaling_degree(e.child, ambient)
        return inner if inner == -sp.oo else sp.expand(inner + 2)
    if isinstance(e, DeltaCT):
        if e.coeff == 0:
            return -sp.oo
        if ambient is not None and e.dimension > ambient:
            message = f"δ 反项维数 {e.dimension} 超过环境维数 {ambient}。"
            raise ValueError(message)
        return sp.Integer(e.dimension + e.operator.order)
    if isinstance(e, Remainder):
        raise UnsupportedForm("余项的 scaling degree 请使用 sm_remainder_bound。")
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def joint_weight(e: Expr, with_mass: bool) -> sp.Expr:
    """单个规范原子的标度权重，即满足 (E [- m∂_m] + D) 主项为零的 D。"""

    if isinstance(e, Mono):
        weight = sum((-2 * item.power for item in e.mono.factors), sp.Integer(0))
        if with_mass:
            weight += e.mono.mass_power
        return sp.expand(weight)
    if isinstance(e, Product):
        return sp.expand(sum((joint_weight(item, with_mass) for item in e.factors), sp.Integer(0)))
    if isinstance(e, (Overline, MomentDiv)):
        return joint_weight(e.child, with_mass)
    if isinstance(e, BoxOp):
        return sp.expand(joint_weight(e.child, with_mass) + 2)
    if isinstance(e, DeltaCT):
        weight = sp.Integer(e.dimension + e.operator.order)
        if with_mass:
            weight += e.mass_power
        return sp.expand(weight)
    if isinstance(e, Sum):
        weights = {sp.sstr(joint_weight(item, with_mass)): joint_weight(item, with_mass) for item in e.terms}
        if len(weights) != 1:
            message = f"单位原子内部权重不一致：{sorted(weights)}。"
            raise NotAlmostHomogeneous(message)
        return next(iter(weights.values()))
    if isinstance(e, Remainder):
        raise UnsupportedForm("余项不参与齐次性分析。")
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


@dataclass(frozen=True)
class HomogeneityReport:
    """几乎齐次标度数据：(E [- m∂_m] + D)^N e = 0 且 N 最小。"""

    degree: sp.Expr
    power: int
    with_mass: bool
    annihilator_order: int

    def as_payload(self) -> Dict[str, Any]:
        """JSON 结构 {degree, power, with_mass}。"""

        return {
            "degree": sp.sstr(self.degree),
            "power": self.power,
            "with_mass": self.with_mass,
            "annihilator_order": self.annihilator_order,
        }


def homogeneity_degree(e: Expr, with_mass: bool = False) -> sp.Expr:
    """从分级读取公共次数 D。"""

    from apps.backend.algebra.normal import normalize  # noqa: WPS433 - 避免循环导入

    normalized = normalize(e)
    if not normalized.terms:
        raise NotAlmostHomogeneous("零表达式没有确定的齐次次数。")
    degrees: Dict[str, sp.Expr] = {}
    for atom in normalized.terms:
        value = joint_weight(atom, with_mass)
        degrees[sp.sstr(value)] = value
    if len(degrees) != 1:
        message = f"各项标度权重不一致：{sorted(degrees)}。"
        raise NotAlmostHomogeneous(message)
    return next(iter(degrees.values()))


def homogeneity_analyze(e: Expr, with_mass: bool = False, n_max: int = DEFAULT_N_MAX) -> HomogeneityReport:
    """寻找最小 N ≤ n_max 使 (E [- m∂_m] + D)^N e 规范化为零。

    Raises
    ------
    NotAlmostHomogeneous
        各项次数不同或 N 超过 n_max。
    """

    from apps.backend.algebra.calculus import shifted_euler  # noqa: WPS433 - 避免循环导入

    degree = homogeneity_degree(e, with_mass=with_mass)
    current = e
    for order in range(1, n_max + 1):
        current = shifted_euler(current, degree, with_mass=with_mass)
        if not current.terms:
            report = HomogeneityReport(
                degree=degree,
                power=order - 1,
                with_mass=with_mass,
                annihilator_order=order,
            )
            LOGGER.debug(
                "Homogeneity analyzed",
                extra={"degree": sp.sstr(degree), "annihilator_order": order},
            )
            return report
    message = f"在 N_max={n_max} 内未找到零化幂次，次数 D={degree}。"
    raise NotAlmostHomogeneous(message)


RHO = sp.Symbol("rho", positive=True)


def scale_transform(e: Expr, rho: Exact = RHO, with_mass: bool = True) -> Expr:
    """精确实现 e(ρx)（可选同时 m → m/ρ），对数平移 2 log ρ。

    仅支持由单项式组成的表达式。
    """

    from apps.backend.algebra.normal import atoms  # noqa: WPS433

    factor = as_exact(rho)
    log_rho = sp.log(factor)
    pieces: List[Expr] = []
    for term in atoms(e):
        if term.structures:
            raise UnsupportedForm("scale_transform 只支持纯单项式表达式。")
        pieces.extend(_scale_monomial(term.scalar, factor, log_rho, with_mass))
    return Sum(terms=tuple(pieces))


def _scale_monomial(item: Monomial, factor: sp.Expr, log_rho: sp.Expr, with_mass: bool) -> List[Expr]:
    base_coeff = item.coeff
    for part in item.factors:
        base_coeff *= factor ** (2 * part.power)
    mass_shift = 0
    if with_mass:
        base_coeff *= factor ** (-item.mass_power)
        mass_shift = -1
    # 对数按二项式展开：L → L + 2logρ，log(m/M) → log(m/M) - logρ
    expansions: List[List[tuple]] = []
    for part in item.factors:
        expansions.append(
            [
                (comb(part.log_power, j) * (2 * log_rho) ** (part.log_power - j), part.group, part.power, j)
                for j in range(part.log_power + 1)
            ],
        )
    mass_options = [(1, item.log_m_power)]
    if with_mass and item.log_m_power:
        mass_options = [
            (comb(item.log_m_power, j) * (mass_shift * log_rho) ** (item.log_m_power - j), j)
            for j in range(item.log_m_power + 1)
        ]
    combos: List[tuple] = [(sp.Integer(1), {})]
    for options in expansions:
        combos = [
            (coeff * option_coeff, {**mapping, group: (power, log)})
            for coeff, mapping in combos
            for option_coeff, group, power, log in options
        ]
    results: List[Expr] = []
    for coeff, mapping in combos:
        for mass_coeff, log_m in mass_options:
            results.append(
                Mono(
                    mono=Monomial.build(
                        coeff=base_coeff * coeff * mass_coeff,
                        mass_power=item.mass_power,
                        log_m_power=log_m,
                        factors=mapping,
                    ),
                ),
            )
    return results


__all__ = [
    "DEFAULT_N_MAX",
    "scaling_degree",
    "joint_weight",
    "HomogeneityReport",
    "homogeneity_degree",
    "homogeneity_analyze",
    "RHO",
    "scale_transform",
]
