"""微分重整化：把过奇异的 X^(-a)·P(L) 写成 □ⁿ 作用于可直接延拓的函数。"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import sympy as sp

from apps.backend.algebra.errors import UnsupportedForm
from apps.backend.algebra.expr import BoxOp, Expr, MetricConvention, Mono, Monomial, Overline, Sum
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.algebra.scaling import DEFAULT_N_MAX
from apps.backend.extension.direct import try_homogeneity
from apps.backend.extension.result import ExtensionResult, row_counterterms

LOGGER = logging.getLogger(__name__)

LogPolynomial = Dict[int, sp.Expr]


def _radial_terms(u0: Expr) -> Tuple[str, Dict[sp.Integer, LogPolynomial]]:
    """拆成 {X 的指数: {对数幂: 系数}}，要求单变量组纯单项式。"""

    group: Optional[str] = None
    powers: Dict[sp.Integer, LogPolynomial] = defaultdict(dict)
    for term in atoms(u0):
        if term.structures:
            raise UnsupportedForm("微分重整化只接受纯单项式输入。")
        item = term.scalar
        if not item.is_mass_free():
            raise UnsupportedForm("微分重整化的输入必须与 m 无关。")
        if len(item.factors) != 1:
            raise UnsupportedForm("微分重整化只支持单个变量组的径向函数。")
        part = item.factors[0]
        if group is not None and part.group != group:
            message = f"输入同时依赖变量组 {group} 与 {part.group}。"
            raise UnsupportedForm(message)
        group = part.group
        if not part.power.is_Integer:
            message = f"指数 {part.power} 不是整数。"
            raise UnsupportedForm(message)
        bucket = powers[part.power]
        bucket[part.log_power] = bucket.get(part.log_power, 0) + item.coeff
    if group is None:
        raise UnsupportedForm("输入为零或不含不变量。")
    return group, dict(powers)


def _box_coefficients(power: sp.Integer, log_power: int, metric: MetricConvention) -> Dict[int, sp.Expr]:
    """□(X^b L^q) = X^(b-1)·Σ_j 返回值[j]·L^j。"""

    b, q, d, s = power, log_power, metric.dimension, metric.sign
    result = {q: 2 * s * b * (d + 2 * b - 2)}
    if q >= 1:
        result[q - 1] = 2 * s * q * (d + 4 * b - 2)
    if q >= 2:
        result[q - 2] = 2 * s * 2 * q * (q - 1)
    return result


def box_preimage(power: sp.Integer, target: LogPolynomial, metric: MetricConvention) -> LogPolynomial:
    """求 Q 使 □(X^(power+1)·Q(L)) = X^power·P(L)，P 由 target 给出。

    主系数为零（共振）时 Q 的对数次数升高一次，常数项取 0。
    """

    b = power + 1
    top = max(target) if target else 0
    resonant = sp.expand(b * (metric.dimension + 2 * b - 2)) == 0
    degree = top + 1 if resonant else top
    unknowns = sp.symbols(f"q0:{degree + 1}")
    free = list(unknowns[1:]) if resonant else list(unknowns)
    image: Dict[int, sp.Expr] = defaultdict(lambda: sp.Integer(0))
    for log_power, unknown in enumerate(free, start=1 if resonant else 0):
        for lowered, coeff in _box_coefficients(b, log_power, metric).items():
            image[lowered] += coeff * unknown
    equations = [sp.expand(image[j] - target.get(j, 0)) for j in range(degree + 1)]
    solutions = sp.linsolve([item for item in equations if item != 0], free)
    if not solutions:
        message = f"无法为 X^{power} 求解 □ 的原像。"
        raise UnsupportedForm(message)
    values = next(iter(solutions))
    LOGGER.debug("Box preimage solved", extra={"power": int(power), "resonant": resonant, "degree": degree})
    result = {}
    for log_power, value in enumerate(values, start=1 if resonant else 0):
        value = sp.factor(value)
        if value != 0:
            result[log_power] = value
    return result


def _poly_expr(group: str, power: sp.Expr, poly: LogPolynomial) -> Sum:
    pieces: List[Expr] = [
        Mono(mono=Monomial.build(coeff=coeff, factors={group: (power, log_power)}))
        for log_power, coeff in sorted(poly.items())
    ]
    return normalize(Sum(terms=tuple(pieces)))


def diff_renorm_extend(
    u0: Expr,
    ambient: int = 4,
    *,
    metric: Optional[MetricConvention] = None,
    prefix: str = "C",
    start: int = 0,
    n_max: int = DEFAULT_N_MAX,
) -> ExtensionResult:
    """□ⁿ Overline(g) 形式的延拓，g 的 sd 低于 k。

    Parameters
    ----------
    u0: Expr
        Σ X^(-a)·P_a(L)，a 为整数，单变量组。
    ambient: int
        环境维数，单变量时等于时空维数 d。
    metric: Optional[MetricConvention]
        度规约定，默认闵氏 d=ambient。
    prefix, start: str, int
        反项常数的命名前缀与起始编号。

    Raises
    ------
    UnsupportedForm
        非整数指数、多变量组或含结构节点。
    """

    convention = metric or MetricConvention.minkowski(dimension=ambient)
    if convention.dimension != ambient:
        message = f"度规维数 {convention.dimension} 与环境维数 {ambient} 不一致。"
        raise ValueError(message)
    source = normalize(u0)
    group, powers = _radial_terms(source)
    pieces: List[Expr] = []
    basis = []
    for power, poly in sorted(powers.items()):
        current_power, current = power, poly
        boxes = 0
        while -2 * current_power >= ambient:
            current = box_preimage(current_power, current, convention)
            current_power += 1
            boxes += 1
        node: Expr = Overline(child=_poly_expr(group, current_power, current), ambient=ambient)
        for _ in range(boxes):
            node = BoxOp(group=group, child=node, metric=convention)
        pieces.append(node)
        basis.extend(row_counterterms(-2 * power, ambient, (group,), prefix=prefix, start=start + len(basis)))
    extended = normalize(Sum(terms=tuple(pieces)))
    top_degree = max(-2 * power for power in powers)
    result = ExtensionResult(
        extended=extended,
        method="diffren",
        ambient=ambient,
        counterterm_basis=tuple(basis),
        homogeneity=try_homogeneity(extended, n_max),
    )
    LOGGER.info(
        "Differential renormalization finished",
        extra={"group": group, "degree": int(top_degree), "counterterms": len(basis)},
    )
    return result


__all__ = ["box_preimage", "diff_renorm_extend"]
