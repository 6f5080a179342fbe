"""欧氏约定下 ⟨e, h⟩ 的径向数值配对。

只处理单变量组 (k = d) 的表达式。Overline 子节点的 sd < k，因此直接
延拓就是局部可积函数本身；BoxOp 与 MomentDiv 分部积分转移到 h 上，
δ 反项取 h 在原点的值。
"""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import sympy as sp
from scipy.integrate import quad

from apps.backend.algebra.errors import NonIntegrable, UnsupportedGeometry
from apps.backend.algebra.expr import (
    BoxOp,
    DeltaCT,
    Expr,
    Mono,
    Monomial,
    MomentDiv,
    Overline,
    Remainder,
    Sum,
    rational_part,
)
from apps.backend.algebra.normal import atoms, build_atom, normalize
from apps.backend.algebra.serialize import render_text
from apps.backend.contracts.reports import PairingReport
from apps.backend.numeric.testfunc import TestFunction, sphere_area

LOGGER = logging.getLogger(__name__)

Weight = Callable[[float], float]

LOG_FLOOR = math.log(sys.float_info.min)

# 原点段在 t = LOG_DEEP 处分成两段
LOG_DEEP = -40.0


@dataclass(frozen=True)
class NumericConfig:
    """数值验证的公共参数。

    Attributes
    ----------
    tolerance: float
        极限与拟合判定的相对容差。
    epsabs, epsrel, limit: float, float, int
        scipy.integrate.quad 的参数。
    workers: int
        ρ 网格并行求值的线程数。
    mass_scale: float
        M 的数值，log(M²X) 与隐含的 M^(…ζ) 因子都按它求值。
    mass: Optional[float]
        含 m 的项所用的质量值；为 None 时遇到 m 依赖直接报错。
    dps: int
        mpmath 求值精度。
    """

    tolerance: float = 1e-6
    epsabs: float = 1e-14
    epsrel: float = 1e-12
    limit: int = 400
    workers: int = 1
    mass_scale: float = 1.0
    mass: Optional[float] = None
    dps: int = 30

    def __post_init__(self) -> None:
        if self.tolerance <= 0 or self.epsabs < 0 or self.epsrel <= 0:
            raise ValueError("tolerance、epsabs、epsrel 必须为正。")
        if self.limit < 1 or self.workers < 1:
            raise ValueError("limit 与 workers 至少为 1。")
        if self.mass_scale <= 0:
            raise ValueError("mass_scale 必须为正。")


@dataclass(frozen=True)
class RadialTerm:
    """coeff·m^l·log^p(m/M)·X^a·log(M²X)^q 的数值形式。"""

    coeff: float
    power: float
    log_power: int

    def __call__(self, r: float, mass_scale: float) -> float:
        x = r * r
        value = self.coeff * x**self.power
        if self.log_power:
            value *= math.log(mass_scale**2 * x) ** self.log_power
        return value

    def at_log(self, t: float, shift: float, log_scale: float, mass_scale: float) -> float:
        """r = e^t 处 coeff·r^(2a + shift)·e^log_scale·log(M²r²)^q，全程按对数计算。"""

        value = self.coeff * math.exp((2 * self.power + shift) * t + log_scale)
        if self.log_power and value:
            value *= (2 * math.log(mass_scale) + 2 * t) ** self.log_power
        return value


def _numeric(value: sp.Expr, values: Mapping[sp.Symbol, float]) -> float:
    substituted = sp.sympify(value).subs(dict(values))
    if substituted.free_symbols:
        message = f"系数 {value} 中的符号 {sorted(map(str, substituted.free_symbols))} 没有给出数值。"
        raise ValueError(message)
    return float(substituted)


def scalar_factor(item: Monomial, values: Mapping[sp.Symbol, float], config: NumericConfig) -> float:
    factor = _numeric(item.coeff, values)
    if item.mass_power == 0 and item.log_m_power == 0:
        return factor
    if config.mass is None:
        message = "表达式含 m 依赖，需要在 NumericConfig.mass 中给出质量。"
        raise ValueError(message)
    ratio = config.mass / config.mass_scale
    fixed = rational_part(item.mass_power)
    rate = _numeric(item.mass_power - fixed, values)
    # m^(r + bζ) 隐含为 m^r·(m/M)^(bζ)
    return factor * config.mass ** float(fixed) * ratio**rate * math.log(ratio) ** item.log_m_power


def radial_terms(e: Expr, group: str, values: Mapping[sp.Symbol, float], config: NumericConfig) -> List[RadialTerm]:
    """纯函数部分（无结构节点）的数值项。"""

    result = []
    for term in atoms(e):
        if term.structures:
            raise UnsupportedGeometry("函数部分中出现了嵌套的结构节点。")
        scalar, x_part = term.scalar.split()
        coeff = scalar_factor(scalar, values, config)
        factor = x_part.factor(group)
        extra = x_part.groups() - {group}
        if extra:
            message = f"数值配对只支持单变量组，出现了 {sorted(extra)}。"
            raise UnsupportedGeometry(message)
        if factor is None:
            result.append(RadialTerm(coeff=coeff, power=0.0, log_power=0))
            continue
        exponent = sp.sympify(factor.power).subs(dict(values))
        if exponent.free_symbols:
            message = f"指数 {factor.power} 中的正则参数没有给出数值。"
            raise ValueError(message)
        rate = sp.expand(factor.power - rational_part(factor.power))
        if rate != 0:
            # X^(bζ) 隐含 (M²X)^(bζ)
            coeff *= config.mass_scale ** (2 * _numeric(rate, values))
        result.append(RadialTerm(coeff=coeff, power=float(exponent), log_power=factor.log_power))
    return result


def singularity(terms: List[RadialTerm]) -> float:
    """函数部分的 scaling degree（数值）。"""

    return max((-2 * term.power for term in terms), default=-math.inf)


def integrate_radial(
    function: Callable[[float], float],
    low: float,
    high: float,
    config: NumericConfig,
    *,
    near_origin: Optional[Callable[[float], float]] = None,
) -> Tuple[float, float, int, bool]:
    """∫_low^high function(r) dr；[0, 1] 段换元 r = e^t 处理原点的可积奇异。

    near_origin(t) 是换元后的被积函数（已含 dr = r·dt），缺省由 function 构造。
    t 的下限取 LOG_FLOOR，其下 r 不再是规格化浮点数。
    """

    def logarithmic(t: float) -> float:
        r = math.exp(t)
        return function(r) * r

    pieces: List[Tuple[Callable[[float], float], float, float]] = []
    if low <= 0:
        split = min(1.0, high)
        origin = near_origin or logarithmic
        top = math.log(split)
        pieces.append((origin, LOG_FLOOR, min(LOG_DEEP, top)))
        pieces.append((origin, LOG_DEEP, top))
        if high > split:
            pieces.append((function, split, high))
    else:
        pieces.append((logarithmic, math.log(low), math.log(high) if high < math.inf else math.inf))
    total, error, nodes, converged = 0.0, 0.0, 0, True
    for integrand, a, b in pieces:
        if b <= a:
            continue
        outcome = quad(integrand, a, b, epsabs=config.epsabs, epsrel=config.epsrel, limit=config.limit, full_output=1)
        value, abserr, info = outcome[0], outcome[1], outcome[2]
        total += value
        error += abserr
        nodes += int(info["neval"])
        converged = converged and len(outcome) == 3
    return total, error, nodes, converged


def _weight(node: Expr, h: TestFunction) -> Tuple[Expr, Weight, float, int]:
    """剥去分部积分节点，返回 (函数部分, 作用后的试验函数, 符号因子, 可容许的额外奇异阶)。

    E(E-1)…(E-l+1)h 在原点至少按 r^l 消失，所以 MomentDiv 内部允许 sd < k + l。
    """

    if isinstance(node, Overline):
        if node.moment:
            raise UnsupportedGeometry("带矩的 Overline 只能出现在 MomentDiv 内部。")
        return node.child, h.value, 1.0, 0
    if isinstance(node, BoxOp):
        if node.metric.sign != 1:
            raise UnsupportedGeometry("数值配对只在欧氏约定 (sign=+1) 下进行。")
        boxes, inner = 1, node.child
        while True:
            if isinstance(inner, BoxOp):
                boxes, inner = boxes + 1, inner.child
                continue
            if isinstance(inner, Sum) and len(inner.terms) == 1 and isinstance(inner.terms[0], BoxOp):
                inner = inner.terms[0]
                continue
            break
        child = _unwrap(inner)
        if isinstance(child, Overline):
            child = child.child
        return child, lambda r: h.laplacian(r, boxes), 1.0, 0
    if isinstance(node, MomentDiv):
        child = _unwrap(node.child)
        if isinstance(child, Overline):
            child = child.child
        order = node.order
        return child, lambda r: h.euler_falling(r, order), float((-1) ** order), order
    message = f"数值配对不支持节点 {type(node).__name__}。"
    raise UnsupportedGeometry(message)


def _unwrap(e: Expr) -> Expr:
    while isinstance(e, Sum) and len(e.terms) == 1:
        e = e.terms[0]
    return e


def _delta_value(node: DeltaCT, h: TestFunction, values: Mapping[sp.Symbol, float], config: NumericConfig) -> float:
    if node.operator.multi_index is not None:
        raise UnsupportedGeometry("坐标导数 ∂^β δ 不在径向配对范围内。")
    if node.dimension != h.ambient or len(node.support) != 1:
        raise UnsupportedGeometry("δ 的支撑维数与试验函数不一致。")
    boxes = 0
    for item in node.operator.invariants:
        if item[0] == "box" or item[1] == item[2]:
            boxes += 1
        else:
            raise UnsupportedGeometry("∂_g·∂_h 反项不在单变量配对范围内。")
    scalar = Monomial.build(coeff=node.coeff, mass_power=node.mass_power, log_m_power=node.log_m_power)
    return scalar_factor(scalar, values, config) * h.origin_value(boxes)


def pair_numeric(
    e: Expr,
    h: TestFunction,
    *,
    values: Optional[Mapping[sp.Symbol, float]] = None,
    config: Optional[NumericConfig] = None,
    group: Optional[str] = None,
) -> PairingReport:
    """⟨e, h⟩ = |S^(k-1)|·∫ f(r²)·h(r)·r^(k-1) dr，结构节点分部积分。

    Raises
    ------
    NonIntegrable
        无延拓标记的项在原点不可积（sd ≥ k + h 的消失阶）。
    UnsupportedGeometry
        多变量组、闵氏约定、余项或坐标导数反项。
    """

    settings = config or NumericConfig()
    numbers = dict(values or {})
    area = sphere_area(h.ambient)
    low, high = h.support()
    total, error, nodes, converged = 0.0, 0.0, 0, True
    for term in atoms(normalize(e)):
        if not term.structures:
            function_part: Expr = Mono(mono=term.scalar)
            weight: Weight = h.value
            sign, allowance, marked = 1.0, 0, False
        elif len(term.structures) == 1 and isinstance(term.structures[0], DeltaCT):
            if h.vanishing_order() == math.inf:
                continue
            scalar = scalar_factor(term.scalar, numbers, settings)
            total += scalar * _delta_value(term.structures[0], h, numbers, settings)
            continue
        elif len(term.structures) == 1 and not isinstance(term.structures[0], Remainder):
            if term.scalar.factors:
                raise UnsupportedGeometry("结构节点外的 X 因子无法分部积分。")
            function_part, weight, sign, allowance = _weight(term.structures[0], h)
            sign *= scalar_factor(term.scalar, numbers, settings)
            marked = True
        else:
            raise UnsupportedGeometry("数值配对不支持余项或结构节点的乘积。")
        terms = radial_terms(function_part, group or single_group(function_part), numbers, settings)
        degree = singularity(terms)
        if degree >= h.ambient + h.vanishing_order() + allowance:
            if marked:
                message = f"延拓节点内部的 scaling degree {degree} 不低于 k={h.ambient}。"
            else:
                message = f"scaling degree {degree} 不低于 k={h.ambient}，且没有延拓标记。"
            raise NonIntegrable(message)
        k = h.ambient

        def integrand(r: float, terms=terms, weight=weight) -> float:
            return sum(item(r, settings.mass_scale) for item in terms) * weight(r) * r ** (k - 1)

        def near_origin(t: float, terms=terms, weight=weight) -> float:
            w = weight(math.exp(t))
            if w == 0.0:
                return 0.0
            scale = math.log(abs(w))
            value = sum(item.at_log(t, k, scale, settings.mass_scale) for item in terms)
            return value if w > 0 else -value

        value, abserr, count, ok = integrate_radial(integrand, low, high, settings, near_origin=near_origin)
        total += sign * area * value
        error += abs(sign) * area * abserr
        nodes += count
        converged = converged and ok
    report = PairingReport(value=total, error=error, nodes=nodes, converged=converged)
    LOGGER.debug("Numeric pairing finished", extra={"value": total, "error": error, "nodes": nodes})
    return report


def single_group(e: Expr) -> str:
    groups = set()
    for term in atoms(e):
        groups |= term.scalar.groups()
    if len(groups) > 1:
        message = f"数值配对只支持单变量组，出现了 {sorted(groups)}。"
        raise UnsupportedGeometry(message)
    return next(iter(groups), "x")


def pair_terms(e: Expr, h: TestFunction, **kwargs) -> Dict[str, PairingReport]:
    """逐项配对，键为项的规范文本。"""

    return {render_text(build_atom(term)): pair_numeric(build_atom(term), h, **kwargs) for term in atoms(normalize(e))}


__all__ = [
    "NumericConfig",
    "RadialTerm",
    "radial_terms",
    "singularity",
    "single_group",
    "scalar_factor",
    "LOG_FLOOR",
    "integrate_radial",
    "pair_numeric",
    "pair_terms",
]
