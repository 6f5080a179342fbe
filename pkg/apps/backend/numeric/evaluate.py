"""纯函数表达式在数值点上的 mpmath 求值，以及正则化展开的 m↓0 检查。"""

from __future__ import annotations

import logging
from typing import Dict, Mapping, Optional, Sequence

import sympy as sp
from mpmath import mp

from apps.backend.algebra.errors import UnsupportedForm
from apps.backend.algebra.expr import Expr, Monomial, Sum, rational_part
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.contracts.reports import PropertyCheck
from apps.backend.dimreg.expansion import RegSmExpansion

LOGGER = logging.getLogger(__name__)

DEFAULT_MASSES = (1e-2, 1e-4, 1e-6, 1e-8)


def _mp_number(value: sp.Expr, values: Mapping[sp.Symbol, complex], dps: int):
    substituted = sp.sympify(value).subs(dict(values))
    if substituted.free_symbols:
        message = f"{value} 中的符号 {sorted(map(str, substituted.free_symbols))} 没有给出数值。"
        raise ValueError(message)
    number = sp.N(substituted, dps)
    real, imag = sp.re(number), sp.im(number)
    if imag == 0:
        return mp.mpf(str(real))
    return mp.mpc(str(real), str(imag))


def _split_exponent(exponent: sp.Expr) -> tuple:
    fixed = rational_part(exponent)
    return fixed, sp.expand(exponent - fixed)


def _term_value(
    item: Monomial,
    point: Mapping[str, object],
    values: Mapping[sp.Symbol, complex],
    mass,
    mass_scale,
    dps: int,
):
    value = _mp_number(item.coeff, values, dps)
    if item.mass_power != 0 or item.log_m_power:
        if mass is None:
            raise ValueError("表达式含 m 依赖，需要给出 mass。")
        fixed, rate = _split_exponent(item.mass_power)
        ratio = mass / mass_scale
        value *= mass ** _mp_number(fixed, {}, dps)
        if rate != 0:
            value *= ratio ** _mp_number(rate, values, dps)
        value *= mp.log(ratio) ** item.log_m_power
    for factor in item.factors:
        if factor.group not in point:
            message = f"没有给出变量组 {factor.group} 的 X 值。"
            raise KeyError(message)
        x = mp.mpf(point[factor.group])
        fixed, rate = _split_exponent(factor.power)
        value *= x ** _mp_number(fixed, {}, dps)
        if rate != 0:
            # X^(bζ) 隐含 (M²X)^(bζ)
            value *= (mass_scale**2 * x) ** _mp_number(rate, values, dps)
        value *= mp.log(mass_scale**2 * x) ** factor.log_power
    return value


def evaluate(
    e: Expr,
    point: Mapping[str, float],
    *,
    values: Optional[Mapping[sp.Symbol, complex]] = None,
    mass: Optional[float] = None,
    mass_scale: float = 1.0,
    dps: int = 30,
):
    """在 X_g = point[g]（X > 0）处求值，返回 mpmath 数。

    正则参数可取复数值；ζ 指数的质量与 X 因子按隐含的 M 幂补齐。

    Raises
    ------
    UnsupportedForm
        表达式含结构节点。
    """

    numbers = dict(values or {})
    with mp.workdps(dps):
        total = mp.mpf(0)
        scale = mp.mpf(mass_scale)
        m = None if mass is None else mp.mpf(mass)
        for term in atoms(normalize(e)):
            if term.structures:
                message = "数值求值只支持纯函数项，遇到了结构节点。"
                raise UnsupportedForm(message)
            total += _term_value(term.scalar, point, numbers, m, scale, dps)
        return +total


def massless_part(r: RegSmExpansion) -> Sum:
    """Σ_{|h|=l} u_{0,0,h}：p = 0 且 c = 0 的分箱之和。"""

    pieces = [value for (p, c, _), value in sorted(r.bins.items()) if p == 0 and not any(c)]
    return normalize(Sum(terms=tuple(pieces)))


def reg_massless_limit_check(
    r: RegSmExpansion,
    point: Mapping[str, float],
    zetas: Mapping[sp.Symbol, complex],
    coefficients: Mapping[sp.Symbol, complex],
    *,
    masses: Sequence[float] = DEFAULT_MASSES,
    tolerance: float = 1e-6,
    dps: int = 30,
) -> PropertyCheck:
    """Re ζ < 1/l 时截断展开在 m↓0 下趋于无质量分箱之和，作为性质 1′ 返回。

    逐个 m 计算相对差 |f(m) - f(0)|/|f(0)|，要求单调下降且最后一个低于容差。
    """

    limit = sp.Rational(1, max(r.lines, 1))
    for zeta, value in zetas.items():
        if complex(value).real >= limit:
            message = f"{zeta} = {value} 不满足 Re ζ < 1/{r.lines}。"
            raise ValueError(message)
    numbers: Dict[sp.Symbol, complex] = {**coefficients, **zetas}
    full = r.as_expr()
    target = massless_part(r)
    with mp.workdps(dps):
        reference = evaluate(target, point, values=numbers, dps=dps)
        scale = max(abs(reference), mp.mpf(10) ** (-dps // 2))
        gaps = []
        for mass in sorted(masses, reverse=True):
            value = evaluate(full, point, values=numbers, mass=mass, dps=dps)
            gaps.append(float(abs(value - reference) / scale))
    decreasing = all(later <= earlier for earlier, later in zip(gaps, gaps[1:]))
    passed = decreasing and gaps[-1] < tolerance
    LOGGER.info("Massless limit checked", extra={"passed": passed, "gaps": gaps})
    detail = "" if passed else f"相对差 {[f'{gap:.3e}' for gap in gaps]} 未收敛到 {tolerance:g} 以下。"
    return PropertyCheck(name="1'", passed=passed, detail=detail)


__all__ = ["DEFAULT_MASSES", "evaluate", "massless_part", "reg_massless_limit_check"]
