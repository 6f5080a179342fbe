"""截断极限、log ρ 标度拟合与限制恒等式的数值预言机。"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Mapping, Optional, Sequence, TypeVar

import numpy as np
import sympy as sp
from numpy.polynomial import polynomial as P

from apps.backend.algebra.errors import FitFailure, NoConvergence, NonIntegrable, UnsupportedGeometry
from apps.backend.algebra.expr import Expr, Mono, Overline, Sum
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.contracts.reports import LimitReport, LimitSample, PropertyCheck, ScalingFitReport
from apps.backend.extension.result import ExtensionResult
from apps.backend.numeric.pairing import (
    NumericConfig,
    integrate_radial,
    pair_numeric,
    radial_terms,
    single_group,
    singularity,
)
from apps.backend.numeric.testfunc import TestFunction, sphere_area

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_LIMIT_GRID = tuple(2.0**n for n in range(2, 17))

DEFAULT_FIT_GRID = tuple(2.0**n for n in range(-4, 5))


def cutoff(s: float) -> float:
    """χ(s)：|x| ≤ 1 时为 0，|x| ≥ 2 时为 1，中间光滑过渡。"""

    if s <= 1.0:
        return 0.0
    if s >= 2.0:
        return 1.0
    t = s - 1.0
    rising = math.exp(-1.0 / t)
    falling = math.exp(-1.0 / (1.0 - t))
    return rising / (rising + falling)


def _parallel_map(function: Callable[[float], T], points: Sequence[float], workers: int) -> List[T]:
    if workers <= 1:
        return [function(point) for point in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, points))


def _function_part(e: Expr) -> Expr:
    """去掉直接延拓标记；只接受纯函数与 Overline。"""

    pieces = []
    for term in atoms(normalize(e)):
        if not term.structures:
            pieces.append(Mono(mono=term.scalar))
            continue
        node = term.structures[0]
        if len(term.structures) != 1 or not isinstance(node, Overline) or node.moment or term.scalar.factors:
            raise UnsupportedGeometry("截断极限只接受函数项与无矩的 Overline。")
        for inner in atoms(node.child):
            pieces.append(Mono(mono=inner.scalar.times(term.scalar)))
    return normalize(Sum(terms=tuple(pieces)))


def direct_limit_check(
    e: Expr,
    h: TestFunction,
    rhos: Sequence[float] = DEFAULT_LIMIT_GRID,
    *,
    values: Optional[Mapping[sp.Symbol, float]] = None,
    config: Optional[NumericConfig] = None,
    strict: bool = False,
) -> LimitReport:
    """⟨e, χ_ρ h⟩ 在几何 ρ 网格上的 Cauchy 增量，χ_ρ(x) = χ(ρx)。

    收敛条件：最后一个相对增量低于容差，且增量整体在收缩。

    Raises
    ------
    NoConvergence
        strict=True 且增量不收缩。
    """

    if len(rhos) < 2 or any(rho <= 0 for rho in rhos):
        raise ValueError("ρ 网格至少包含两个正数。")
    settings = config or NumericConfig()
    numbers = dict(values or {})
    function_part = _function_part(e)
    terms = radial_terms(function_part, single_group(function_part), numbers, settings)
    k = h.ambient
    area = sphere_area(k)
    low, high = h.support()

    def pairing(rho: float) -> float:
        def integrand(r: float) -> float:
            profile = sum(item(r, settings.mass_scale) for item in terms)
            return profile * h.value(r) * cutoff(rho * r) * r ** (k - 1)

        total = 0.0
        inner, outer = max(low, 1.0 / rho), max(low, 2.0 / rho)
        if outer > inner:
            value, _, _, _ = integrate_radial(integrand, inner, min(outer, high), settings)
            total += value
        if high > outer:
            value, _, _, _ = integrate_radial(integrand, outer, high, settings)
            total += value
        return area * total

    ordered = sorted(rhos)
    values_at = _parallel_map(pairing, ordered, settings.workers)
    samples: List[LimitSample] = []
    increments: List[float] = []
    for index, (rho, value) in enumerate(zip(ordered, values_at)):
        increment = None
        if index:
            scale = max(abs(value), abs(values_at[index - 1]), 1e-300)
            increment = abs(value - values_at[index - 1]) / scale
            increments.append(increment)
        samples.append(LimitSample(rho=rho, value=value, increment=increment))
    contracting = increments[-1] <= increments[0] or len(increments) == 1
    converged = increments[-1] < settings.tolerance and contracting
    report = LimitReport(limit=values_at[-1], converged=converged, tolerance=settings.tolerance, samples=samples)
    if converged and increments[-1] > settings.tolerance / 10:
        LOGGER.warning("Direct limit barely within tolerance", extra={"increment": increments[-1]})
    LOGGER.info(
        "Direct limit checked",
        extra={"converged": converged, "increment": increments[-1], "sd": singularity(terms)},
    )
    if strict and not converged:
        message = f"ρ = {ordered[-1]:g} 时相对增量 {increments[-1]:.3e} 未低于容差 {settings.tolerance:g}。"
        raise NoConvergence(message)
    return report


def scaling_fit(
    e: Expr,
    h: TestFunction,
    expected_degree: sp.Expr,
    rhos: Sequence[float] = DEFAULT_FIT_GRID,
    *,
    tolerance: float = 1e-8,
    max_degree: int = 4,
    values: Optional[Mapping[sp.Symbol, float]] = None,
    config: Optional[NumericConfig] = None,
) -> ScalingFitReport:
    """把 ρ^(D-k)·⟨e, h(·/ρ)⟩ 拟合为 log ρ 的多项式，返回残差低于容差的最低次数。

    Raises
    ------
    FitFailure
        直到 max_degree 残差仍超过容差，或样本点不足。
    """

    settings = config or NumericConfig()
    degree = float(sp.sympify(expected_degree))
    ordered = sorted(rhos)
    if len(ordered) < max_degree + 2:
        message = f"{len(ordered)} 个样本点不足以拟合到 {max_degree} 次。"
        raise FitFailure(message)

    def sample(rho: float) -> float:
        report = pair_numeric(e, h.scaled(rho), values=values, config=settings)
        return rho ** (degree - h.ambient) * report.value

    samples = np.array(_parallel_map(sample, ordered, settings.workers))
    logs = np.log(np.array(ordered))
    magnitude = max(float(np.max(np.abs(samples))), 1e-300)
    residual = math.inf
    for fit_degree in range(max_degree + 1):
        coefficients = P.polyfit(logs, samples, fit_degree)
        residual = float(np.max(np.abs(P.polyval(logs, coefficients) - samples))) / magnitude
        LOGGER.debug("Scaling fit attempt", extra={"degree": fit_degree, "residual": residual})
        if residual < tolerance:
            report = ScalingFitReport(
                expected_degree=sp.sstr(expected_degree),
                degree=fit_degree,
                residual=residual,
                coefficients=[float(value) for value in coefficients],
            )
            LOGGER.info("Scaling fit finished", extra={"degree": fit_degree, "residual": residual})
            return report
    message = f"log ρ 多项式拟合到 {max_degree} 次后相对残差 {residual:.3e} 仍超过 {tolerance:g}。"
    raise FitFailure(message)


def restriction_oracle(
    result: ExtensionResult,
    source: Expr,
    h: TestFunction,
    *,
    values: Optional[Mapping[sp.Symbol, float]] = None,
    config: Optional[NumericConfig] = None,
) -> PropertyCheck:
    """离开原点的试验函数上，延拓（含反项）与原式的数值配对一致。"""

    low, _ = h.support()
    if low <= 0:
        raise ValueError("限制恒等式的数值检查需要支撑离开原点的试验函数。")
    settings = config or NumericConfig()
    try:
        extended = pair_numeric(result.with_counterterms(), h, values=values, config=settings)
        original = pair_numeric(source, h, values=values, config=settings)
    except (NonIntegrable, UnsupportedGeometry) as error:
        return PropertyCheck(name="restriction-numeric", passed=False, detail=str(error))
    gap = abs(extended.value - original.value)
    allowed = extended.error + original.error + settings.tolerance * max(abs(original.value), 1.0)
    passed = gap <= allowed
    detail = "" if passed else f"延拓 {extended.value:.17g} 与原式 {original.value:.17g} 相差 {gap:.3e}。"
    LOGGER.debug("Restriction oracle", extra={"gap": gap, "allowed": allowed, "method": result.method})
    return PropertyCheck(name="restriction-numeric", passed=passed, detail=detail)


__all__ = [
    "DEFAULT_LIMIT_GRID",
    "DEFAULT_FIT_GRID",
    "cutoff",
    "direct_limit_check",
    "scaling_fit",
    "restriction_oracle",
]
