"""欧氏数值层：试验函数、径向配对、截断极限、标度拟合与 m↓0 检查。"""

from __future__ import annotations

import math

import pytest
import sympy as sp

from apps.backend.algebra import inv
from apps.backend.algebra.errors import FitFailure, NoConvergence, NonIntegrable
from apps.backend.dimreg import LineIndexing, RegFactor, coefficient_symbols, reg_product_sm
from apps.backend.extension import ZETA, diff_renorm_extend, regularized_extend
from apps.backend.numeric import (
    NumericConfig,
    TestFunction,
    cutoff,
    direct_limit_check,
    evaluate,
    massless_part,
    pair_numeric,
    reg_massless_limit_check,
    restriction_oracle,
    scaling_fit,
    sphere_area,
)
from apps.backend.smx import ExtractionConfig


def _gauss() -> TestFunction:
    return TestFunction(family="gauss", width=1.0)


def test_cutoff_profile() -> None:
    assert cutoff(0.5) == 0.0
    assert cutoff(3.0) == 1.0
    assert cutoff(1.5) == pytest.approx(0.5)


def test_sphere_area() -> None:
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)
    assert sphere_area(2) == pytest.approx(2 * math.pi)


def test_test_function_validation() -> None:
    with pytest.raises(ValueError):
        TestFunction(family="box")
    with pytest.raises(ValueError):
        TestFunction(family="bump", center=0.2, width=0.5)
    with pytest.raises(ValueError):
        TestFunction(polynomial=(0.0,))
    assert _gauss().value(0.0) == pytest.approx(1.0)
    assert TestFunction().value(0.5) == 0.0


def test_config_validation() -> None:
    with pytest.raises(ValueError):
        NumericConfig(tolerance=0)
    with pytest.raises(ValueError):
        NumericConfig(workers=0)
    with pytest.raises(ValueError):
        ExtractionConfig(smallest_mass=2.0)


def test_pairing_of_inverse_square_radius() -> None:
    """⟨X⁻¹, e^(-r²)⟩ = 2π²∫ r e^(-r²) dr = π²。"""

    report = pair_numeric(inv("x", -1), _gauss())
    assert report.converged
    assert report.value == pytest.approx(math.pi**2, rel=1e-8)


def test_pairing_rejects_non_integrable_term() -> None:
    with pytest.raises(NonIntegrable):
        pair_numeric(inv("x", -2), _gauss())


def test_scaling_fit_needs_enough_samples() -> None:
    with pytest.raises(FitFailure):
        scaling_fit(inv("x", -1), _gauss(), sp.Integer(2), rhos=(1.0, 2.0))


def test_oracle_requires_support_away_from_origin() -> None:
    result = diff_renorm_extend(inv("x", -2), 4)
    with pytest.raises(ValueError):
        restriction_oracle(result, inv("x", -2), _gauss())


def test_evaluate_pure_function() -> None:
    a0 = sp.Symbol("a0")
    value = evaluate(inv("x", -1, coeff=a0), {"x": 2.0}, values={a0: 3.0})
    assert float(value) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        evaluate(inv("x", -1, mass_power=2), {"x": 2.0})


def test_massless_limit_matches_leading_bins() -> None:
    indexing = LineIndexing(vertices=2)
    expansion = reg_product_sm([RegFactor(pair=(1, 2)), RegFactor(pair=(1, 2))], indexing, dimension=4, order=2)
    symbols = coefficient_symbols("x12", 2)
    coefficients = {symbol: 1.0 for symbol in symbols["h"] + symbols["c"]}
    assert len(massless_part(expansion).terms) == 1
    check = reg_massless_limit_check(expansion, {"x12": 1.3}, {indexing.zeta((1, 2)): 0.3}, coefficients)
    assert check.name == "1'"
    assert check.passed, check.detail


def test_massless_limit_rejects_large_regulator() -> None:
    indexing = LineIndexing(vertices=2)
    expansion = reg_product_sm([RegFactor(pair=(1, 2)), RegFactor(pair=(1, 2))], indexing, dimension=4, order=2)
    with pytest.raises(ValueError):
        reg_massless_limit_check(expansion, {"x12": 1.0}, {indexing.zeta((1, 2)): 0.6}, {})


def test_direct_limit_converges_below_ambient_dimension() -> None:
    """sd < k 的 log/X 截断序列收敛；sd = k 的 X⁻² 在 strict 下报错。"""

    report = direct_limit_check(inv("x", -1, 1), _gauss())
    assert report.converged
    assert [sample.rho for sample in report.samples] == sorted(sample.rho for sample in report.samples)
    with pytest.raises(NoConvergence):
        direct_limit_check(inv("x", -2), _gauss(), strict=True)
    with pytest.raises(ValueError):
        direct_limit_check(inv("x", -1), _gauss(), rhos=(1.0,))


def test_scaling_fit_of_homogeneous_term() -> None:
    """X⁻¹ 在 k = 4 精确齐次：ρ^(D-k)⟨X⁻¹, h(·/ρ)⟩ 恒为 π²。"""

    report = scaling_fit(inv("x", -1), _gauss(), sp.Integer(2))
    assert report.degree == 0
    assert report.residual < 1e-8
    assert report.coefficients[0] == pytest.approx(math.pi**2, rel=1e-8)


def test_gauss_profile_vanishes_beyond_cutoff() -> None:
    h = _gauss()
    _, high = h.support()
    assert math.isfinite(high)
    assert h.derivative(1e6, 4) == 0.0
    assert h.laplacian(high * 2) == 0.0


def test_pairing_with_moment_division_near_origin() -> None:
    """MomentDiv 内部允许 sd ≥ k；原点段按对数求值不溢出。"""

    result = regularized_extend(inv("x", -2), ambient=4)
    report = pair_numeric(result.extended, _gauss(), values={ZETA: 0.1})
    assert report.converged
    assert math.isfinite(report.value)
