"""延拓：直接延拓、微分重整化、矩方法、Laurent 展开与整表延拓。"""

from __future__ import annotations

import pytest
import sympy as sp

from apps.backend.algebra import equivalent, inv
from apps.backend.algebra.errors import DivergentDirect, ResonantDegree, TruncationTooSmall
from apps.backend.algebra.expr import MetricConvention
from apps.backend.extension import (
    ELL,
    ETA,
    ZETA,
    EngineConfig,
    coefficient_series,
    counterterm_basis,
    diff_renorm_extend,
    differs_by_local_terms,
    direct_extend,
    extend_sm,
    extend_sm_detailed,
    extended_remainder,
    invariant_operators,
    laurent_expand,
    minimal_subtract,
    moment_solver,
    ms_brackets,
    regularized_extend,
    regularized_ms_extend,
    rescale_mass_scale,
    threshold,
)
from apps.backend.models import PropagatorModel, propagator_sm
from apps.backend.models.freedom import basis_matches, extension_freedom
from apps.backend.smx import sm_power


@pytest.fixture(scope="module")
def cube():
    return sm_power(propagator_sm(PropagatorModel()), 3)


def _same(left: sp.Expr, right: sp.Expr) -> bool:
    return sp.simplify(left - right) == 0


def test_direct_extension_below_threshold() -> None:
    result = direct_extend(inv("x", -1, 1), 4)
    assert result.method == "direct"
    assert not result.counterterm_basis
    assert result.restricts_to(inv("x", -1, 1))


def test_direct_extension_rejects_borderline_degree() -> None:
    with pytest.raises(DivergentDirect):
        direct_extend(inv("x", -2), 4)


@pytest.mark.parametrize(
    ("source", "constants"),
    [
        (inv("x", -2), 1),
        (inv("x", -2, 1), 1),
        (inv("x", -3), 1),
    ],
)
def test_differential_renormalization_restricts(source, constants) -> None:
    """□ⁿOverline(g) 离开原点重现输入，反项基只含 δ 或 □δ。"""

    result = diff_renorm_extend(source, 4)
    assert result.method == "diffren"
    assert result.restricts_to(source)
    assert len(result.counterterm_basis) == constants
    assert result.counterterm_basis[0].constant == "C0"


def test_differential_renormalization_in_euclidean_metric() -> None:
    euclid = MetricConvention.euclidean(dimension=4)
    result = diff_renorm_extend(inv("x", -3, 1), 4, metric=euclid)
    assert result.restricts_to(inv("x", -3, 1))


def test_differential_renormalization_rejects_mismatched_metric() -> None:
    with pytest.raises(ValueError):
        diff_renorm_extend(inv("x", -2), 4, metric=MetricConvention.minkowski(dimension=6))


def test_moment_solver_two_moments() -> None:
    """N=2, l_min=1, c=0：c₁ = -(2η-1)/η²，c₂ = -1/η²。"""

    solution = moment_solver(2, 1)
    assert _same(solution.coefficients[1], -(2 * ETA - 1) / ETA**2)
    assert _same(solution.coefficients[2], -1 / ETA**2)
    assert solution.certificate() == 0


def test_moment_solver_three_moments() -> None:
    """N=3, l_min=1, c=0：-(3η²-3η+1, 3η-3, 1)/η³。"""

    solution = moment_solver(3, 1)
    expected = {1: 3 * ETA**2 - 3 * ETA + 1, 2: 3 * ETA - 3, 3: sp.Integer(1)}
    for moment, numerator in expected.items():
        assert _same(solution.coefficients[moment], -numerator / ETA**3)


def test_moment_solver_shifted_degree() -> None:
    """N=2, l_min=3, c=2。"""

    solution = moment_solver(2, 3, 2)
    denominator = ETA**2 * (1 + ETA) ** 2 * (2 + ETA) ** 2
    assert _same(solution.coefficients[3], (2 + 2 * ETA - 6 * ETA**2 - 4 * ETA**3) / denominator)
    assert _same(solution.coefficients[4], -(2 + 6 * ETA + 3 * ETA**2) / denominator)


def test_moment_solver_detects_resonance() -> None:
    with pytest.raises(ResonantDegree):
        moment_solver(1, 1, 0, eta=0)


def test_ms_brackets_for_each_row() -> None:
    """η = -4ζ 时 [ζ⁰]c_l(η)e^(ζℓ) 的方括号多项式。"""

    eta = -4 * ZETA
    two = ms_brackets(moment_solver(2, 1).coefficients, eta)
    assert _same(two[1], ELL**2 / 32 + ELL / 2)
    assert _same(two[2], -(ELL**2) / 32)
    three = ms_brackets(moment_solver(3, 1).coefficients, eta)
    assert _same(three[1], ELL**3 / 384 + 3 * ELL**2 / 32 + 3 * ELL / 4)
    assert _same(three[2], -(3 * ELL**3 / 384 + 3 * ELL**2 / 32))
    assert _same(three[3], ELL**3 / 384)
    shifted = ms_brackets(moment_solver(2, 3, 2).coefficients, eta)
    assert _same(shifted[3], sp.Rational(-1, 8) + ELL / 4 + ELL**2 / 64)
    assert _same(shifted[4], sp.Rational(7, 8) - ELL**2 / 64)


def test_coefficient_series() -> None:
    assert coefficient_series(1 / (ZETA**2 * (1 + ZETA)), ZETA, 0) == {-2: 1, -1: -1, 0: 1}
    assert coefficient_series(sp.Integer(3), ZETA, 0) == {0: 3}
    assert coefficient_series(sp.Integer(0), ZETA, 0) == {}


def test_invariant_operators_symmetrize_groups() -> None:
    """两组二阶：(□x + □y) 与 ∂x·∂y 两个轨道。"""

    orbits = invariant_operators(2, ("x", "y"))
    assert [len(orbit) for orbit in orbits] == [2, 1]
    assert invariant_operators(1, ("x",)) == []


def test_counterterm_basis_for_setting_sun_degree() -> None:
    """D=6, k=4：m²δ、m²log(m/M)δ、□δ。"""

    basis = counterterm_basis(6, 4)
    assert [(item.constant, item.mass_power, item.log_m_power, item.order) for item in basis] == [
        ("C0", 2, 0, 0),
        ("C1", 2, 1, 0),
        ("C2", 0, 0, 2),
    ]
    assert counterterm_basis(2, 4) == []


def test_threshold(cube) -> None:
    assert threshold(cube) == 2
    assert threshold(propagator_sm(PropagatorModel())) == -2


def test_extend_setting_sun_table(cube) -> None:
    extension = extend_sm_detailed(cube)
    assert extension.threshold == 2
    assert extension.methods() == {"0,0": "diffren", "2,0": "diffren", "2,1": "diffren"}
    for (l, p), result in extension.results.items():
        assert result.restricts_to(cube.row(l, p))
    constants = [(item.constant, item.mass_power, item.log_m_power) for item in extension.counterterm_basis()]
    assert constants == [("C0", 2, 0), ("C1", 2, 1), ("C2", 0, 0)]
    assert basis_matches(extension, extension_freedom(extension))
    assert extension.table.remainder.extended


def test_extend_requires_enough_rows(cube) -> None:
    with pytest.raises(TruncationTooSmall):
        extend_sm(cube.truncate(1))


def test_minimal_subtraction_path_agrees_off_origin(cube) -> None:
    """单变量组走 MS 时与微分重整化只差支撑在原点的项。"""

    diffren = extend_sm_detailed(cube)
    subtracted = extend_sm_detailed(cube, config=EngineConfig(method="MS"))
    assert set(subtracted.methods().values()) == {"MS"}
    assert subtracted.series[(2, 1)].pole_order == 1
    for key, result in subtracted.results.items():
        assert differs_by_local_terms(result.extended, diffren.results[key].extended, 4)


def test_extended_remainder_collects_upper_rows(cube) -> None:
    extension = extend_sm_detailed(cube)
    lower = extended_remainder(extension, 0)
    assert lower.terms
    with pytest.raises(ValueError):
        extended_remainder(extension, 3)


def test_rescale_mass_scale_shifts_logs() -> None:
    """M₁ = M·e^κ：log(M₁²X) → L + 2κ，log(m/M₁) → log(m/M) - κ。"""

    kappa = sp.Symbol("kappa")
    shifted = rescale_mass_scale(inv("x", -1, 1), kappa)
    assert equivalent(shifted, inv("x", -1, 1) + inv("x", -1, coeff=2 * kappa))
    massive = rescale_mass_scale(inv("x", 0, mass_power=2, log_m_power=1), kappa)
    expected = inv("x", 0, mass_power=2, log_m_power=1) + inv("x", 0, coeff=-kappa, mass_power=2)
    assert equivalent(massive, expected)


def test_laurent_expansion_and_minimal_subtraction() -> None:
    """ζ⁻¹·X^(-1+ζ) = ζ⁻¹X⁻¹ + X⁻¹L + O(ζ)，MS 保留 X⁻¹L。"""

    series = laurent_expand(inv("x", -1 + ZETA, coeff=1 / ZETA))
    assert series.pole_order == 1
    assert equivalent(series.coefficient(-1), inv("x", -1))
    assert equivalent(series.coefficient(0), inv("x", -1, 1))
    assert list(series.principal_part()) == [-1]
    with pytest.raises(TruncationTooSmall):
        series.coefficient(1)
    result = minimal_subtract(series, 4)
    assert result.method == "MS"
    assert result.pole_order == 1
    assert equivalent(result.extended, inv("x", -1, 1))


def test_regularized_extension_of_borderline_power() -> None:
    """X⁻² 在 k = 4：一个矩，单极点，方括号为 ℓ/2，反项 C0·δ。"""

    moment, result, series = regularized_ms_extend(inv("x", -2), ambient=4)
    assert moment.method == "moment"
    assert series.pole_order == 1
    assert result.method == "MS"
    assert _same(result.brackets[1], ELL / 2)
    assert [item.constant for item in result.counterterm_basis] == ["C0"]


def test_regularized_extension_passes_integrable_input_through() -> None:
    moment, result, series = regularized_ms_extend(inv("x", -1), ambient=4)
    assert moment.method == "direct"
    assert result is None and series is None


def test_regularized_moment_extension_of_borderline_term() -> None:
    """X⁻² 在 k = 4：正则化后次数为 4 + η，矩延拓离开原点重现输入。"""

    result = regularized_extend(inv("x", -2), ambient=4)
    assert result.method == "moment"
    assert _same(result.eta, -2 * ZETA)
    assert sorted(result.moment_coefficients) == [1]


def test_regularized_extension_below_threshold_is_direct() -> None:
    assert regularized_extend(inv("x", -1), ambient=4).method == "direct"
