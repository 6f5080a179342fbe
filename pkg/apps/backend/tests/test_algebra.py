"""分级项代数：乘法、□、Euler 算子、矩散度、量纲与标度分析。"""

from __future__ import annotations

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.backend.algebra import (
    DeltaOperator,
    FieldMonomial,
    Overline,
    apply_box,
    apply_euler,
    count_pairings,
    delta,
    equivalent,
    homogeneity_analyze,
    inv,
    is_zero,
    mass_dimension,
    mono,
    moment_div_reduce,
    multiply,
    normalize,
    scale_transform,
    scaling_degree,
    shifted_euler,
    submonomials,
)
from apps.backend.algebra.errors import DivergentDirect, InhomogeneousDimension, NotAlmostHomogeneous
from apps.backend.algebra.expr import MetricConvention, Sum, const
from apps.backend.algebra.scaling import RHO
from apps.backend.extension.moments import ZETA

A0 = sp.Symbol("a0")


def test_multiply_adds_exponents() -> None:
    """(a₀/X)² = a₀²X⁻²，质量与 log(m/M) 幂同样相加。"""

    assert equivalent(multiply(inv("x", -1, coeff=A0), inv("x", -1, coeff=A0)), inv("x", -2, coeff=A0**2))
    left = inv("x", -1, mass_power=2, log_m_power=1)
    right = inv("x", -1, mass_power=2)
    assert equivalent(multiply(left, right), inv("x", -2, mass_power=4, log_m_power=1))


def test_box_of_massless_propagator_vanishes() -> None:
    """s=-1、d=4 时 □X⁻¹ 恰为零。"""

    assert is_zero(apply_box("x", inv("x", -1)))


def test_box_master_formula_with_logs() -> None:
    """□(L/(4X)) = X⁻²，□((L²+2L)/(8X)) = L/X²。"""

    single = inv("x", -1, 1, coeff=sp.Rational(1, 4))
    assert equivalent(apply_box("x", single), inv("x", -2))
    double = inv("x", -1, 2, coeff=sp.Rational(1, 8)) + inv("x", -1, 1, coeff=sp.Rational(1, 4))
    assert equivalent(apply_box("x", double), inv("x", -2, 1))


def test_box_sign_follows_metric() -> None:
    """欧氏约定下 □(L/(4X)) 变号。"""

    euclid = MetricConvention.euclidean(dimension=4)
    single = inv("x", -1, 1, coeff=sp.Rational(1, 4))
    assert equivalent(apply_box("x", single, euclid), inv("x", -2, coeff=-1))


def test_euler_annihilates_homogeneous_terms() -> None:
    """(E + 2)(a₀/X) = 0。"""

    assert is_zero(shifted_euler(inv("x", -1, coeff=A0), 2))


def test_euler_with_mass_lowers_log_power() -> None:
    """(E - m∂_m + 2)(m² log(m/M)) = -m²。"""

    result = shifted_euler(mono(mass_power=2, log_m_power=1), 2, with_mass=True)
    assert equivalent(result, mono(coeff=-1, mass_power=2))


def test_euler_annihilates_regularized_hat_row() -> None:
    """(E + 8 + η)² 零化 X⁻³Y⁻¹(M⁴XY)^ζ，η = -4ζ。"""

    row = mono(factors={"x": (-3 + ZETA, 1), "y": (-1 + ZETA, 0)})
    shift = 8 - 4 * ZETA
    once = shifted_euler(row, shift)
    assert not is_zero(once)
    assert is_zero(shifted_euler(once, shift))


def test_moment_div_reduce_eigenvalues() -> None:
    """E e = -(k+η)e 时 l=1 给出 -η e，l=2 给出 (η²-η)e。"""

    e = inv("x", sp.Rational(-3, 2))
    # k = 4，E e = -3e，η = -1
    assert equivalent(moment_div_reduce(1, e, 4), e)
    assert equivalent(moment_div_reduce(2, e, 4), inv("x", sp.Rational(-3, 2), coeff=2))
    assert equivalent(moment_div_reduce(1, const(1), 8), const(8))


def test_mass_dimension_examples() -> None:
    """φ³ → 3，a₀³/X³ → 6，□δ (k=4) → 6。"""

    assert mass_dimension(FieldMonomial.power(3)) == 3
    assert mass_dimension(inv("x", -3, coeff=A0**3)) == 6
    box = DeltaOperator(invariants=(("box", "x"),))
    assert mass_dimension(delta(("x",), 4, operator=box)) == 6


def test_mass_dimension_rejects_inhomogeneous_sum() -> None:
    """不同量纲的两项应报错并列出冲突项。"""

    with pytest.raises(InhomogeneousDimension):
        mass_dimension(inv("x", -1) + inv("x", -2))


def test_submonomials_of_phi_squared() -> None:
    """φ² 的子单项式为 (φ², 1, 1)、(φ, φ, 2)、(1, φ², 1)。"""

    result = [(lower.degree(), rest.degree(), factor) for lower, rest, factor in submonomials(FieldMonomial.power(2))]
    assert result == [(2, 0, 1), (1, 1, 2), (0, 2, 1)]
    assert [(lower.degree(), factor) for lower, _, factor in submonomials(FieldMonomial.power(1))] == [(1, 1), (0, 1)]


def test_complete_pairings_reproduce_prefactor() -> None:
    """φ³ 与 φ³ 之间的完全配对数为 6。"""

    assert count_pairings(FieldMonomial.power(3), FieldMonomial.power(3)) == 6


def test_scaling_degree_examples() -> None:
    """log(M²X)/(32X) 的 sd 为 2；□δ 为 k+2；带 ζ 的指数给出 8+η。"""

    assert scaling_degree(inv("x", -1, 1, coeff=sp.Rational(1, 32))) == 2
    box = DeltaOperator(invariants=(("box", "x"),))
    assert scaling_degree(delta(("x",), 4, operator=box)) == 6
    row = mono(factors={"x": (-3 + ZETA, 0), "y": (-1 + ZETA, 0)})
    assert sp.expand(scaling_degree(row) - (8 - 4 * ZETA)) == 0
    assert scaling_degree(Sum()) == -sp.oo


def test_homogeneity_analyze_reports_power() -> None:
    """a₀/X 为 D=2 的齐次项；m² log(m/M) X⁻² 在联合标度下 power 为 1。"""

    plain = homogeneity_analyze(inv("x", -1, coeff=A0))
    assert (plain.degree, plain.power) == (2, 0)
    logged = homogeneity_analyze(inv("x", -2, mass_power=2, log_m_power=1), with_mass=True)
    assert (logged.degree, logged.power, logged.annihilator_order) == (6, 1, 2)


def test_homogeneity_analyze_rejects_mixed_degrees() -> None:
    """次数不同的两项不是几乎齐次的。"""

    with pytest.raises(NotAlmostHomogeneous):
        homogeneity_analyze(inv("x", -1) + inv("x", -2))


def test_overline_rejects_divergent_child() -> None:
    """sd ≥ k 的子节点不能直接延拓，δ 反项不能出现在 Overline 内。"""

    with pytest.raises(DivergentDirect):
        Overline(child=inv("x", -2), ambient=4)
    with pytest.raises(ValueError):
        Overline(child=delta(("x",), 4), ambient=4)


def test_scale_transform_shifts_logs() -> None:
    """L/X 在 x → ρx 下变为 ρ⁻²(L + 2 log ρ)/X。"""

    scaled = scale_transform(inv("x", -1, 1), RHO, with_mass=False)
    expected = inv("x", -1, 1, coeff=RHO**-2) + inv("x", -1, coeff=2 * sp.log(RHO) * RHO**-2)
    assert equivalent(scaled, expected)


monomials = st.builds(
    lambda coeff, power, log_power, group, mass: inv(group, power, log_power, coeff=coeff, mass_power=mass),
    st.integers(min_value=-3, max_value=3).filter(bool),
    st.integers(min_value=-3, max_value=2),
    st.integers(min_value=0, max_value=2),
    st.sampled_from(["x", "y"]),
    st.sampled_from([0, 2]),
)


@settings(max_examples=60, deadline=None, derandomize=True)
@given(st.lists(monomials, min_size=1, max_size=5))
def test_normalize_is_idempotent(items) -> None:
    """normalize(normalize(e)) == normalize(e)。"""

    once = normalize(Sum(terms=tuple(items)))
    assert normalize(once) == once


@settings(max_examples=60, deadline=None, derandomize=True)
@given(
    st.integers(min_value=-3, max_value=2),
    st.integers(min_value=0, max_value=2),
)
def test_euler_box_commutation(power, log_power) -> None:
    """E∘□ = □∘E - 2□。"""

    e = inv("x", power, log_power)
    left = apply_euler(apply_box("x", e))
    right = apply_box("x", apply_euler(e)) - apply_box("x", e) * 2
    assert equivalent(left, right)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(monomials, monomials)
def test_mass_dimension_is_additive(left, right) -> None:
    """mass_dimension(e1·e2) = mass_dimension(e1) + mass_dimension(e2)。"""

    assert mass_dimension(multiply(left, right)) == mass_dimension(left) + mass_dimension(right)
