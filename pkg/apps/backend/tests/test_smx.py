"""sm 展开：乘积、导数、性质检查、余项上界与质量极限提取。"""

from __future__ import annotations

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from apps.backend.algebra import equivalent, inv
from apps.backend.algebra.errors import (
    DivergentLimit,
    NotAlmostHomogeneous,
    TruncationTooSmall,
    UnsupportedDerivative,
)
from apps.backend.algebra.expr import DeltaOperator
from apps.backend.models import PropagatorModel, propagator_sm
from apps.backend.smx import (
    SmExpansion,
    odd_rows,
    sm_check,
    sm_derivative,
    sm_extract_from_samples,
    sm_power,
    sm_product,
    sm_remainder_bound,
    sm_scale,
    sm_sum,
    sm_joint_scaling,
    sm_trivial,
)

A0, A1, BIG_A1 = sp.symbols("a0 a1 A1")


@pytest.fixture()
def feynman() -> SmExpansion:
    return propagator_sm(PropagatorModel(), 2)


def _same_table(left: SmExpansion, right: SmExpansion) -> bool:
    keys = set(left.table()) | set(right.table())
    return all(equivalent(left.row(l, p), right.row(l, p)) for l, p in keys)


def test_setting_sun_cube_rows(feynman: SmExpansion) -> None:
    """(Δ^F)³：u₀ = a₀³/X³，u_{2,0} = 3a₀²(a₁L + A₁)/X²，u_{2,1} = 6a₀²a₁/X²。"""

    cube = sm_power(feynman, 3)
    assert cube.degree == 6
    assert cube.order == 2
    assert equivalent(cube.row(0), inv("x", -3, coeff=A0**3))
    expected = inv("x", -2, 1, coeff=3 * A0**2 * A1) + inv("x", -2, coeff=3 * A0**2 * BIG_A1)
    assert equivalent(cube.row(2, 0), expected)
    assert equivalent(cube.row(2, 1), inv("x", -2, coeff=6 * A0**2 * A1))
    assert not odd_rows(cube)


def test_product_is_associative(feynman: SmExpansion) -> None:
    """((Δ)²)·Δ 与 Δ·((Δ)²) 的表相同。"""

    square = sm_product(feynman, feynman)
    assert _same_table(sm_product(square, feynman), sm_product(feynman, square))


def test_product_rejects_order_above_factors(feynman: SmExpansion) -> None:
    with pytest.raises(TruncationTooSmall):
        sm_product(feynman, feynman.truncate(0), order=2)


def test_box_of_cube_row(feynman: SmExpansion) -> None:
    """□ 作用在 u_{2,1} 行上给出 -48a₀²a₁X⁻³，次数加 2。"""

    boxed = sm_derivative(sm_power(feynman, 3), [("box", "x")])
    assert boxed.degree == 8
    assert equivalent(boxed.row(2, 1), inv("x", -3, coeff=-48 * A0**2 * A1))


def test_box_of_propagator_leading_row_vanishes(feynman: SmExpansion) -> None:
    boxed = sm_derivative(feynman, DeltaOperator(invariants=(("box", "x"),)))
    assert boxed.degree == 4
    assert (0, 0) not in boxed.table()


def test_free_index_derivative_is_rejected(feynman: SmExpansion) -> None:
    with pytest.raises(UnsupportedDerivative):
        sm_derivative(feynman, DeltaOperator(multi_index=(1, 0, 0, 0)))
    with pytest.raises(UnsupportedDerivative):
        sm_derivative(feynman, [("dot", "x", "y")])


def test_sm_check_passes_for_model_tables(feynman: SmExpansion) -> None:
    report = sm_check(feynman)
    assert report.passed, report.failures()
    assert report.degree == "2"
    cube = sm_check(sm_power(feynman, 3))
    assert cube.passed, cube.failures()
    assert cube.degree == "6"


def test_sm_check_flags_degree_mismatch() -> None:
    """u_{1,0} = X⁻¹ 在 D = 2 下次数应为 1，检查 C 失败。"""

    broken = SmExpansion.build(degree=2, order=1, table={(0, 0): inv("x", -1), (1, 0): inv("x", -1)})
    report = sm_check(broken)
    assert not report.passed
    assert "C[1,0]" in report.failures()
    assert "C[0,0]" not in report.failures()
    assert "D" in report.failures()


def test_sm_check_remainder_properties() -> None:
    """(D) 比较各行推出的联合次数；(E) 已延拓余项的上界须低于 k。"""

    consistent = SmExpansion.build(degree=2, order=0, table={(0, 0): inv("x", -1)})
    assert "D" not in sm_check(consistent).failures()
    shifted = SmExpansion.build(degree=4, order=0, table={(0, 0): inv("x", -1)})
    assert "D" in sm_check(shifted).failures()
    too_singular = SmExpansion.build(degree=6, order=0, table={(0, 0): inv("x", -3)}, remainder_extended=True)
    assert "E" in sm_check(too_singular).failures()
    extendable = SmExpansion.build(degree=6, order=2, table={(0, 0): inv("x", -3)}, remainder_extended=True)
    assert "E" not in sm_check(extendable).failures()


def test_remainder_bound() -> None:
    cases = {(6, 2): 3, (10, 2): 7, (2, 0): 1}
    for (degree, order), expected in cases.items():
        table = SmExpansion.build(degree=degree, order=order, table={(0, 0): inv("x", -degree // 2)})
        assert sm_remainder_bound(table) == expected


def test_truncate_cannot_raise_order(feynman: SmExpansion) -> None:
    assert feynman.truncate(0).mass_powers() == [0]
    with pytest.raises(TruncationTooSmall):
        feynman.truncate(3)


def test_document_shape(feynman: SmExpansion) -> None:
    document = feynman.to_document()
    assert (document.degree, document.order) == ("2", 2)
    assert [(row.l, row.p) for row in document.rows] == [(0, 0), (2, 0), (2, 1)]
    assert (document.remainder.degree, document.remainder.order) == ("2", 3)
    dumped = document.model_dump(by_alias=True)
    assert (dumped["D"], dumped["L"], dumped["remainder"]["D"]) == ("2", 2, "2")


models = st.builds(
    PropagatorModel,
    kind=st.sampled_from(["Wightman", "Feynman", "Hadamard"]),
    dimension=st.integers(min_value=3, max_value=6),
    truncation=st.integers(min_value=0, max_value=3),
)


@settings(max_examples=120, deadline=None, derandomize=True)
@given(models, models)
def test_product_degree_and_identity(left_model, right_model) -> None:
    """次数相加，乘以平凡展开不变，乘积可交换。"""

    right_model = PropagatorModel(
        kind=right_model.kind,
        dimension=left_model.dimension,
        truncation=right_model.truncation,
    )
    left = propagator_sm(left_model)
    right = propagator_sm(right_model, group="x")
    product = sm_product(left, right)
    assert product.degree == left.degree + right.degree
    assert product.order == min(left.order, right.order)
    assert _same_table(product, sm_product(right, left))
    assert _same_table(sm_product(left, sm_trivial(left.order)), left)


@settings(max_examples=20, deadline=None, derandomize=True)
@given(st.integers(min_value=1, max_value=4))
def test_odd_rows_vanish_in_even_dimension(exponent) -> None:
    """d = 4 中 (Δ^F)ⁿ 没有奇数质量幂。"""

    assert not odd_rows(sm_power(propagator_sm(PropagatorModel()), exponent))


def test_extract_recovers_planted_coefficients() -> None:
    """f(m) = 3 + m²(5 + 7·log m) + m⁴ 的 l = 2 行为 (5, 7)。"""

    def planted(mass):
        return 3 + mass**2 * (5 + 7 * mp.log(mass)) + mass**4

    report = sm_extract_from_samples(planted, 0, 2, 2, lower_rows={(0, 0): 3.0})
    assert report.coefficients["2"] == pytest.approx(0.0, abs=1e-3)
    assert report.coefficients["1"] == pytest.approx(7.0, abs=1e-3)
    assert report.coefficients["0"] == pytest.approx(5.0, abs=1e-3)


def test_extract_leading_row_is_massless_limit() -> None:
    report = sm_extract_from_samples(lambda mass: 3 + mass**2, 0, 0, 0)
    assert report.coefficients["0"] == pytest.approx(3.0, abs=1e-3)


def test_extract_flags_too_small_log_power() -> None:
    """P_start 低于真实对数幂时极限发散。"""

    def planted(mass):
        return mass**2 * mp.log(mass) ** 2

    with pytest.raises(DivergentLimit):
        sm_extract_from_samples(planted, 0, 2, 1, lower_rows={(0, 0): 0.0})


def test_sum_and_scale(feynman: SmExpansion) -> None:
    """Δ + Δ 与 2·Δ 的表相同；次数不同的和被拒绝。"""

    doubled = sm_sum(feynman, feynman)
    assert _same_table(doubled, sm_scale(feynman, 2))
    assert doubled.order == 2
    with pytest.raises(NotAlmostHomogeneous):
        sm_sum(feynman, sm_power(feynman, 2))


def test_joint_scaling_per_mass_power(feynman: SmExpansion) -> None:
    """m² 行中 L 与 2log(m/M) 组合成 log(m²X)，联合标度下精确齐次。"""

    reports = sm_joint_scaling(sm_power(feynman, 3))
    assert sorted(reports) == [0, 2]
    assert all(report.degree == 6 for report in reports.values())
    assert all(report.annihilator_order == 1 for report in reports.values())
