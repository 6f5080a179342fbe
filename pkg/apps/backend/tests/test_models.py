"""传播子模型表、两顶点真空期望值与 Hadamard 拆分。"""

from __future__ import annotations

import pytest
import sympy as sp

from apps.backend.algebra import equivalent, inv, is_zero
from apps.backend.algebra.errors import TruncationTooSmall
from apps.backend.models import (
    HBAR,
    LOG_MU,
    PropagatorModel,
    binomial_weights,
    constant_symbols,
    hadamard_split_check,
    model_pair,
    propagator_sm,
    rename_table,
    two_vertex_vev,
    two_vertex_vev_sm,
    vev_prefactor,
)
from apps.backend.models.freedom import renorm_freedom_scan
from apps.backend.smx import SmExpansion, sm_check

A0, A1, BIG_A1 = sp.symbols("a0 a1 A1")


def test_feynman_table_in_four_dimensions() -> None:
    """u₀ = a₀/X，u_{2,0} = a₁L + A₁，u_{2,1} = 2a₁，D = 2，余项阶 3。"""

    table = propagator_sm(PropagatorModel(), 2)
    assert table.degree == 2
    assert table.remainder.order == 3
    assert equivalent(table.row(0), inv("x", -1, coeff=A0))
    assert equivalent(table.row(2, 0), inv("x", 0, 1, coeff=A1) + inv("x", 0, coeff=BIG_A1))
    assert equivalent(table.row(2, 1), inv("x", 0, coeff=2 * A1))


def test_wightman_shares_feynman_table() -> None:
    wightman = propagator_sm(PropagatorModel(kind="Wightman"))
    feynman = propagator_sm(PropagatorModel())
    assert wightman.degree == 2
    assert all(equivalent(wightman.row(l, p), feynman.row(l, p)) for l, p in feynman.table())


def test_hadamard_moves_log_into_constant() -> None:
    """Hadamard(μ) 没有 u_{2,1} 行，log(μ/M) 进入 m 无关的常数。"""

    table = propagator_sm(PropagatorModel(kind="Hadamard"))
    assert (2, 1) not in table.table()
    expected = inv("x", 0, 1, coeff=A1) + inv("x", 0, coeff=BIG_A1 + 2 * A1 * LOG_MU)
    assert equivalent(table.row(2, 0), expected)
    assert sm_check(table).passed


def test_hadamard_difference_is_smooth() -> None:
    hadamard, difference = model_pair(PropagatorModel())
    assert (0, 0) not in difference.table()
    assert equivalent(difference.row(2, 1), inv("x", 0, coeff=2 * A1))
    assert (0, 0) in hadamard.table()


def test_odd_dimension_is_pure_taylor() -> None:
    """d = 3：质量幂逐个出现，没有对数行。"""

    table = propagator_sm(PropagatorModel(dimension=3, truncation=2))
    assert table.degree == 1
    assert sorted(table.table()) == [(0, 0), (1, 0), (2, 0)]
    assert equivalent(table.row(0), inv("x", sp.Rational(-1, 2), coeff=A0))
    assert sm_check(table).passed


def test_higher_dimension_log_rows_start_at_d_minus_two() -> None:
    table = propagator_sm(PropagatorModel(dimension=6, truncation=4))
    assert table.degree == 4
    assert table.log_power(2) == 0
    assert table.log_power(4) == 1
    assert sm_check(table).passed


def test_truncation_bound() -> None:
    with pytest.raises(TruncationTooSmall):
        propagator_sm(PropagatorModel(truncation=2), 4)


def test_invalid_model_parameters() -> None:
    with pytest.raises(ValueError):
        PropagatorModel(kind="Retarded")
    with pytest.raises(ValueError):
        PropagatorModel(dimension=2)


def test_vev_prefactor() -> None:
    """(3,3) → 6ħ³，(2,2) → 2ħ²，(2,3) → 0。"""

    assert vev_prefactor(3, 3) == 6 * HBAR**3
    assert vev_prefactor(2, 2) == 2 * HBAR**2
    assert vev_prefactor(2, 3) == 0
    assert vev_prefactor(3, 3, with_prefactor=False) == 1


def test_two_vertex_vev_table() -> None:
    propagator = propagator_sm(PropagatorModel())
    assert two_vertex_vev_sm(2, 3, propagator) is None
    vev = two_vertex_vev_sm(3, 3, propagator)
    assert vev.degree == 6
    assert equivalent(vev.row(0), inv("x", -3, coeff=6 * HBAR**3 * A0**3))


def test_binomial_weights() -> None:
    assert binomial_weights(3) == {0: 1, 1: 9, 2: 18, 3: 6}
    assert binomial_weights(2) == {0: 1, 1: 4, 2: 2}


def test_hadamard_split_identity_holds() -> None:
    report = hadamard_split_check()
    assert report.passed, report.failures()
    assert sorted(report.terms) == ["j=0", "j=1", "j=2", "j=3"]
    assert report.residual == "0"


def test_hadamard_split_without_prefactors() -> None:
    assert hadamard_split_check(with_prefactor=False).passed


def test_rename_table_prefixes_constants() -> None:
    c0, c1 = sp.symbols("C0 C1")
    source = SmExpansion.build(degree=2, order=0, table={(0, 0): inv("x", -1, coeff=c0 + c1)})
    renamed = rename_table(source)
    assert [symbol.name for symbol in constant_symbols(renamed.row(0), "Cs")] == ["Cs0", "Cs1"]
    assert constant_symbols(renamed.row(0)) == []


def test_two_vertex_vev_expression() -> None:
    """a ≠ b 时为零；a = b = 1 时为 ħ·Δ 的展开函数。"""

    assert is_zero(two_vertex_vev(2, 3, PropagatorModel()))
    single = two_vertex_vev(1, 1, PropagatorModel(), with_prefactor=False)
    assert not is_zero(single)


def test_renorm_freedom_scan_restricts_mass_functions() -> None:
    """D = 6、k = 4：sm 公理把 f1 限制为 log(m/M) 的一次多项式，f2 为常数。"""

    report = renorm_freedom_scan(6, 4)
    assert sorted(report.sm_restriction) == ["f1", "f2"]
    assert report.sm_restriction["f2"] == "C2"
    assert len(report.sd_freedom) == 2
    assert all(item.startswith(("f1(m/M)", "f2(m/M)")) for item in report.sd_freedom)
