"""逐线正则化：线位记账、(p, c, h) 分箱、投影与性质检查。"""

from __future__ import annotations

import pytest
import sympy as sp

from apps.backend.algebra import equivalent, inv
from apps.backend.algebra.errors import DegenerateRegulators, OddDimension
from apps.backend.dimreg import LineIndexing, RegFactor, bin_label, reg_check, reg_product_sm
from apps.backend.dimreg.expansion import reg_derivative, reg_project_coeff, reg_remainder_bound
from apps.backend.dimreg.lines import reg_propagator, reg_terms

Z12, Z13, Z23 = sp.symbols("zeta12 zeta13 zeta23")


def test_line_indexing_for_three_vertices() -> None:
    indexing = LineIndexing(vertices=3)
    assert indexing.size == 3
    assert indexing.pairs() == [(1, 2), (1, 3), (2, 3)]
    assert indexing.group((2, 1)) == "x12"
    assert indexing.zetas() == (Z12, Z13, Z23)
    assert indexing.vector({(1, 3): 2}) == (0, 2, 0)
    assert indexing.dot((1, 0, 2)) == Z12 + 2 * Z23


def test_line_indexing_rejects_bad_input() -> None:
    with pytest.raises(ValueError):
        LineIndexing(vertices=1)
    with pytest.raises(KeyError):
        LineIndexing(vertices=2).group((1, 3))
    with pytest.raises(ValueError):
        LineIndexing(vertices=2).dot((1, 0))


def test_regularized_propagator_terms() -> None:
    """d = 4、截断到 p = 2：三个 h 项与两个 c 项。"""

    terms = reg_terms(4, Z12, 2, "x12")
    assert [(kind, l) for kind, l, _ in terms] == [("h", 0), ("h", 1), ("h", 2), ("c", 0), ("c", 1)]
    with pytest.raises(OddDimension):
        reg_terms(5, Z12, 2)


def test_single_line_bins_and_check() -> None:
    indexing = LineIndexing(vertices=2)
    expansion = reg_product_sm([RegFactor(pair=(1, 2))], indexing, dimension=4, order=2)
    assert expansion.degree == 2
    assert expansion.lines == 1
    assert sorted(expansion.bins) == [
        (0, (0,), (1,)),
        (1, (0,), (1,)),
        (1, (1,), (0,)),
        (2, (0,), (1,)),
        (2, (1,), (0,)),
    ]
    h0 = sp.Symbol("h0_x12")
    assert equivalent(expansion.bin(0, (0,), (1,)), inv("x12", -1 + Z12, coeff=h0))
    report = reg_check(expansion)
    assert report.passed, report.failures()
    assert not report.numeric_limit_checked


def test_two_line_product_passes_checks() -> None:
    indexing = LineIndexing(vertices=2)
    expansion = reg_product_sm([RegFactor(pair=(1, 2)), RegFactor(pair=(1, 2))], indexing, dimension=4, order=2)
    assert expansion.degree == 4
    assert (0, (0,), (2,)) in expansion.bins
    assert all(not any(c) for p, c, _ in expansion.bins if p == 0)
    report = reg_check(expansion)
    assert report.passed, report.failures()


def test_boxes_raise_degree() -> None:
    indexing = LineIndexing(vertices=3)
    expansion = reg_product_sm(
        [RegFactor(pair=(1, 2), boxes=1), RegFactor(pair=(2, 3))],
        indexing,
        dimension=4,
        order=1,
    )
    assert expansion.degree == 6
    assert reg_derivative(expansion, (1, 3)).degree == 8


def test_bracket_degree_and_remainder_bound() -> None:
    indexing = LineIndexing(vertices=2)
    expansion = reg_product_sm([RegFactor(pair=(1, 2))], indexing, dimension=4, order=2)
    assert sp.expand(expansion.bracket_degree((1,), (0,)) - (2 - 2 * Z12)) == 0
    assert sp.expand(expansion.bin_degree((1, (0,), (1,))) - (-2 * Z12)) == 0
    assert sp.expand(reg_remainder_bound(expansion, (1,)) - (-4 - 2 * Z12)) == 0


def test_document_labels() -> None:
    assert bin_label((1, (0, 1, 0), (2, 0, 0))) == "1:0,1,0:2,0,0"
    indexing = LineIndexing(vertices=2)
    document = reg_product_sm([RegFactor(pair=(1, 2))], indexing, order=0).to_document()
    assert document.line_names == ["x12"]
    assert list(document.bins) == ["0:0:1"]


def test_projection_isolates_one_bin() -> None:
    """U = u_a + u_b，(E + D - 2h_b·ζ) 零化 u_b。"""

    zeta_x, zeta_y = sp.symbols("zx zy")
    u_a = inv("x", -1 + zeta_x)
    u_b = inv("y", -1 + zeta_y)
    projected = reg_project_coeff(u_a + u_b, (1, 0), [(0, 1)], 2, 0, (zeta_x, zeta_y))
    assert equivalent(projected, u_a)


def test_projection_rejects_degenerate_regulators() -> None:
    zeta = sp.Symbol("z")
    with pytest.raises(DegenerateRegulators):
        reg_project_coeff(inv("x", -1 + zeta), (1, 0), [(0, 1)], 2, 0, (zeta, zeta))


def test_empty_product_is_rejected() -> None:
    with pytest.raises(ValueError):
        reg_product_sm([], LineIndexing(vertices=2))


def test_regularized_propagator_sum() -> None:
    propagator = reg_propagator(4, Z12, 1, "x12")
    assert len(propagator.terms) == 3
    h0 = sp.Symbol("h0_x12")
    assert any(equivalent(term, inv("x12", -1 + Z12, coeff=h0)) for term in propagator.terms)
