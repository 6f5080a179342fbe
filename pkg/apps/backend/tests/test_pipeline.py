"""端到端流水线：setting sun、带帽的 setting sun、Hadamard 分解与自由度扫描。"""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime, timezone
from typing import Dict, Tuple

import pytest
import sympy as sp

from apps.backend.algebra.expr import Expr, Monomial, MomentDiv, Overline, Sum
from apps.backend.algebra.normal import Term, atoms, build_atom, coefficient_map, equivalent, normalize
from apps.backend.compat import canonical_json
from apps.backend.extension import ELL
from apps.backend.extension.tables import EngineConfig, SmExtension
from apps.backend.infra import FixedClock
from apps.backend.services import PIPELINES, PipelineConfig, run_pipeline
from apps.backend.services.pipeline import (
    HAT_GROUPS,
    brackets,
    expand_pipeline,
    extend_pipeline,
    pole_orders,
    setting_sun_hat_pipeline,
    setting_sun_pipeline,
)

START = datetime(2024, 1, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="module")
def hat():
    return setting_sun_hat_pipeline()


def _same(left: sp.Expr, right: sp.Expr) -> bool:
    return sp.simplify(left - right) == 0


def test_setting_sun_pipeline_passes() -> None:
    outcome = setting_sun_pipeline()
    report = outcome.report
    assert report.passed, report.failures()
    assert [stage.name for stage in report.stages] == ["expand", "extend", "freedom"]
    assert sorted(report.documents["ext"]) == ["u0", "u20", "u21"]
    assert report.documents["sm"]["source"]["D"] == "6"
    assert report.documents["freedom"]["sm_restriction"]["f2"] == "C2"
    assert [span.operation for span in outcome.trace.spans][0] == "orchestrate.run"


def test_setting_sun_freedom_couples_log_constant() -> None:
    """f1(m/M) 在 sm 公理下只能是 C0 + C1·log(m/M)。"""

    restriction = setting_sun_pipeline().report.documents["freedom"]["sm_restriction"]
    assert sorted(restriction) == ["f1", "f2"]
    f1 = sp.sympify(restriction["f1"].replace("log(m/M)", "L"))
    assert sp.expand(f1 - (sp.Symbol("C0") + sp.Symbol("C1") * sp.Symbol("L"))) == 0


def test_setting_sun_hat_pole_orders(hat) -> None:
    assert hat.report.passed, hat.report.failures()
    assert pole_orders(hat) == {"v0": 2, "v20": 3, "v21": 2}


def test_setting_sun_hat_brackets(hat) -> None:
    """ℓ = L_x + L_y 下各行的方括号多项式。"""

    v21 = brackets(hat, "v21")
    assert _same(v21[1], ELL**2 / 32 + ELL / 2)
    assert _same(v21[2], -(ELL**2) / 32)
    v20 = brackets(hat, "v20")
    assert _same(v20[1], ELL**3 / 384 + 3 * ELL**2 / 32 + 3 * ELL / 4)
    assert _same(v20[2], -(3 * ELL**3 / 384 + 3 * ELL**2 / 32))
    assert _same(v20[3], ELL**3 / 384)
    v0 = brackets(hat, "v0")
    assert _same(v0[3], sp.Rational(-1, 8) + ELL / 4 + ELL**2 / 64)
    assert _same(v0[4], sp.Rational(7, 8) - ELL**2 / 64)
    with pytest.raises(KeyError):
        brackets(hat, "v99")


def test_setting_sun_hat_documents(hat) -> None:
    documents = hat.report.documents
    assert sorted(documents["ms"]) == ["v0", "v20", "v21"]
    assert documents["ms"]["v20"]["counterterms"] == ["C0"]
    assert documents["ms"]["v21"]["counterterms"] == ["C1"]
    assert documents["ms"]["v0"]["counterterms"] == ["C2", "C3"]
    assert documents["sm"]["source"]["D"] == "10"
    assert documents["freedom"]["sm_restriction"]["f3"] == "C3"
    assert any("Cs" in note for note in hat.report.notes)


def test_hadamard_split_pipeline() -> None:
    report = run_pipeline("hadamard-split").report
    assert report.passed, report.failures()
    assert report.documents["hadamard"]["residual"] == "0"
    assert all(check.name.startswith("hadamard.") for check in report.checks)


def test_freedom_pipeline_documents() -> None:
    documents = run_pipeline("freedom").report.documents
    assert documents["sun"]["degree"] == 6
    assert documents["hat"]["degree"] == 10
    assert documents["hat"]["ambient"] == 8
    assert "f3" in documents["hat"]["sm_restriction"]


def test_unknown_pipeline_is_rejected() -> None:
    assert "setting-sun" in PIPELINES
    with pytest.raises(KeyError):
        run_pipeline("sunrise")


def test_reports_are_deterministic() -> None:
    first = run_pipeline("setting-sun", clock=FixedClock(START))
    second = run_pipeline("setting-sun", clock=FixedClock(START))
    assert canonical_json(first.report) == canonical_json(second.report)
    assert [span.started_at for span in first.trace.spans] == [span.started_at for span in second.trace.spans]


def test_without_prefactor_rows_match_plain_cube() -> None:
    config = PipelineConfig(engine=EngineConfig(with_prefactor=False))
    report = setting_sun_pipeline(config).report
    assert report.passed, report.failures()
    assert any("前因子" in note for note in report.notes)
    with_factor = setting_sun_pipeline().report.documents["sm"]["source"]
    without = report.documents["sm"]["source"]
    assert "hbar" in canonical_json(with_factor)
    assert "hbar" not in canonical_json(without)


def test_expand_and_extend_pipelines() -> None:
    expanded = expand_pipeline(exponent=2)
    assert expanded.report.passed, expanded.report.failures()
    assert expanded.report.documents["sm"]["source"]["D"] == "4"
    extended = extend_pipeline(PipelineConfig(engine=replace(EngineConfig(), method="MS")), exponent=3)
    assert sorted(extended.report.documents["ms"]) == ["u0", "u20", "u21"]
    assert all(document["pole_order"] >= 1 for document in extended.report.documents["ms"].values())
    with pytest.raises(ValueError):
        expand_pipeline(exponent=0)


def _bracket_form(source: Expr, row_brackets: Dict[int, sp.Expr], ambient: int, groups: Tuple[str, ...]) -> Sum:
    """Σ_l MomentDiv_l(Overline(source·[c_l e^(ζℓ)]_ζ⁰))，ℓ 的每次幂落在对应组的 log 上。"""

    logs = [sp.Symbol(f"L_{group}") for group in groups]
    pieces = []
    for order, bracket in sorted(row_brackets.items()):
        poly = sp.Poly(sp.expand(bracket.subs(ELL, sum(logs))), *logs)
        units = []
        for exponents, coeff in poly.terms():
            shift = dict(zip(groups, exponents))
            for term in atoms(source):
                factors = term.scalar.factor_map()
                for group, extra in shift.items():
                    power, log_power = factors.get(group, (0, 0))
                    factors[group] = (power, log_power + extra)
                scalar = Monomial.build(
                    coeff=coeff * term.scalar.coeff,
                    mass_power=term.scalar.mass_power,
                    log_m_power=term.scalar.log_m_power,
                    factors=factors,
                )
                units.append(build_atom(Term(scalar=scalar, structures=term.structures)))
        child = Overline(child=Sum(terms=tuple(units)), ambient=ambient, moment=order)
        pieces.append(MomentDiv(order=order, child=child, ambient=ambient))
    return normalize(Sum(terms=tuple(pieces)))


def _assert_ms_rows_match_brackets(extension: SmExtension, groups: Tuple[str, ...]) -> None:
    assert extension.series
    for key in extension.series:
        result = extension.results[key]
        expected = _bracket_form(extension.source.row(*key), result.brackets, result.ambient, groups)
        emitted = normalize(result.extended)
        assert set(coefficient_map(emitted)) == set(coefficient_map(expected)), key
        assert equivalent(emitted, expected), key


def test_hat_ms_rows_equal_bracket_form(hat) -> None:
    """输出的 MS 表达式逐项等于方括号多项式给出的形式。"""

    _assert_ms_rows_match_brackets(hat.outputs["extend.hat"], HAT_GROUPS)


def test_setting_sun_ms_rows_equal_bracket_form() -> None:
    outcome = extend_pipeline(PipelineConfig(engine=replace(EngineConfig(), method="MS")), exponent=3)
    _assert_ms_rows_match_brackets(outcome.outputs["extend"], ("x",))
