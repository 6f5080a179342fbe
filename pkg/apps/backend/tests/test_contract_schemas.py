"""契约模型：版本字段、一致性校验与 JSONSchema 元数据。"""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from apps.backend.agents import input_digest
from apps.backend.compat import canonical_json, model_dump
from apps.backend.contracts import (
    SCHEMA_VERSION,
    CountertermReport,
    HomogeneityRecord,
    PipelineReport,
    PropertyCheck,
    RemainderDocument,
    SmExpansionDocument,
    SmRowDocument,
)
from apps.backend.contracts.documents import ExprDocument


def _expr(text: str = "a0*X^-1") -> ExprDocument:
    return ExprDocument(tree={"kind": "zero"}, text=text)


def test_versioned_models_carry_schema_field() -> None:
    report = PipelineReport(pipeline="setting-sun", passed=True)
    payload = model_dump(report)
    assert payload["schema"] == SCHEMA_VERSION == "smx/1"
    assert PipelineReport.model_validate(payload) == report


def test_incompatible_version_is_rejected() -> None:
    with pytest.raises(ValidationError):
        PipelineReport.model_validate({"schema": "smx/0", "pipeline": "setting-sun", "passed": True})


def test_passed_must_agree_with_checks() -> None:
    failing = PropertyCheck(name="A", passed=False, detail="D 不一致")
    with pytest.raises(ValueError):
        PipelineReport(pipeline="setting-sun", passed=True, checks=[failing])
    report = PipelineReport(pipeline="setting-sun", passed=False, checks=[failing])
    assert report.failures() == ["A"]


def test_extra_fields_are_forbidden() -> None:
    with pytest.raises(ValidationError):
        PropertyCheck(name="A", passed=True, colour="red")


def test_homogeneity_power_matches_annihilator() -> None:
    assert HomogeneityRecord(degree="6", power=1, with_mass=True, annihilator_order=2).power == 1
    with pytest.raises(ValueError):
        HomogeneityRecord(degree="6", power=0, with_mass=True, annihilator_order=2)


def test_sm_document_requires_sorted_rows_and_remainder_order() -> None:
    rows = [SmRowDocument(l=0, p=0, expr=_expr()), SmRowDocument(l=2, p=1, expr=_expr())]
    document = SmExpansionDocument(
        D="2",
        L=2,
        ambient=4,
        groups=["x"],
        rows=rows,
        remainder=RemainderDocument(D="2", order=3),
    )
    assert model_dump(document)["D"] == "2"
    with pytest.raises(ValueError):
        SmExpansionDocument(
            D="2",
            L=2,
            ambient=4,
            groups=["x"],
            rows=list(reversed(rows)),
            remainder=RemainderDocument(D="2", order=3),
        )
    with pytest.raises(ValueError):
        SmExpansionDocument(D="2", L=2, ambient=4, groups=["x"], rows=rows, remainder=RemainderDocument(D="2", order=2))


def test_json_schema_metadata() -> None:
    schema = CountertermReport.model_json_schema()
    assert schema["$id"].endswith("/counterterm_report.json")
    assert schema["version"] == SCHEMA_VERSION
    assert schema["additionalProperties"] is False


def test_canonical_json_is_sorted_and_stable() -> None:
    report = PipelineReport(pipeline="freedom", passed=True, documents={"b": 0.1, "a": 1})
    text = canonical_json(report)
    assert text == canonical_json(PipelineReport.model_validate(model_dump(report)))
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text


def test_canonical_json_descends_into_containers() -> None:
    """列表与字典中的契约模型同样按别名序列化。"""

    remainder = RemainderDocument(D="2", order=1)
    document = SmExpansionDocument(D="2", L=0, ambient=4, groups=["x"], rows=[], remainder=remainder)
    text = canonical_json({"factors": [document, document], "pair": (remainder,)})
    assert text.count('"D": "2"') == 5
    assert '"L": 0' in text
    assert input_digest([document]) == input_digest([document.model_copy()])
    assert input_digest([document]) != input_digest([remainder])
