"""数值验证套件。"""

from __future__ import annotations

import pytest

from apps.backend.compat import canonical_json
from apps.backend.services import SUITES, VerifyConfig, run_verification


def test_extract_suite_recovers_planted_row() -> None:
    report = run_verification("extract")
    assert report.passed, report.failures()
    assert report.pipeline == "verify.extract"
    assert "planted" in report.documents["extract"]


def test_massless_limit_suite_is_seeded() -> None:
    first = run_verification("massless-limit", VerifyConfig(seed=3))
    second = run_verification("massless-limit", VerifyConfig(seed=3))
    assert first.passed, first.failures()
    assert canonical_json(first) == canonical_json(second)


def test_unknown_suite_is_rejected() -> None:
    assert "oracle" in SUITES
    with pytest.raises(KeyError):
        run_verification("monte-carlo")


@pytest.mark.parametrize("suite", SUITES)
def test_every_suite_passes(suite: str) -> None:
    report = run_verification(suite)
    assert report.passed, report.failures()
    assert report.pipeline == f"verify.{suite}"
    assert suite in report.documents


def test_direct_limit_suite_flags_borderline_term() -> None:
    documents = run_verification("direct-limit").documents["direct-limit"]
    assert documents["log/X"]["converged"] is True
    assert documents["X^-2"]["converged"] is False


def test_scaling_fit_suite_degrees() -> None:
    documents = run_verification("scaling-fit").documents["scaling-fit"]
    assert documents["log"]["degree"] == 1
    assert documents["plain"]["degree"] == 0
    assert documents["log"]["residual"] < 1e-8
