"""FastAPI 路由：示例流水线、展开、正则化乘积与 Schema 导出。"""

from __future__ import annotations

from datetime import datetime, timezone

import pytest
from fastapi.testclient import TestClient

from apps.backend.api.app import create_app
from apps.backend.api.dependencies import get_clock, get_report_recorder
from apps.backend.infra import FixedClock, ReportRecorder


@pytest.fixture()
def client(tmp_path):
    app = create_app()
    app.dependency_overrides[get_report_recorder] = lambda: ReportRecorder(base_path=tmp_path)
    app.dependency_overrides[get_clock] = lambda: FixedClock(start=datetime(2024, 1, 1, tzinfo=timezone.utc))
    with TestClient(app) as test_client:
        yield test_client


def test_list_examples(client) -> None:
    response = client.get("/api/examples")
    assert response.status_code == 200
    assert response.json() == ["setting-sun", "setting-sun-hat", "hadamard-split", "freedom"]


def test_run_freedom_example_writes_report(client, tmp_path) -> None:
    response = client.post("/api/examples/freedom", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["report"]["schema"] == "smx/1"
    assert body["report"]["documents"]["sun"]["degree"] == 6
    assert body["trace"]["pipeline"] == "freedom"
    assert (tmp_path / "examples__freedom.json").exists()


def test_unknown_example_is_404(client, tmp_path) -> None:
    response = client.post("/api/examples/sunrise", json={})
    assert response.status_code == 404
    assert list((tmp_path / "api_examples_sunrise").glob("*_error.json"))


def test_expand_propagator(client) -> None:
    response = client.post("/api/expand", json={"exponent": 1, "with_prefactor": False})
    assert response.status_code == 200
    report = response.json()["report"]
    assert report["passed"] is True
    assert report["documents"]["sm"]["source"]["D"] == "2"


def test_expand_rejects_order_above_truncation(client) -> None:
    response = client.post("/api/expand", json={"order": 3, "model": {"truncation": 2}})
    assert response.status_code == 422


def test_dimreg_bins(client) -> None:
    response = client.post("/api/dimreg", json={"factors": [{"pair": [1, 2]}], "order": 0})
    assert response.status_code == 200
    body = response.json()
    assert list(body["expansion"]["bins"]) == ["0:0:1"]
    assert body["check"]["passed"] is True


def test_engine_errors_map_to_422(client) -> None:
    response = client.post("/api/dimreg", json={"dimension": 5, "factors": [{"pair": [1, 2]}]})
    assert response.status_code == 422
    assert response.json()["detail"]["type"] == "OddDimension"


def test_schema_lookup(client) -> None:
    response = client.get("/api/schema/sm_expansion")
    assert response.status_code == 200
    assert response.json()["version"] == "smx/1"
    assert client.get("/api/schema/feynman_graph").status_code == 404
