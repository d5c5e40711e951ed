"""Integration tests for the run service endpoints."""

import json
from unittest.mock import patch

import pytest
from fastapi.testclient import TestClient

from api.file_storage import RunStorage
from api.main import VERSION, app
from experiments.job_status import RESULT_FILE, RunStatus, write_run_status


@pytest.fixture
def storage(tmp_path):
    storage = RunStorage(tmp_path)
    with patch("api.main.run_storage", storage):
        yield storage


@pytest.fixture
def client(storage):
    return TestClient(app)


def _submit(client, command="audit", config=None):
    response = client.post("/runs", json={"command": command, "config": config or {"index_range": 2}})
    assert response.status_code == 200
    return response.json()["run_id"]


def test_info_endpoint(client):
    response = client.get("/info")
    assert response.status_code == 200
    assert response.json()["version"] == VERSION
    assert "audit" in response.json()["commands"]


def test_submit_run_queues_request(client, storage):
    """Test that a submission writes the request and a pending status."""
    response = client.post("/runs", json={"command": "audit", "config": {"index_range": 2, "etas": [0.1]}})

    assert response.status_code == 200
    body = response.json()
    assert body["command"] == "audit"
    assert body["status"] == "pending"

    run_dir = storage.get_run_directory(body["run_id"])
    request = json.loads((run_dir / "request.json").read_text())
    assert request["command"] == "audit"
    assert request["config"]["index_range"] == 2
    assert request["config"]["etas"] == [0.1]
    assert json.loads((run_dir / "status.json").read_text())["status"] == "pending"


def test_status_and_result_of_pending_run(client):
    run_id = _submit(client)

    status = client.get(f"/runs/{run_id}/status")
    assert status.status_code == 200
    assert status.json()["status"] == "pending"

    result = client.get(f"/runs/{run_id}/result")
    assert result.status_code == 400
    assert "not available yet" in result.json()["detail"]


def test_unknown_run_is_not_found(client):
    assert client.get("/runs/unknown-run/status").status_code == 404
    assert client.get("/runs/unknown-run/result").status_code == 404


def test_unsupported_command_is_rejected(client):
    """Test that commands reading local files are not offered by the service."""
    response = client.post("/runs", json={"command": "project", "config": {}})
    assert response.status_code == 400
    assert "Supported commands" in response.json()["detail"]


@pytest.mark.parametrize(
    "config",
    [
        {"preset": "huge"},
        {"params": {"epsilon": 2.0}},
        {"resolution": "7"},
        {"K": -1},
    ],
)
def test_invalid_config_is_unprocessable(client, config):
    response = client.post("/runs", json={"command": "simulate", "config": config})
    assert response.status_code == 422


def test_failed_run_reports_error(client, storage):
    run_id = _submit(client)
    write_run_status(storage.get_run_directory(run_id), RunStatus.FAILED, error="error: StabilityGuard: dt")

    status = client.get(f"/runs/{run_id}/status").json()
    assert status["status"] == "failed"
    assert status["error"] == "error: StabilityGuard: dt"

    result = client.get(f"/runs/{run_id}/result")
    assert result.status_code == 200
    assert result.json()["error"] == "error: StabilityGuard: dt"
    assert result.json()["result"] is None


def test_completed_run_returns_result(client, storage):
    run_id = _submit(client)
    run_dir = storage.get_run_directory(run_id)
    payload = {"run_id": run_id, "status": "success", "outputs": {"audit.json": {"passed": True}}}
    (run_dir / RESULT_FILE).write_text(json.dumps(payload))
    write_run_status(run_dir, RunStatus.COMPLETED)

    response = client.get(f"/runs/{run_id}/result")

    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "completed"
    assert body["result"]["outputs"]["audit.json"]["passed"] is True
