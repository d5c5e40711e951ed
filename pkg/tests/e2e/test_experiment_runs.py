"""End-to-end tests for queued runs and desk-scale acceptance sweeps."""

from unittest.mock import patch

import numpy as np
import pytest
from fastapi.testclient import TestClient

from api.file_storage import RunStorage
from api.main import app
from experiments.comparisons import experiment_illprepared, experiment_wellprepared
from experiments.initial_data import InitialDataSpec, build_initial_data
from experiments.presets import get_preset
from experiments.processor import RunProcessor
from solver.params import ModelParams
from solver.wave_modes import Branch, decompose, divergence_residual


def test_audit_run_round_trip(tmp_path):
    """Test submitting an audit, processing it and reading its outputs back."""
    storage = RunStorage(tmp_path)
    with patch("api.main.run_storage", storage):
        client = TestClient(app)
        response = client.post(
            "/runs",
            json={"command": "audit", "config": {"index_range": 2, "etas": [0.1, 0.01]}},
        )
        assert response.status_code == 200
        run_id = response.json()["run_id"]

        processed = RunProcessor(storage_dir=tmp_path, timeout=300).run_once()
        assert processed == 1

        status = client.get(f"/runs/{run_id}/status").json()
        assert status["status"] == "completed", status.get("error")

        result = client.get(f"/runs/{run_id}/result").json()["result"]
        assert result["status"] == "success"
        assert result["outputs"]["audit.json"]["passed"] is True
        assert result["outputs"]["gaps.csv"].startswith("kx,ky,kz,eta")


def test_simulate_run_round_trip(tmp_path):
    storage = RunStorage(tmp_path)
    with patch("api.main.run_storage", storage):
        client = TestClient(app)
        config = {"preset": "tiny", "model": "soundproof"}
        run_id = client.post("/runs", json={"command": "simulate", "config": config}).json()["run_id"]

        RunProcessor(storage_dir=tmp_path, timeout=300).run_once()

        result = client.get(f"/runs/{run_id}/result").json()
        assert result["status"] == "completed", result.get("error")
        outputs = result["result"]["outputs"]
        assert outputs["simulate.json"]["model"] == "soundproof"
        assert outputs["trajectory.csv"].startswith("t,energy,div_residual,mf,gw")


DESK = get_preset("desk")


@pytest.mark.slow
def test_desk_initial_data_is_well_prepared():
    """Test acoustic-free data and the divergence constraint at desk resolution."""
    params = ModelParams(epsilon=0.05)
    data = build_initial_data(InitialDataSpec(seed=11), params, DESK.resolution)

    aw = decompose(data.full, params.eta).branch_norm(Branch.AW)
    assert aw <= 1e-10 * data.full.norm()
    assert divergence_residual(*data.soundproof.velocity()) <= 1e-12


@pytest.mark.slow
def test_desk_wellprepared_error_vanishes_with_epsilon():
    table = experiment_wellprepared(
        epsilons=DESK.epsilons, resolution=DESK.resolution, T=DESK.t_end, dt=DESK.dt
    )

    errors = table.column("sup_error")
    assert np.all(np.diff(errors) < 0)
    assert table.fits()["sup_error"].slope >= 0.15


@pytest.mark.slow
def test_desk_illprepared_error_vanishes_with_epsilon():
    table = experiment_illprepared(
        epsilons=DESK.epsilons, K=4, resolution=DESK.resolution, T=DESK.t_end, dt=DESK.dt
    )

    assert table.fits()["sup_error"].slope > 0
