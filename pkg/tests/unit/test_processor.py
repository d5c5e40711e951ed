"""Unit tests for the experiment run processor."""

import json
import subprocess
from pathlib import Path
from types import SimpleNamespace
from unittest.mock import patch

import pytest

from experiments.job_status import (
    RESULT_FILE,
    RunStatus,
    read_run_status,
    write_run_request,
    write_run_status,
)
from experiments.processor import ENTRY_POINT, OUTPUT_DIR, RunProcessor


@pytest.fixture
def processor(tmp_path):
    """Return a RunProcessor with an isolated storage directory."""
    return RunProcessor(storage_dir=tmp_path, timeout=30)


def _queue_run(storage: Path, run_id: str, command: str = "audit", config: dict | None = None) -> Path:
    run_dir = storage / run_id
    run_dir.mkdir()
    write_run_request(run_dir, command, config or {"index_range": 2})
    write_run_status(run_dir, RunStatus.PENDING)
    return run_dir


def _write_outputs(run_dir: Path) -> None:
    output_dir = run_dir / OUTPUT_DIR
    output_dir.mkdir()
    (output_dir / "audit.json").write_text(json.dumps({"passed": True}))
    (output_dir / "gaps.csv").write_text("kx,ky,kz\n1,0,1\n")
    (output_dir / "final.stw").write_bytes(b"STW1\n")


def test_run_experiment_invokes_subprocess(processor: RunProcessor, tmp_path: Path):
    """Test the command line handed to the experiment entry point."""
    run_dir = _queue_run(tmp_path, "run-1")
    completed = SimpleNamespace(stdout="audit passed\n", stderr="", returncode=0)

    with patch("experiments.processor.subprocess.run", return_value=completed) as mocked_run:
        result = processor._run_experiment("run-1", run_dir, "audit", {"index_range": 2})

    cmd = mocked_run.call_args.args[0]
    assert cmd[1:] == [
        str(ENTRY_POINT),
        "audit",
        "--config",
        str(run_dir / "config.json"),
        "--out",
        str(run_dir / OUTPUT_DIR),
    ]
    assert mocked_run.call_args.kwargs["timeout"] == 30
    assert json.loads((run_dir / "config.json").read_text()) == {"index_range": 2}
    assert result["status"] == "success"
    assert result["logs"] == "audit passed\n"
    assert result["metadata"]["exit_code"] == 0


def test_run_experiment_reports_last_stderr_line(processor: RunProcessor, tmp_path: Path):
    run_dir = _queue_run(tmp_path, "run-1")
    failed = SimpleNamespace(
        stdout="", stderr="Traceback...\nerror: NoConvergence: stalled\n\n", returncode=1
    )

    with patch("experiments.processor.subprocess.run", return_value=failed):
        result = processor._run_experiment("run-1", run_dir, "simulate", {})

    assert result["status"] == "error"
    assert result["error"] == "error: NoConvergence: stalled"


def test_run_experiment_timeout(processor: RunProcessor, tmp_path: Path):
    """Test that a run exceeding the timeout is reported as an error."""
    run_dir = _queue_run(tmp_path, "run-1")

    with patch(
        "experiments.processor.subprocess.run",
        side_effect=subprocess.TimeoutExpired(cmd="run_experiments.py", timeout=30),
    ):
        result = processor._run_experiment("run-1", run_dir, "audit", {})

    assert result["status"] == "error"
    assert result["error"] == "Run timed out after 30 seconds"


def test_collect_outputs(processor: RunProcessor, tmp_path: Path):
    """Test that JSON is parsed, CSV kept as text and binary files referenced."""
    run_dir = _queue_run(tmp_path, "run-1")
    _write_outputs(run_dir)

    outputs = processor.collect_outputs(run_dir / OUTPUT_DIR)

    assert outputs["audit.json"] == {"passed": True}
    assert outputs["gaps.csv"].startswith("kx,ky,kz")
    assert outputs["final.stw"]["bytes"] == 5
    assert processor.collect_outputs(tmp_path / "missing") == {}


def test_process_run_success(processor: RunProcessor, tmp_path: Path):
    run_dir = _queue_run(tmp_path, "run-1")
    _write_outputs(run_dir)
    completed = SimpleNamespace(stdout="", stderr="", returncode=0)

    with patch("experiments.processor.subprocess.run", return_value=completed):
        processor.process_run("run-1")

    assert read_run_status(run_dir)["status"] == "completed"
    result = json.loads((run_dir / RESULT_FILE).read_text())
    assert result["outputs"]["audit.json"] == {"passed": True}


def test_process_run_failure_records_error(processor: RunProcessor, tmp_path: Path):
    run_dir = _queue_run(tmp_path, "run-1")
    failed = SimpleNamespace(stdout="", stderr="error: StabilityGuard: dt too large\n", returncode=1)

    with patch("experiments.processor.subprocess.run", return_value=failed):
        processor.process_run("run-1")

    status = read_run_status(run_dir)
    assert status["status"] == "failed"
    assert status["error"] == "error: StabilityGuard: dt too large"


def test_process_run_without_command(processor: RunProcessor, tmp_path: Path):
    """Test that a request without a command fails without running anything."""
    run_dir = tmp_path / "run-1"
    run_dir.mkdir()
    write_run_status(run_dir, RunStatus.PENDING)

    with patch("experiments.processor.subprocess.run") as mocked_run:
        processor.process_run("run-1")

    mocked_run.assert_not_called()
    status = read_run_status(run_dir)
    assert status["status"] == "failed"
    assert "missing its command" in status["error"]


def test_process_run_skips_completed_run(processor: RunProcessor, tmp_path: Path):
    run_dir = _queue_run(tmp_path, "run-1")
    (run_dir / RESULT_FILE).write_text("{}")

    with patch("experiments.processor.subprocess.run") as mocked_run:
        processor.process_run("run-1")

    mocked_run.assert_not_called()


def test_find_pending_runs(processor: RunProcessor, tmp_path: Path):
    """Test that only pending runs without results are picked up."""
    _queue_run(tmp_path, "a-pending")
    done = _queue_run(tmp_path, "b-done")
    (done / RESULT_FILE).write_text("{}")
    busy = _queue_run(tmp_path, "c-busy")
    write_run_status(busy, RunStatus.PROCESSING)
    (tmp_path / "stray.txt").write_text("")

    assert processor.find_pending_runs() == ["a-pending"]


def test_run_once_processes_every_pending_run(processor: RunProcessor, tmp_path: Path):
    _queue_run(tmp_path, "run-1")
    _queue_run(tmp_path, "run-2")
    completed = SimpleNamespace(stdout="", stderr="", returncode=0)

    with patch("experiments.processor.subprocess.run", return_value=completed) as mocked_run:
        processed = processor.run_once()

    assert processed == 2
    assert mocked_run.call_count == 2
    assert processor.find_pending_runs() == []
