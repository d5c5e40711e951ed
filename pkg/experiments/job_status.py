"""Run status bookkeeping for queued experiment runs."""

import json
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any

REQUEST_FILE = "request.json"
STATUS_FILE = "status.json"
RESULT_FILE = "completed_run.json"


class RunStatus(str, Enum):
    """Status of a queued run."""

    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


def write_run_request(run_dir: Path, command: str, config: dict[str, Any]) -> None:
    """Write the command and run configuration a worker will execute.

    Args:
        run_dir: Path to the run directory
        command: Experiment subcommand (e.g., "audit")
        config: Run configuration as plain JSON data
    """
    request = {
        "command": command,
        "config": config,
        "created_at": datetime.utcnow().isoformat(),
    }
    (run_dir / REQUEST_FILE).write_text(json.dumps(request, indent=2))


def read_run_request(run_dir: Path) -> dict:
    request_file = run_dir / REQUEST_FILE
    if not request_file.exists():
        return {}
    return json.loads(request_file.read_text())


def write_run_status(run_dir: Path, status: RunStatus, error: str | None = None) -> None:
    """Write run status to the status file.

    Args:
        run_dir: Path to the run directory
        status: Current status of the run
        error: Optional error message if status is FAILED
    """
    status_data = {
        "status": status.value,
        "updated_at": datetime.utcnow().isoformat(),
    }
    if error:
        status_data["error"] = error
    (run_dir / STATUS_FILE).write_text(json.dumps(status_data, indent=2))


def read_run_status(run_dir: Path) -> dict:
    """Read run status, treating a missing file as pending."""
    status_file = run_dir / STATUS_FILE
    if not status_file.exists():
        return {"status": RunStatus.PENDING.value}
    return json.loads(status_file.read_text())


def is_run_completed(run_dir: Path) -> bool:
    return (run_dir / RESULT_FILE).exists()
