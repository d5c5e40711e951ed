"""Experiment run processor.

This service monitors the run storage for queued runs and executes them.
It's designed to run separately from the FastAPI server.
"""

import json
import logging
import subprocess
import sys
import time
from pathlib import Path
from typing import Any

from api.config import EXPERIMENT_TIMEOUT, STORAGE_BASE_DIR
from experiments.job_status import (
    RESULT_FILE,
    RunStatus,
    read_run_request,
    read_run_status,
    write_run_status,
)

logger = logging.getLogger(__name__)

ENTRY_POINT = Path(__file__).resolve().parent.parent / "run_experiments.py"
OUTPUT_DIR = "output"
# Largest text output embedded verbatim in a result
MAX_EMBEDDED_BYTES = 1_000_000


class RunProcessor:
    """Process queued experiment runs."""

    def __init__(self, storage_dir: Path = STORAGE_BASE_DIR, timeout: int = EXPERIMENT_TIMEOUT):
        """Initialize the processor.

        Args:
            storage_dir: Base directory for run storage
            timeout: Seconds allowed per run
        """
        self.storage_dir = storage_dir
        self.timeout = timeout

    def process_run(self, run_id: str) -> None:
        """Process a single run.

        Args:
            run_id: The run ID to process
        """
        run_dir = self.storage_dir / run_id

        if not run_dir.exists():
            print(f"Run directory not found: {run_id}")
            return

        if (run_dir / RESULT_FILE).exists():
            print(f"Run {run_id} already completed")
            return

        write_run_status(run_dir, RunStatus.PROCESSING)
        print(f"Processing run {run_id}...")

        try:
            request = read_run_request(run_dir)
            command = request.get("command")
            if not command:
                raise ValueError("Run request is missing its command")

            result = self._run_experiment(run_id, run_dir, command, request.get("config") or {})
            (run_dir / RESULT_FILE).write_text(json.dumps(result, indent=2))

            if result["status"] == "success":
                write_run_status(run_dir, RunStatus.COMPLETED)
                print(f"Run {run_id} completed successfully")
            else:
                write_run_status(run_dir, RunStatus.FAILED, error=result.get("error"))
                print(f"Run {run_id} failed: {result.get('error')}")

        except Exception as e:
            error_msg = f"Error processing run: {str(e)}"
            print(f"Run {run_id} failed: {error_msg}")
            logger.exception("Run %s failed", run_id)
            write_run_status(run_dir, RunStatus.FAILED, error=error_msg)

    def _run_experiment(
        self, run_id: str, run_dir: Path, command: str, config: dict[str, Any]
    ) -> dict[str, Any]:
        """Run one experiment command in a subprocess.

        Args:
            run_id: The run ID
            run_dir: Path to the run directory
            command: Experiment subcommand
            config: Run configuration written to ``config.json`` for the command

        Returns:
            Result dictionary with the collected outputs
        """
        config_file = run_dir / "config.json"
        config_file.write_text(json.dumps(config, indent=2))
        output_dir = run_dir / OUTPUT_DIR
        cmd = [
            sys.executable,
            str(ENTRY_POINT),
            command,
            "--config",
            str(config_file),
            "--out",
            str(output_dir),
        ]

        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            return {
                "run_id": run_id,
                "status": "error",
                "command": command,
                "error": f"Run timed out after {self.timeout} seconds",
            }

        stderr_lines = [line for line in proc.stderr.splitlines() if line.strip()]
        result: dict[str, Any] = {
            "run_id": run_id,
            "status": "success" if proc.returncode == 0 else "error",
            "command": command,
            "outputs": self.collect_outputs(output_dir),
            "logs": proc.stdout,
            "metadata": {
                "processed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "exit_code": proc.returncode,
            },
        }
        if proc.returncode != 0:
            result["error"] = stderr_lines[-1] if stderr_lines else f"Exit code {proc.returncode}"
        return result

    def collect_outputs(self, output_dir: Path) -> dict[str, Any]:
        """Gather JSON outputs as data and CSV/SVG outputs as text."""
        outputs: dict[str, Any] = {}
        if not output_dir.exists():
            return outputs
        for path in sorted(output_dir.iterdir()):
            if path.suffix == ".json":
                outputs[path.name] = json.loads(path.read_text())
            elif path.suffix in (".csv", ".svg") and path.stat().st_size <= MAX_EMBEDDED_BYTES:
                outputs[path.name] = path.read_text()
            else:
                outputs[path.name] = {"path": str(path), "bytes": path.stat().st_size}
        return outputs

    def find_pending_runs(self) -> list[str]:
        """Find all runs waiting to be processed.

        Returns:
            List of run IDs that are pending
        """
        pending_runs: list[str] = []

        if not self.storage_dir.exists():
            return pending_runs

        for run_dir in sorted(self.storage_dir.iterdir()):
            if not run_dir.is_dir():
                continue
            if (run_dir / RESULT_FILE).exists():
                continue
            if read_run_status(run_dir).get("status") == RunStatus.PENDING.value:
                pending_runs.append(run_dir.name)

        return pending_runs

    def run_once(self) -> int:
        """Process all pending runs once.

        Returns:
            Number of runs processed
        """
        pending_runs = self.find_pending_runs()

        for run_id in pending_runs:
            self.process_run(run_id)

        return len(pending_runs)

    def run_forever(self, poll_interval: int = 5) -> None:
        """Run the processor in a loop, checking for new runs.

        Args:
            poll_interval: Seconds to wait between checks
        """
        print(f"Run processor started, polling every {poll_interval}s")
        print(f"Monitoring: {self.storage_dir}")

        while True:
            try:
                processed = self.run_once()
                if processed > 0:
                    print(f"Processed {processed} run(s)")
            except KeyboardInterrupt:
                print("\nShutting down processor...")
                break
            except Exception as e:
                print(f"Error in processor loop: {e}")

            time.sleep(poll_interval)
