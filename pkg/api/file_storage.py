"""Run directory storage for queued experiment runs."""

import uuid
from pathlib import Path

from api.config import STORAGE_BASE_DIR


class RunStorage:
    """Service for creating and locating run directories."""

    def __init__(self, base_dir: Path = STORAGE_BASE_DIR):
        """Initialize the run storage service.

        Args:
            base_dir: Base directory for run directories
        """
        self.base_dir = base_dir
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def create_run_directory(self, run_id: str | None = None) -> str:
        """Create a new run directory with a unique ID.

        Args:
            run_id: Optional run ID. If not provided, generates a new UUID.

        Returns:
            The run ID (UUID string)
        """
        if run_id is None:
            run_id = str(uuid.uuid4())

        run_dir = self.base_dir / run_id
        run_dir.mkdir(parents=True, exist_ok=True)

        return run_id

    def get_run_directory(self, run_id: str) -> Path:
        return self.base_dir / run_id

    def run_exists(self, run_id: str) -> bool:
        """Check if a run directory exists.

        Run IDs containing path separators never match.
        """
        if not run_id or "/" in run_id or "\\" in run_id or run_id in (".", ".."):
            return False
        return self.get_run_directory(run_id).is_dir()


# Global run storage instance
run_storage = RunStorage()
