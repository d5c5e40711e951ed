"""Configuration for the experiment run service."""

import os
from pathlib import Path

# Base storage directory for queued runs
STORAGE_BASE_DIR = Path(os.getenv("STORAGE_BASE_DIR", "storage")) / "runs"

# Seconds a single run may take before the worker gives up on it
EXPERIMENT_TIMEOUT = int(os.getenv("EXPERIMENT_TIMEOUT", "1800"))

# Ensure storage directory exists
STORAGE_BASE_DIR.mkdir(parents=True, exist_ok=True)
