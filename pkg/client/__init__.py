"""HTTP client for the experiment run service."""

from .run_client import AsyncRunClient, RunClient

__all__ = ["RunClient", "AsyncRunClient"]
