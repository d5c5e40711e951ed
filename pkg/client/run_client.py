"""Client for submitting experiment runs and retrieving their results."""

import asyncio
import time
from typing import Any

import httpx

TERMINAL_STATUSES = ("completed", "failed")


class RunClient:
    """Client for interacting with the experiment run API."""

    def __init__(self, base_url: str = "http://127.0.0.1:8000", client: httpx.Client | None = None):
        """Initialize the client with the base API URL."""
        self.base_url = base_url
        self.client = client or httpx.Client(timeout=30.0)

    def get_info(self) -> dict[str, Any]:
        """Get API information."""
        response = self.client.get(f"{self.base_url}/info")
        response.raise_for_status()
        return response.json()

    def submit_run(self, command: str, config: dict[str, Any] | None = None) -> str:
        """
        Queue an experiment run.

        Args:
            command: Experiment subcommand (e.g., "audit")
            config: Run configuration as JSON data; server defaults when omitted

        Returns:
            Run ID for tracking the run
        """
        payload: dict[str, Any] = {"command": command}
        if config is not None:
            payload["config"] = config
        response = self.client.post(f"{self.base_url}/runs", json=payload)
        response.raise_for_status()
        return response.json()["run_id"]

    def get_run_status(self, run_id: str) -> dict[str, Any]:
        """Get the status of a run."""
        response = self.client.get(f"{self.base_url}/runs/{run_id}/status")
        response.raise_for_status()
        return response.json()

    def get_run_result(self, run_id: str) -> dict[str, Any]:
        """Get the result of a finished run."""
        response = self.client.get(f"{self.base_url}/runs/{run_id}/result")
        response.raise_for_status()
        return response.json()

    def wait_for_completion(
        self, run_id: str, poll_interval: float = 1.0, max_wait: float = 600.0
    ) -> dict[str, Any]:
        """
        Poll run status until completion or timeout.

        Args:
            run_id: Run ID to poll
            poll_interval: Seconds between polls
            max_wait: Maximum seconds to wait

        Returns:
            Final run status

        Raises:
            TimeoutError: If the run doesn't finish within max_wait
        """
        start_time = time.time()
        while True:
            status = self.get_run_status(run_id)

            if status["status"] in TERMINAL_STATUSES:
                return status

            if time.time() - start_time > max_wait:
                raise TimeoutError(f"Run {run_id} did not complete within {max_wait} seconds")

            time.sleep(poll_interval)

    def close(self):
        """Close the HTTP client."""
        self.client.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


class AsyncRunClient:
    """Async client for interacting with the experiment run API."""

    def __init__(self, base_url: str = "http://127.0.0.1:8000", client: httpx.AsyncClient | None = None):
        """Initialize the async client with the base API URL."""
        self.base_url = base_url
        self.client = client or httpx.AsyncClient(timeout=30.0)

    async def get_info(self) -> dict[str, Any]:
        """Get API information."""
        response = await self.client.get(f"{self.base_url}/info")
        response.raise_for_status()
        return response.json()

    async def submit_run(self, command: str, config: dict[str, Any] | None = None) -> str:
        """Queue an experiment run and return its ID."""
        payload: dict[str, Any] = {"command": command}
        if config is not None:
            payload["config"] = config
        response = await self.client.post(f"{self.base_url}/runs", json=payload)
        response.raise_for_status()
        return response.json()["run_id"]

    async def get_run_status(self, run_id: str) -> dict[str, Any]:
        response = await self.client.get(f"{self.base_url}/runs/{run_id}/status")
        response.raise_for_status()
        return response.json()

    async def get_run_result(self, run_id: str) -> dict[str, Any]:
        response = await self.client.get(f"{self.base_url}/runs/{run_id}/result")
        response.raise_for_status()
        return response.json()

    async def wait_for_completion(
        self, run_id: str, poll_interval: float = 1.0, max_wait: float = 600.0
    ) -> dict[str, Any]:
        """Poll run status until completion or timeout."""
        start_time = time.time()
        while True:
            status = await self.get_run_status(run_id)

            if status["status"] in TERMINAL_STATUSES:
                return status

            if time.time() - start_time > max_wait:
                raise TimeoutError(f"Run {run_id} did not complete within {max_wait} seconds")

            await asyncio.sleep(poll_interval)

    async def close(self):
        """Close the HTTP client."""
        await self.client.aclose()

    async def __aenter__(self):
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        await self.close()
