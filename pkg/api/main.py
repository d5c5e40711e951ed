"""FastAPI application for queued experiment runs."""

import json
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from api.catalog import SERVICE_COMMANDS, SUPPORTED_MODELS, SUPPORTED_PRESETS, SUPPORTED_SCHEMES
from api.file_storage import run_storage
from experiments.job_status import (
    RESULT_FILE,
    RunStatus,
    read_run_status,
    write_run_request,
    write_run_status,
)
from experiments.run_config import RunConfig

VERSION = "0.1.0"

app = FastAPI(
    title="Soundproof Spectral Experiments API",
    description="Batch runs of the compressible, intermediate and soundproof flow experiments",
    version=VERSION,
)


class InfoResponse(BaseModel):
    """Response model for the /info endpoint."""

    version: str
    commands: dict[str, str]
    models: list[str]
    schemes: list[str]
    presets: list[str]


@app.get("/info", response_model=InfoResponse)
async def get_info() -> InfoResponse:
    """
    Get application information.

    Returns:
        InfoResponse containing:
        - version: The current application version
        - commands: Run commands with their descriptions
        - models: Integrable models
        - schemes: Time steppers
        - presets: Experiment scales
    """
    return InfoResponse(
        version=VERSION,
        commands=SERVICE_COMMANDS,
        models=SUPPORTED_MODELS,
        schemes=SUPPORTED_SCHEMES,
        presets=SUPPORTED_PRESETS,
    )


class RunRequest(BaseModel):
    """Body of a run submission."""

    command: str
    config: RunConfig = RunConfig()


class RunResponse(BaseModel):
    """Response model for the /runs endpoint."""

    run_id: str
    command: str
    status: str


class RunStatusResponse(BaseModel):
    """Response model for run status endpoint."""

    run_id: str
    status: str
    updated_at: str | None = None
    error: str | None = None


class RunResultResponse(BaseModel):
    """Response model for completed run results."""

    run_id: str
    status: str
    result: dict[str, Any] | None = None
    error: str | None = None


@app.post("/runs", response_model=RunResponse)
async def submit_run(request: RunRequest) -> RunResponse:
    """
    Queue an experiment run.

    Args:
        request: Command and run configuration; the configuration is
            validated on arrival (HTTP 422 when invalid)

    Returns:
        RunResponse with the new run ID

    Raises:
        HTTPException: If the command is not offered by the service
    """
    if request.command not in SERVICE_COMMANDS:
        raise HTTPException(
            status_code=400,
            detail=f"Unsupported command: {request.command}. "
            f"Supported commands: {', '.join(SERVICE_COMMANDS)}",
        )

    run_id = run_storage.create_run_directory()
    run_dir = run_storage.get_run_directory(run_id)
    write_run_request(run_dir, request.command, request.config.model_dump(mode="json"))

    # Mark run as pending for the processor to pick up
    write_run_status(run_dir, RunStatus.PENDING)

    return RunResponse(run_id=run_id, command=request.command, status=RunStatus.PENDING.value)


@app.get(
    "/runs/{run_id}/status",
    response_model=RunStatusResponse,
    summary="Get run status",
    description="Check the status of a queued run",
)
async def get_run_status(run_id: str) -> RunStatusResponse:
    """
    Get the current status of a run.

    Raises:
        HTTPException: If run is not found
    """
    if not run_storage.run_exists(run_id):
        raise HTTPException(status_code=404, detail=f"Run {run_id} not found")

    status_data = read_run_status(run_storage.get_run_directory(run_id))

    return RunStatusResponse(
        run_id=run_id,
        status=status_data.get("status", "pending"),
        updated_at=status_data.get("updated_at"),
        error=status_data.get("error"),
    )


@app.get(
    "/runs/{run_id}/result",
    response_model=RunResultResponse,
    summary="Get run result",
    description="Get the collected outputs of a finished run",
)
async def get_run_result(run_id: str) -> RunResultResponse:
    """
    Get the result of a finished run.

    Returns:
        RunResultResponse with the run outputs, or the error of a failed run

    Raises:
        HTTPException: If run is not found or not yet finished
    """
    if not run_storage.run_exists(run_id):
        raise HTTPException(status_code=404, detail=f"Run {run_id} not found")

    run_dir = run_storage.get_run_directory(run_id)
    status_data = read_run_status(run_dir)
    status = status_data.get("status", "pending")
    result_file = run_dir / RESULT_FILE

    if not result_file.exists():
        if status == RunStatus.FAILED.value:
            return RunResultResponse(
                run_id=run_id,
                status=status,
                error=status_data.get("error", "Run failed"),
            )
        raise HTTPException(
            status_code=400,
            detail=f"Results are not available yet for run {run_id}. Current status: {status}",
        )

    result_data = json.loads(result_file.read_text())

    return RunResultResponse(
        run_id=run_id,
        status=status,
        result=result_data,
        error=status_data.get("error"),
    )
