"""``.stw`` snapshots of full and reduced states.

Layout: the magic line ``STW1\\n``, an 8-byte little-endian header length,
a UTF-8 JSON header, then the coefficient arrays as little-endian
``complex128`` in field order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Union

import numpy as np

from solver.errors import ResolutionMismatch
from solver.params import ModelParams
from solver.spectral_core import ReducedState, Resolution, State

MAGIC = b"STW1\n"
DTYPE = np.dtype("<c16")

AnyState = Union[State, ReducedState]
_KINDS: dict[str, type] = {"state": State, "reduced": ReducedState}


def write_state(
    path: Path,
    state: AnyState,
    t: float = 0.0,
    metadata: dict[str, Any] | None = None,
    params: ModelParams | None = None,
) -> Path:
    """Write one state with its time, the model constants it belongs to and optional metadata."""
    kind = "state" if isinstance(state, State) else "reduced"
    res = state.resolution
    header = {
        "kind": kind,
        "resolution": [res.nx, res.ny, res.nz],
        "fields": list(state.names()),
        "symmetries": [f.symmetry.value for f in state.fields()],
        "t": t,
        "params": None if params is None else params.model_dump(mode="json"),
        "metadata": metadata or {},
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<Q", len(encoded)))
        handle.write(encoded)
        handle.write(np.ascontiguousarray(state.stacked(), dtype=DTYPE).tobytes())
    return path


def read_header(path: Path) -> dict[str, Any]:
    with Path(path).open("rb") as handle:
        return _read_header(handle)


def _read_header(handle) -> dict[str, Any]:
    if handle.read(len(MAGIC)) != MAGIC:
        raise ValueError(f"{handle.name} is not a .stw file")
    (length,) = struct.unpack("<Q", handle.read(8))
    return json.loads(handle.read(length).decode("utf-8"))


def read_state(path: Path) -> tuple[AnyState, dict[str, Any]]:
    """Load a state and its header.

    Raises:
        ValueError: If the file is not a ``.stw`` snapshot
        ResolutionMismatch: If the payload size disagrees with the header
    """
    with Path(path).open("rb") as handle:
        header = _read_header(handle)
        payload = handle.read()
    cls = _KINDS[header["kind"]]
    resolution = Resolution(*header["resolution"])
    count = len(header["fields"])
    expected = count * int(np.prod(resolution.spectral_shape))
    data = np.frombuffer(payload, dtype=DTYPE)
    if data.size != expected:
        raise ResolutionMismatch(f"{path} holds {data.size} coefficients, header implies {expected}")
    stacked = data.reshape(count, *resolution.spectral_shape).astype(np.complex128)
    return cls.from_stacked(resolution, stacked), header


def header_params(header: dict[str, Any]) -> ModelParams | None:
    """Model constants echoed in a snapshot header, if it carries them."""
    data = header.get("params")
    return None if data is None else ModelParams.model_validate(data)
