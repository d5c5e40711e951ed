"""JSON run configuration shared by the command line and the run service."""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator

from experiments.initial_data import InitialDataSpec
from experiments.presets import DEFAULT_PRESET, Preset, get_preset
from solver.integrate import IntegratorConfig, Model
from solver.params import ModelParams
from solver.spectral_core import Resolution


class RunConfig(BaseModel):
    """Everything a run needs besides the command.

    ``cfg``, ``resolution`` and ``epsilons`` fall back to the preset.
    """

    model_config = ConfigDict(frozen=True)

    params: ModelParams = ModelParams()
    spec: InitialDataSpec = InitialDataSpec()
    cfg: IntegratorConfig | None = None
    preset: str = DEFAULT_PRESET
    resolution: str | None = None
    epsilons: list[float] | None = None
    K: int = Field(4, ge=0)
    model: Model = Model.FULL
    index_range: int = Field(8, ge=1)
    etas: list[float] = [1e-1, 1e-2, 1e-3]
    workers: int = Field(1, ge=1)

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, value: str) -> str:
        get_preset(value)
        return value

    @field_validator("resolution")
    @classmethod
    def _parsable_resolution(cls, value: str | None) -> str | None:
        if value is not None:
            Resolution.parse(value)
        return value

    @property
    def scale(self) -> Preset:
        return get_preset(self.preset)

    def resolved_resolution(self) -> Resolution:
        return Resolution.parse(self.resolution) if self.resolution else self.scale.resolution

    def resolved_epsilons(self) -> list[float]:
        return list(self.epsilons) if self.epsilons else list(self.scale.epsilons)

    def resolved_cfg(self) -> IntegratorConfig:
        if self.cfg is not None:
            return self.cfg
        return IntegratorConfig(dt=self.scale.dt, t_end=self.scale.t_end)


def load_run_config(path: Path) -> RunConfig:
    """Read a run configuration file.

    Raises:
        FileNotFoundError: If the file does not exist
        pydantic.ValidationError: If the contents do not validate
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")
    return RunConfig.model_validate(json.loads(path.read_text()))
