"""Unit tests for presets and run configuration files."""

import json

import pytest
from pydantic import ValidationError

from experiments.presets import get_preset, get_preset_names
from experiments.run_config import RunConfig, load_run_config
from solver.integrate import IntegratorConfig, Model
from solver.spectral_core import Resolution


def test_get_preset():
    """Test that registered presets resolve to their scales."""
    tiny = get_preset("tiny")
    assert tiny.resolution == Resolution.cube(8)
    assert get_preset("desk").epsilons == (0.2, 0.1, 0.05, 0.025)
    assert get_preset_names() == ["desk", "smoke", "tiny"]


def test_get_unknown_preset():
    with pytest.raises(ValueError, match="Supported presets"):
        get_preset("huge")


def test_run_config_falls_back_to_preset():
    """Test that resolution, epsilons and integrator settings default to the preset."""
    config = RunConfig(preset="smoke")
    assert config.resolved_resolution() == Resolution.cube(16)
    assert config.resolved_epsilons() == [0.2, 0.1, 0.05]
    cfg = config.resolved_cfg()
    assert (cfg.dt, cfg.t_end) == (0.005, 0.1)


def test_run_config_overrides_preset():
    config = RunConfig(
        preset="smoke",
        resolution="32x32x16",
        epsilons=[0.3],
        cfg=IntegratorConfig(dt=0.001, t_end=0.01),
    )
    assert config.resolved_resolution() == Resolution(32, 32, 16)
    assert config.resolved_epsilons() == [0.3]
    assert config.resolved_cfg().dt == 0.001


@pytest.mark.parametrize(
    "data",
    [{"preset": "huge"}, {"resolution": "7"}, {"K": -1}, {"params": {"epsilon": 1.5}}, {"model": "shallow"}],
)
def test_run_config_rejects_invalid_values(data):
    with pytest.raises(ValidationError):
        RunConfig.model_validate(data)


def test_load_run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"preset": "tiny", "model": "soundproof", "params": {"nu": 0.2}}))

    config = load_run_config(path)

    assert config.model is Model.SOUNDPROOF
    assert config.params.nu == 0.2
    assert config.params.mu == pytest.approx(0.6)


def test_load_missing_run_config(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "missing.json")
