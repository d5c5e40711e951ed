"""Named experiment scales."""

from dataclasses import dataclass

from solver.spectral_core import Resolution


@dataclass(frozen=True)
class Preset:
    """Resolution and horizon for one experiment scale."""

    name: str
    resolution: Resolution
    t_end: float
    dt: float
    epsilons: tuple[float, ...]


# Map preset names to their experiment scales
PRESETS = {
    "desk": Preset(
        name="desk",
        resolution=Resolution.cube(32),
        t_end=0.5,
        dt=0.0025,
        epsilons=(0.2, 0.1, 0.05, 0.025),
    ),
    "smoke": Preset(
        name="smoke",
        resolution=Resolution.cube(16),
        t_end=0.1,
        dt=0.005,
        epsilons=(0.2, 0.1, 0.05),
    ),
    "tiny": Preset(
        name="tiny",
        resolution=Resolution.cube(8),
        t_end=0.02,
        dt=0.005,
        epsilons=(0.2, 0.1),
    ),
}

DEFAULT_PRESET = "desk"


def get_preset(name: str) -> Preset:
    """Get the experiment scale registered under ``name``.

    Args:
        name: Preset name (e.g., "desk")

    Returns:
        Preset for the name

    Raises:
        ValueError: If the name is not registered
    """
    if name not in PRESETS:
        supported = ", ".join(PRESETS.keys())
        raise ValueError(f"Unknown preset: {name}. Supported presets: {supported}")
    return PRESETS[name]


def get_preset_names() -> list[str]:
    return list(PRESETS.keys())
