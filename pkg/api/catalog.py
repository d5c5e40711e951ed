"""Commands, models and schemes the run service accepts."""

from experiments.presets import get_preset_names
from solver.integrate import Model, Scheme

# Subcommands a queued run may execute, with a one-line description
SERVICE_COMMANDS = {
    "modes": "Eigenpairs and gaps at one wave index",
    "simulate": "Integrate one model and sample its diagnostics",
    "compare-wellprepared": "Epsilon sweep against the soundproof model, acoustic-free data",
    "compare-illprepared": "Epsilon sweep of truncated slow projections, data with acoustic waves",
    "audit": "Eigenvalue pinching bounds and gap slopes",
}

SUPPORTED_MODELS = [m.value for m in Model]
SUPPORTED_SCHEMES = [s.value for s in Scheme]
SUPPORTED_PRESETS = get_preset_names()
