"""Short runs of the three models from matched initial data."""

import numpy as np
import pytest

from experiments.initial_data import InitialDataSpec, build_initial_data
from solver.dynamics import soundproof_energy, weight_phi, weighted_divergence_residual
from solver.integrate import IntegratorConfig, Model, integrate
from solver.params import ModelParams
from solver.spectral_core import Resolution
from solver.wave_modes import divergence_residual

RES = Resolution.cube(8)
SPEC = InitialDataSpec(seed=3, amplitude=0.05, k_init=2)


@pytest.fixture
def params():
    return ModelParams(epsilon=0.1)


@pytest.mark.parametrize("model", list(Model))
def test_short_run_has_finite_diagnostics(params, model):
    """Test that every model integrates its matched data without blowing up."""
    data = build_initial_data(SPEC, params, RES)
    initial = {
        Model.FULL: data.full,
        Model.SOUNDPROOF: data.soundproof,
        Model.INTERMEDIATE: data.intermediate,
    }[model]
    cfg = IntegratorConfig(dt=0.005, t_end=0.03, sample_stride=2)

    trajectory = integrate(model, initial, cfg, params)

    assert trajectory.times[-1] == pytest.approx(0.03)
    for name, values in trajectory.diagnostics.items():
        assert np.all(np.isfinite(values)), name
    assert trajectory.final_state.norm() < 10 * initial.norm()


def test_reduced_models_keep_their_constraints(params):
    data = build_initial_data(SPEC, params, RES)
    cfg = IntegratorConfig(dt=0.005, t_end=0.03)
    phi = weight_phi(params, RES.nz)

    soundproof = integrate(Model.SOUNDPROOF, data.soundproof, cfg, params).final_state
    intermediate = integrate(Model.INTERMEDIATE, data.intermediate, cfg, params).final_state

    assert divergence_residual(*soundproof.velocity()) <= 1e-8
    assert weighted_divergence_residual(*intermediate.velocity(), phi) <= 1e-8


def test_soundproof_energy_is_nearly_conserved():
    """Test that a profile-free soundproof run keeps its energy."""
    params = ModelParams(epsilon=0.1).linear_only()
    data = build_initial_data(SPEC, params, RES)
    cfg = IntegratorConfig(dt=0.005, t_end=0.05)

    final = integrate(Model.SOUNDPROOF, data.soundproof, cfg, params).final_state

    start = soundproof_energy(data.soundproof, params)
    assert soundproof_energy(final, params) == pytest.approx(start, rel=0.05)
