"""Unit tests for the compressible versus soundproof comparisons."""

import numpy as np
import pytest

from experiments.comparisons import (
    experiment_illprepared,
    experiment_wellprepared,
    illprepared_metric,
    wellprepared_metric,
)
from experiments.initial_data import InitialDataSpec, build_initial_data
from solver.dynamics import soundproof_pressure
from solver.params import ModelParams
from solver.spectral_core import Resolution
from solver.wave_modes import Branch, lift, project

RES8 = Resolution.cube(8)


@pytest.fixture
def params():
    return ModelParams(epsilon=0.1)


def test_wellprepared_metric_vanishes_on_lifted_soundproof_state(params):
    """Test that a full state built from eps p_sp and the soundproof fields has zero error."""
    data = build_initial_data(InitialDataSpec(), params, RES8)
    pressure = soundproof_pressure(data.soundproof, params).solution * params.epsilon
    full = lift(data.soundproof, pressure)

    assert wellprepared_metric(full, data.soundproof, params) == pytest.approx(0.0, abs=1e-14)
    assert wellprepared_metric(data.full, data.soundproof, params) > 0.0


def test_illprepared_metric_is_blind_to_acoustic_content(params):
    """Test that the squared metric ignores acoustic waves and shrinks with the band."""
    data = build_initial_data(InitialDataSpec().with_acoustic(1.0), params, RES8)
    slow = project(data.full, params.eta, [Branch.MF, Branch.GW])

    reference = illprepared_metric(data.full, data.soundproof, params.eta, 3)

    assert illprepared_metric(slow, data.soundproof, params.eta, 3) == pytest.approx(reference, rel=1e-10)
    assert illprepared_metric(data.full, data.soundproof, params.eta, 1) <= reference


def test_experiment_wellprepared_on_tiny_lattice():
    """Test a two-epsilon sweep of the well-prepared comparison."""
    table = experiment_wellprepared(epsilons=(0.1, 0.2), resolution=RES8, T=0.01, dt=0.005, sample_stride=1)

    assert table.name == "wellprepared"
    np.testing.assert_array_equal(table.epsilons, [0.2, 0.1])
    sup = table.column("sup_error")
    assert np.all(sup >= table.column("final_error"))
    assert np.all(sup >= table.column("initial_error"))
    assert table.predicted["sup_error"] == pytest.approx(0.25)
    assert table.notes["resolution"] == "8x8x8"


def test_experiment_illprepared_on_tiny_lattice():
    table = experiment_illprepared(epsilons=(0.2, 0.1), K=2, resolution=RES8, T=0.01, dt=0.005, sample_stride=1)

    assert table.predicted["sup_error"] == pytest.approx(0.5)
    assert table.notes["sigma"] == pytest.approx(0.25)
    assert np.all(table.column("sup_error") >= 0.0)


def test_experiment_illprepared_rejects_index_at_nyquist():
    with pytest.raises(ValueError):
        experiment_illprepared(epsilons=(0.1,), K=4, resolution=RES8)
