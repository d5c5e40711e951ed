"""Random mode superpositions used as matched initial data."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from solver.dynamics import pseudo_incompressible_project, weight_phi
from solver.params import ModelParams
from solver.spectral_core import (
    ReducedState,
    Resolution,
    State,
    band_mask,
    hermitian_part,
    inner_product,
    integer_wavenumbers,
)
from solver.wave_modes import Branch, leray_project_state, mode_basis, project, reduce_dimension

logger = logging.getLogger(__name__)


class BranchWeights(BaseModel):
    model_config = ConfigDict(frozen=True)

    mf: float = Field(1.0, ge=0.0)
    gw: float = Field(1.0, ge=0.0)
    aw: float = Field(0.0, ge=0.0)

    def weight(self, branch: Branch) -> float:
        return getattr(self, branch.value)


class InitialDataSpec(BaseModel):
    """Seeded recipe for a random superposition of eigenmodes.

    Each admissible mode with ``max(|kx|, |ky|, kz) <= k_init`` gets a complex
    Gaussian amplitude scaled by its branch weight and by
    ``(1 + |k|) ** -decay``; the real part of the sum is then rescaled to L2
    norm ``amplitude``.
    """

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    amplitude: float = Field(0.1, ge=0.0)
    decay: float = Field(2.0, ge=0.0)
    weights: BranchWeights = BranchWeights()
    k_init: int = Field(4, ge=0)

    @property
    def well_prepared(self) -> bool:
        return self.weights.aw == 0.0

    def with_acoustic(self, weight: float) -> InitialDataSpec:
        return self.model_copy(update={"weights": self.weights.model_copy(update={"aw": weight})})


@dataclass(frozen=True, eq=False)
class InitialData:
    """Matched data for the three models."""

    full: State
    soundproof: ReducedState
    intermediate: ReducedState


def random_mode_superposition(spec: InitialDataSpec, params: ModelParams, resolution: Resolution) -> State:
    """Branch-weighted real superposition of perturbed eigenmodes."""
    rng = np.random.default_rng(spec.seed)
    basis = mode_basis(resolution, params.eta)
    kx, ky, kz = integer_wavenumbers(resolution)
    envelope = (1.0 + np.sqrt(kx**2 + ky**2 + kz**2)) ** (-spec.decay)
    band = band_mask(resolution, spec.k_init)
    shape = resolution.spectral_shape
    stacked = np.zeros((5, *shape), np.complex128)
    for fam in basis.families:
        # draw for every family so a zero weight does not shift the stream
        draw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        weight = spec.weights.weight(fam.kind.branch)
        if weight == 0.0:
            continue
        amplitude = np.where(fam.mask & band, weight * envelope * draw, 0)
        stacked += fam.vectors * amplitude
    state = State.from_stacked(resolution, stacked).map(lambda f: f.with_coeffs(hermitian_part(f.coeffs)))
    norm = np.sqrt(inner_product(state, state))
    if norm == 0.0:
        return state
    return state * (spec.amplitude / norm)


def soundproof_data(full: State, params: ModelParams) -> ReducedState:
    """Leray projection of the reduced mean-flow and internal-wave content."""
    slow = project(full, params.eta, [Branch.MF, Branch.GW])
    return leray_project_state(reduce_dimension(slow))


def build_initial_data(spec: InitialDataSpec, params: ModelParams, resolution: Resolution) -> InitialData:
    """Deterministic matched initial data for one epsilon."""
    full = random_mode_superposition(spec, params, resolution)
    soundproof = soundproof_data(full, params)
    phi = weight_phi(params, resolution.nz)
    intermediate = soundproof.with_velocity(*pseudo_incompressible_project(*soundproof.velocity(), phi))
    logger.debug(
        "Initial data at epsilon=%.4g: |U|=%.3e |S|=%.3e",
        params.epsilon,
        full.norm(),
        soundproof.norm(),
    )
    return InitialData(full, soundproof, intermediate)
