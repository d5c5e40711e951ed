"""Time stepping for the compressible, intermediate and soundproof models.

The default scheme is a Lawson-type exponential RK4: the stiff fast operator
is propagated exactly through the mode tables and only the remainder is
handled by the Runge-Kutta stages, so the step size is limited by advection
and not by ``1 / epsilon``.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from solver.dynamics import (
    energy,
    fast_linear_part,
    pseudo_incompressible_project,
    rhs_full,
    rhs_intermediate,
    rhs_soundproof,
    soundproof_energy,
    weight_phi,
    weighted_divergence_residual,
)
from solver.errors import DomainError, StabilityGuard
from solver.params import ModelParams
from solver.spectral_core import ReducedState, State, dealias_mask
from solver.wave_modes import (
    Branch,
    Eta,
    apply_soundproof_operator,
    decompose,
    decompose_soundproof,
    divergence_residual,
    leray_project_state,
    max_acoustic_frequency,
    reconstruct,
    require_divergence_free,
)

logger = logging.getLogger(__name__)

AnyState = Union[State, ReducedState]
Observer = Callable[[float, AnyState], None]

CLASSICAL_CFL = 0.5


class Scheme(str, Enum):
    EXPONENTIAL_RK4 = "exponential_rk4"
    CLASSICAL_RK4 = "classical_rk4"


class Model(str, Enum):
    FULL = "full"
    INTERMEDIATE = "intermediate"
    SOUNDPROOF = "soundproof"

    @property
    def reduced(self) -> bool:
        return self is not Model.FULL


class IntegratorConfig(BaseModel):
    """Step size, horizon and sampling of a run.

    States are sampled every ``sample_stride`` steps (and at the final
    time). ``keep_states`` stores every sample; ``snapshot_stride`` stores
    every n-th sample only.
    """

    model_config = ConfigDict(frozen=True)

    scheme: Scheme = Scheme.EXPONENTIAL_RK4
    dt: float = Field(0.0025, gt=0.0)
    t_end: float = Field(0.5, ge=0.0)
    sample_stride: int = Field(10, ge=1)
    keep_states: bool = False
    snapshot_stride: int | None = Field(None, ge=1)

    @property
    def num_steps(self) -> int:
        return max(0, math.ceil(self.t_end / self.dt - 1e-9))

    def step_sizes(self) -> list[float]:
        """Uniform steps of ``dt``, the last one shortened to land on ``t_end``."""
        n = self.num_steps
        sizes = [self.dt] * n
        if n:
            sizes[-1] = self.t_end - (n - 1) * self.dt
        return sizes


@dataclass
class Trajectory:
    """Sampled run of one model."""

    model: Model
    times: list[float] = field(default_factory=list)
    diagnostics: dict[str, list[float]] = field(default_factory=dict)
    states: list[AnyState] = field(default_factory=list)
    state_times: list[float] = field(default_factory=list)
    final_state: AnyState | None = None

    def __len__(self) -> int:
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name])

    def record(self, t: float, values: dict[str, float]) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"Sample time {t} does not follow {self.times[-1]}")
        self.times.append(t)
        for name, value in values.items():
            self.diagnostics.setdefault(name, []).append(value)

    def to_csv(self, path: Path) -> Path:
        """Write ``t`` and every diagnostic column."""
        names = list(self.diagnostics)
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["t", *names])
            for i, t in enumerate(self.times):
                writer.writerow([repr(t), *(repr(self.diagnostics[name][i]) for name in names)])
        return path


# --- exact linear propagators -----------------------------------------------


def linear_propagate(state: State, t: float, eta: Eta | float) -> State:
    """Exact solution operator of ``d/dt + L`` over fast time ``t``.

    Content outside the mode set (Nyquist planes) is left untouched.
    """
    dec = decompose(state, eta)
    return state + (reconstruct(dec.evolve(t)) - reconstruct(dec))


def _soundproof_propagate(state: ReducedState, fast_time: float, eta: float) -> ReducedState:
    dec = decompose_soundproof(state, eta)
    return state + (reconstruct(dec.evolve(fast_time)) - reconstruct(dec))


def soundproof_linear_propagate(state: ReducedState, t: float, params: ModelParams) -> ReducedState:
    """Exact linear soundproof evolution over physical time ``t``.

    Phases are ``exp(-i omega_sp t / epsilon)``; the gradient part of the
    velocity is carried unchanged.

    Raises:
        DivergenceViolation: If the velocity is not divergence free
    """
    require_divergence_free(state)
    return _soundproof_propagate(state, t / params.epsilon, params.eta)


def filter_state(state: State, t: float, eta: Eta) -> State:
    """Remove the fast phases accumulated up to physical time ``t``.

    Raises:
        DomainError: If ``eta`` does not carry ``epsilon``
    """
    if eta.epsilon is None:
        raise DomainError("Filtering needs eta built from epsilon and nu")
    return linear_propagate(state, -t / eta.epsilon, eta)


# --- steppers ---------------------------------------------------------------


def _rhs(model: Model, params: ModelParams) -> Callable[[AnyState], AnyState]:
    if model is Model.FULL:
        return lambda u: rhs_full(u, params)
    if model is Model.SOUNDPROOF:
        return lambda s: rhs_soundproof(s, params)
    return lambda s: rhs_intermediate(s, params)


def _lawson_parts(model: Model, params: ModelParams):
    """Remainder and exact propagator for the exponential scheme."""
    eps, eta = params.epsilon, params.eta
    if model is Model.FULL:

        def remainder(u: State) -> State:
            return rhs_full(u, params) - fast_linear_part(u, params)

        def propagate(u: State, h: float) -> State:
            return linear_propagate(u, h / eps, eta)

        return remainder, propagate

    def remainder_sp(s: ReducedState) -> ReducedState:
        return rhs_soundproof(s, params) + apply_soundproof_operator(s, eta) * (1.0 / eps)

    def propagate_sp(s: ReducedState, h: float) -> ReducedState:
        return _soundproof_propagate(s, h / eps, eta)

    return remainder_sp, propagate_sp


def _lawson_rk4(state, h: float, remainder, propagate):
    k1 = remainder(state)
    k2 = remainder(propagate(state + k1 * (h / 2), h / 2))
    half = propagate(state, h / 2)
    k3 = remainder(half + k2 * (h / 2))
    k4 = remainder(propagate(state, h) + propagate(k3, h / 2) * h)
    combined = propagate(state + k1 * (h / 6), h) + propagate((k2 + k3) * (h / 3), h / 2) + k4 * (h / 6)
    return combined


def _classical_rk4(state, h: float, rhs):
    k1 = rhs(state)
    k2 = rhs(state + k1 * (h / 2))
    k3 = rhs(state + k2 * (h / 2))
    k4 = rhs(state + k3 * h)
    return state + (k1 + (k2 + k3) * 2 + k4) * (h / 6)


def stability_limit(state: State, params: ModelParams) -> float:
    """Largest explicit RK4 step for the full model, ``0.5 eps / Omega_max``."""
    omega = max_acoustic_frequency(state.resolution, params.eta, dealias_mask(state.resolution))
    return CLASSICAL_CFL * params.epsilon / omega


def _reproject(model: Model, state: AnyState, params: ModelParams) -> AnyState:
    if model is Model.SOUNDPROOF:
        return leray_project_state(state)
    if model is Model.INTERMEDIATE:
        phi = weight_phi(params, state.resolution.nz)
        return state.with_velocity(*pseudo_incompressible_project(*state.velocity(), phi))
    return state


def step(model: Model, state: AnyState, dt: float, cfg: IntegratorConfig, params: ModelParams) -> AnyState:
    """Advance one step with the configured scheme.

    The intermediate model has no exact propagator that keeps its weighted
    constraint, so it always uses the classical stages; its linear
    frequencies are at most ``eps^-nu`` and not stiff.

    Raises:
        StabilityGuard: If a classical step of the full model is too large
        NonpositiveTheta: From the compressible right-hand side
        NoConvergence: From the weighted pressure solve
    """
    model = Model(model)
    if model is Model.FULL and cfg.scheme is Scheme.CLASSICAL_RK4:
        limit = stability_limit(state, params)
        if dt > limit:
            raise StabilityGuard(f"dt={dt:.3e} exceeds the explicit limit {limit:.3e} at epsilon={params.epsilon}")
    if cfg.scheme is Scheme.EXPONENTIAL_RK4 and model is not Model.INTERMEDIATE:
        remainder, propagate = _lawson_parts(model, params)
        advanced = _lawson_rk4(state, dt, remainder, propagate)
    else:
        advanced = _classical_rk4(state, dt, _rhs(model, params))
    return _reproject(model, advanced, params)


# --- runs -------------------------------------------------------------------


def diagnostics(model: Model, state: AnyState, params: ModelParams) -> dict[str, float]:
    """Energy, constraint residual and per-branch L2 norms of one sample."""
    model = Model(model)
    if model is Model.FULL:
        dec = decompose(state, params.eta)
        values = {
            "energy": energy(state, params),
            "div_residual": divergence_residual(*state.velocity()),
        }
        branches = (Branch.MF, Branch.GW, Branch.AW)
    else:
        dec = decompose_soundproof(state, params.eta)
        if model is Model.INTERMEDIATE:
            phi = weight_phi(params, state.resolution.nz)
            residual = weighted_divergence_residual(*state.velocity(), phi)
        else:
            residual = divergence_residual(*state.velocity())
        values = {"energy": soundproof_energy(state, params), "div_residual": residual}
        branches = (Branch.MF, Branch.GW)
    for branch in branches:
        values[branch.value] = dec.branch_norm(branch)
    return values


def integrate(
    model: Model,
    initial: AnyState,
    cfg: IntegratorConfig,
    params: ModelParams,
    observers: Sequence[Observer] = (),
) -> Trajectory:
    """Run ``model`` from ``initial`` to ``cfg.t_end``.

    Observers are called with ``(t, state)`` at every sample.
    """
    model = Model(model)
    if model is Model.FULL and cfg.scheme is Scheme.EXPONENTIAL_RK4 and not params.unit_constants:
        logger.warning(
            "A=%s B=%s C=%s are not unit; stiff terms remain in the exponential remainder",
            params.A,
            params.B,
            params.C,
        )
    trajectory = Trajectory(model)
    sizes = cfg.step_sizes()
    samples = 0

    def sample(t: float, state: AnyState) -> None:
        nonlocal samples
        trajectory.record(t, diagnostics(model, state, params))
        if cfg.keep_states or (cfg.snapshot_stride and samples % cfg.snapshot_stride == 0):
            trajectory.states.append(state)
            trajectory.state_times.append(t)
        for observer in observers:
            observer(t, state)
        samples += 1

    state = initial
    t = 0.0
    sample(t, state)
    for n, h in enumerate(sizes, start=1):
        state = step(model, state, h, cfg, params)
        t = cfg.t_end if n == len(sizes) else n * cfg.dt
        if n % cfg.sample_stride == 0 or n == len(sizes):
            sample(t, state)
    trajectory.final_state = state
    logger.info("Integrated %s model over %d steps to t=%.4g", model.value, len(sizes), t)
    return trajectory


def filtered_rate(trajectory: Trajectory, eta: Eta) -> np.ndarray:
    """Finite-difference size of the filtered time derivative between stored states.

    Raises:
        ValueError: If fewer than two full states were stored
    """
    if trajectory.model is not Model.FULL or len(trajectory.states) < 2:
        raise ValueError("filtered_rate needs at least two stored states of the full model")
    filtered = [filter_state(u, t, eta) for t, u in zip(trajectory.state_times, trajectory.states)]
    gaps = np.diff(trajectory.state_times)
    return np.array([(b - a).norm() / dt for a, b, dt in zip(filtered, filtered[1:], gaps)])
