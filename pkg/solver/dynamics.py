"""Right-hand sides of the compressible, intermediate and soundproof models.

Time derivatives are assembled pseudo-spectrally: the stiff constant
coefficient terms exactly in coefficient space, everything else on the
lattice followed by two-thirds truncation. Products with the smooth
stratification profiles inside the elliptic operators are left untruncated
so the discrete weighted operator stays self-consistent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from solver.errors import DivergenceViolation, IncompatibleRHS, NoConvergence, NonpositiveTheta
from solver.params import ModelParams, profile_grids
from solver.spectral_core import (
    ReducedState,
    SpectralField,
    State,
    Symmetry,
    dealias,
    derivative,
    divergence,
    laplacian_symbol,
    profile_product,
    to_physical,
    to_spectral,
)
from solver.wave_modes import apply_fast_operator, divergence_residual

logger = logging.getLogger(__name__)

THETA_FLOOR = 1e-8
PRESSURE_TOLERANCE = 1e-10
PROJECTION_TOLERANCE = 1e-12
MAX_PRESSURE_ITERATIONS = 50
CONSTRAINT_TOLERANCE = 1e-8
COMPATIBILITY_TOLERANCE = 1e-12


def _z(profile: np.ndarray) -> np.ndarray:
    return profile[None, None, :]


def _grid(field: SpectralField) -> np.ndarray:
    return to_physical(field)


def _gradient_grids(field: SpectralField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return tuple(to_physical(derivative(field, axis)) for axis in ("x", "y", "z"))


def _spectral(grid: np.ndarray, symmetry: Symmetry) -> SpectralField:
    """Lattice values back to truncated coefficients."""
    return dealias(to_spectral(grid, symmetry, check_parity=False))


# --- momentum weight --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ThetaField:
    """``theta = C + eps^mu Gtilde Hbar0 + eps^(mu + nu) Gtilde H`` on the lattice."""

    grid: np.ndarray

    @property
    def minimum(self) -> float:
        return float(self.grid.min())

    @property
    def field(self) -> SpectralField:
        return to_spectral(self.grid, Symmetry.EVEN, check_parity=False)


def _theta_grid(h_grid: np.ndarray, params: ModelParams) -> np.ndarray:
    prof = profile_grids(params.profiles, h_grid.shape[2])
    eps, mu, nu = params.epsilon, params.mu, params.nu
    theta = params.C + eps**mu * _z(prof.Gtilde * prof.Hbar0) + eps ** (mu + nu) * _z(prof.Gtilde) * h_grid
    low = float(theta.min())
    if low <= THETA_FLOOR:
        raise NonpositiveTheta(f"theta reaches {low:.3e}, below the floor {THETA_FLOOR:.0e}")
    return theta


def theta_field(h: SpectralField, params: ModelParams) -> ThetaField:
    """Evaluate the momentum weight.

    Raises:
        NonpositiveTheta: If the minimum over the lattice is at or below 1e-8
    """
    return ThetaField(_theta_grid(_grid(h), params))


# --- compressible system ----------------------------------------------------


def rhs_full(state: State, params: ModelParams) -> State:
    """Time derivative of the compressible system.

    The pressure equation is divided by ``A``, the potential-temperature
    equation by ``B`` and both momentum equations by ``theta``.
    """
    eps, nu, mu = params.epsilon, params.nu, params.mu
    A, B, C = params.A, params.B, params.C
    kappa = 1.0 / (A * params.varpi0)
    prof = profile_grids(params.profiles, state.resolution.nz)

    q, h, v1, v2, w = (_grid(f) for f in state.fields())
    dq, dh, dv1, dv2, dw = (_gradient_grids(f) for f in state.fields())
    div_u = dv1[0] + dv2[1] + dw[2]

    def advect(grad: tuple[np.ndarray, ...]) -> np.ndarray:
        return v1 * grad[0] + v2 * grad[1] + w * grad[2]

    excess = 1.0 / _theta_grid(h, params) - 1.0 / C

    q_rest = (
        -advect(dq)
        + C * _z(prof.G) * w
        + eps**mu * _z(prof.Hbar0) * w
        + kappa * div_u * (C * _z(prof.IG) + eps**mu * _z(prof.IH) - q)
    )
    h_rest = -advect(dh) + _z(prof.Gtilde) * h * w
    v1_rest = -advect(dv1) - dq[0] * excess / eps
    v2_rest = -advect(dv2) - dq[1] * excess / eps
    w_rest = -advect(dw) - (dq[2] / eps + h / eps**nu) * excess

    stiff_q = divergence(state.v1, state.v2, state.w) * (-1.0 / (A * eps))
    stiff_h = state.w * (1.0 / (B * eps**nu))
    stiff_v1 = derivative(state.q, "x") * (-1.0 / (C * eps))
    stiff_v2 = derivative(state.q, "y") * (-1.0 / (C * eps))
    stiff_w = (derivative(state.q, "z") * (1.0 / eps) + state.h * (1.0 / eps**nu)) * (-1.0 / C)

    return State(
        _spectral(q_rest, Symmetry.EVEN) + stiff_q,
        _spectral(h_rest, Symmetry.ODD) + stiff_h,
        _spectral(v1_rest, Symmetry.EVEN) + stiff_v1,
        _spectral(v2_rest, Symmetry.EVEN) + stiff_v2,
        _spectral(w_rest, Symmetry.ODD) + stiff_w,
    )


def fast_linear_part(state: State, params: ModelParams) -> State:
    """``-(1 / eps) (L_a + eta L_g) U``, the stiff part at unit constants."""
    return apply_fast_operator(state, params.eta) * (-1.0 / params.epsilon)


def bilinear_B_sp(s1: ReducedState, s2: ReducedState, params: ModelParams) -> ReducedState:
    """``v1 . grad_h S2 + w1 d_z S2 + (-Gtilde H1 w2, 0, 0, 0)``."""
    prof = profile_grids(params.profiles, s1.resolution.nz)
    v1, v2, w = (_grid(f) for f in s1.velocity())
    h1 = _grid(s1.h)

    def advect(field: SpectralField) -> np.ndarray:
        gx, gy, gz = _gradient_grids(field)
        return v1 * gx + v2 * gy + w * gz

    out = [advect(f) for f in s2.fields()]
    out[0] = out[0] - _z(prof.Gtilde) * h1 * _grid(s2.w)
    return ReducedState(*(_spectral(g, p) for g, p in zip(out, ReducedState.PARITY)))


def bilinear_B(u1: State, u2: State, params: ModelParams) -> State:
    """Quadratic form whose diagonal is the transport nonlinearity.

    ``B(U1, U2) = v1 . grad_h U2 + w1 d_z U2 + (q1 div u2 / (A varpi0), -Gtilde H1 w2, 0, 0, 0)``
    """
    kappa = 1.0 / (params.A * params.varpi0)
    v1, v2, w = (_grid(f) for f in u1.velocity())
    gx, gy, gz = _gradient_grids(u2.q)
    div_u2 = _grid(divergence(u2.v1, u2.v2, u2.w))
    q_part = v1 * gx + v2 * gy + w * gz + kappa * _grid(u1.q) * div_u2
    reduced = bilinear_B_sp(
        ReducedState(u1.h, u1.v1, u1.v2, u1.w),
        ReducedState(u2.h, u2.v1, u2.v2, u2.w),
        params,
    )
    return State(_spectral(q_part, Symmetry.EVEN), *reduced.fields())


def nonlinearity_N(state: State, params: ModelParams) -> State:
    return bilinear_B(state, state, params)


def nonlinearity_N_sp(state: ReducedState, params: ModelParams) -> ReducedState:
    return bilinear_B_sp(state, state, params)


def forcing_M(state: State, params: ModelParams) -> State:
    """``(C G w + C IG div u / (A varpi0), 0, 0, 0, 0)``."""
    prof = profile_grids(params.profiles, state.resolution.nz)
    kappa = 1.0 / (params.A * params.varpi0)
    w = _grid(state.w)
    div_u = _grid(divergence(state.v1, state.v2, state.w))
    q_part = params.C * (_z(prof.G) * w + kappa * _z(prof.IG) * div_u)
    zero = State.zeros(state.resolution)
    return State(_spectral(q_part, Symmetry.EVEN), zero.h, zero.v1, zero.v2, zero.w)


# --- elliptic solvers -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PressureSolveReport:
    """Zero-mean pressure with convergence information.

    ``residual`` is the relative size of the last increment (the stopping
    quantity); ``equation_residual`` the relative residual of the elliptic
    equation itself.
    """

    solution: SpectralField
    iterations: int
    residual: float
    equation_residual: float = 0.0


def _mean(field: SpectralField) -> float:
    if field.symmetry is Symmetry.ODD:
        return 0.0
    return float(field.coeffs[0, 0, 0].real)


def _check_compatible(source: SpectralField) -> None:
    mean = _mean(source)
    if abs(mean) > COMPATIBILITY_TOLERANCE * max(1.0, source.norm()):
        raise IncompatibleRHS(f"Right-hand side has mean {mean:.3e}")


def _inverse_laplacian(source: SpectralField) -> SpectralField:
    k2 = laplacian_symbol(source.resolution)
    inverse = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    return source.with_coeffs(source.coeffs * inverse)


def _relative(value: float, scale: float) -> float:
    return value / max(1.0, scale)


def solve_pressure_poisson(source: SpectralField) -> PressureSolveReport:
    """Solve ``-Laplace p = F`` with ``integral p = 0``.

    Raises:
        IncompatibleRHS: If ``F`` has non-zero mean
    """
    _check_compatible(source)
    pressure = _inverse_laplacian(source)
    k2 = laplacian_symbol(source.resolution)
    residual_coeffs = np.where(k2 > 0, k2 * pressure.coeffs - source.coeffs, 0)
    residual = _relative(source.with_coeffs(residual_coeffs).norm(), source.norm())
    return PressureSolveReport(pressure, 1, residual, residual)


def weighted_divergence(
    v1: SpectralField, v2: SpectralField, w: SpectralField, phi: np.ndarray
) -> SpectralField:
    """``div(phi u)`` for a z-profile ``phi`` sampled on the lattice."""
    return divergence(profile_product(v1, phi), profile_product(v2, phi), profile_product(w, phi))


def _weighted_operator(pressure: SpectralField, phi: np.ndarray) -> SpectralField:
    """``-div(phi grad p)``."""
    gx, gy, gz = (derivative(pressure, axis) for axis in ("x", "y", "z"))
    return -weighted_divergence(gx, gy, gz, phi)


def solve_pressure_weighted(
    source: SpectralField,
    phi: np.ndarray,
    tol: float = PRESSURE_TOLERANCE,
    max_iterations: int = MAX_PRESSURE_ITERATIONS,
) -> PressureSolveReport:
    """Solve ``-div(phi grad p) = F`` by fixed-point iteration.

    Each sweep solves ``-Laplace p_new = F + div((phi - 1) grad p_old)``,
    a contraction with factor about ``max |phi - 1|``.

    Raises:
        IncompatibleRHS: If ``F`` has non-zero mean
        NoConvergence: If the increment stays above ``tol`` after ``max_iterations``
    """
    _check_compatible(source)
    phi = np.asarray(phi, dtype=float)
    deviation = phi - 1.0
    if not np.any(deviation):
        report = solve_pressure_poisson(source)
        return PressureSolveReport(report.solution, 1, 0.0, report.equation_residual)

    pressure = SpectralField.zeros(source.resolution, source.symmetry)
    increment = np.inf
    for iteration in range(1, max_iterations + 1):
        gx, gy, gz = (derivative(pressure, axis) for axis in ("x", "y", "z"))
        correction = weighted_divergence(gx, gy, gz, deviation)
        updated = _inverse_laplacian(source + correction)
        increment = _relative((updated - pressure).norm(), updated.norm())
        pressure = updated
        if increment <= tol:
            equation = _relative((_weighted_operator(pressure, phi) - source).norm(), source.norm())
            logger.debug(
                "Weighted pressure solve converged in %d iterations (increment %.2e)", iteration, increment
            )
            return PressureSolveReport(pressure, iteration, increment, equation)
    raise NoConvergence(
        f"Weighted pressure solve stalled at increment {increment:.3e} after {max_iterations} iterations"
    )


def weight_phi(params: ModelParams, nz: int) -> np.ndarray:
    """``phi(z) = exp(-eps A integral_0^z (C G + eps^mu Hbar0))`` on the lattice."""
    prof = profile_grids(params.profiles, nz)
    eps = params.epsilon
    return np.exp(-eps * params.A * (params.C * prof.IG + eps**params.mu * prof.IH))


def weight_phi_derivatives(params: ModelParams, nz: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``phi``, ``d_z phi`` and ``d_z^2 phi`` from the analytic profiles."""
    prof = profile_grids(params.profiles, nz)
    eps, mu, A, C = params.epsilon, params.mu, params.A, params.C
    phi = weight_phi(params, nz)
    rate = eps * A * (C * prof.G + eps**mu * prof.Hbar0)
    rate_slope = eps * A * (C * prof.dG + eps**mu * prof.dHbar0)
    return phi, -rate * phi, (rate**2 - rate_slope) * phi


def weighted_divergence_residual(
    v1: SpectralField, v2: SpectralField, w: SpectralField, phi: np.ndarray
) -> float:
    """``||div(phi u)|| / max(1, ||grad u||)``."""
    scale = np.sqrt(sum(derivative(f, axis).norm() ** 2 for f in (v1, v2, w) for axis in ("x", "y", "z")))
    return float(weighted_divergence(v1, v2, w, phi).norm() / max(1.0, scale))


def pseudo_incompressible_project(
    v1: SpectralField,
    v2: SpectralField,
    w: SpectralField,
    phi: np.ndarray,
    tol: float = PROJECTION_TOLERANCE,
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Return ``u - grad psi`` with ``-div(phi grad psi) = -div(phi u)``.

    The output satisfies ``div(phi u) = 0``; for ``phi = 1`` this is the
    Leray projection.
    """
    source = -weighted_divergence(v1, v2, w, phi)
    psi = solve_pressure_weighted(source, phi, tol=tol).solution
    return v1 - derivative(psi, "x"), v2 - derivative(psi, "y"), w - derivative(psi, "z")


# --- reduced models ---------------------------------------------------------


def _momentum_forcing(state: ReducedState, params: ModelParams) -> tuple[SpectralField, ...]:
    """``F = -C (u . grad) u - eps^-nu H e_z``, the momentum terms besides the pressure."""
    v1, v2, w = (_grid(f) for f in state.velocity())
    forcing = []
    for component in state.velocity():
        gx, gy, gz = _gradient_grids(component)
        forcing.append(_spectral(-(v1 * gx + v2 * gy + w * gz), component.symmetry) * params.C)
    forcing[2] = forcing[2] - state.h * params.epsilon ** (-params.nu)
    return tuple(forcing)


def _buoyancy_rhs(state: ReducedState, params: ModelParams) -> SpectralField:
    prof = profile_grids(params.profiles, state.resolution.nz)
    v1, v2, w = (_grid(f) for f in state.velocity())
    gx, gy, gz = _gradient_grids(state.h)
    rest = -(v1 * gx + v2 * gy + w * gz) + _z(prof.Gtilde) * _grid(state.h) * w
    return _spectral(rest, Symmetry.ODD) + state.w * (1.0 / (params.B * params.epsilon**params.nu))


def soundproof_pressure(state: ReducedState, params: ModelParams) -> PressureSolveReport:
    """Pressure of the soundproof model, from ``-Laplace p = -div F``."""
    forcing = _momentum_forcing(state, params)
    return solve_pressure_poisson(-divergence(*forcing))


def soundproof_pressure_source(state: ReducedState, params: ModelParams) -> SpectralField:
    """Right-hand side of the soundproof pressure equation in expanded form.

    ``C ((grad_h v)^T : grad_h v + 2 d_z v . grad_h w + (d_z w)^2) + eps^-nu d_z H``;
    equals ``-div F`` on divergence-free velocities.
    """
    dv1, dv2, dw = (_gradient_grids(f) for f in state.velocity())
    quadratic = (
        dv1[0] ** 2
        + 2 * dv1[1] * dv2[0]
        + dv2[1] ** 2
        + 2 * (dv1[2] * dw[0] + dv2[2] * dw[1])
        + dw[2] ** 2
    )
    return _spectral(params.C * quadratic, Symmetry.EVEN) + derivative(state.h, "z") * params.epsilon ** (
        -params.nu
    )


def rhs_soundproof(state: ReducedState, params: ModelParams) -> ReducedState:
    """Time derivative of the soundproof model.

    Raises:
        DivergenceViolation: If the velocity is not divergence free to 1e-8
    """
    residual = divergence_residual(*state.velocity())
    if residual > CONSTRAINT_TOLERANCE:
        raise DivergenceViolation(f"Soundproof state has divergence residual {residual:.3e}")
    forcing = _momentum_forcing(state, params)
    pressure = solve_pressure_poisson(-divergence(*forcing)).solution
    velocity = [
        (f - derivative(pressure, axis)) * (1.0 / params.C) for f, axis in zip(forcing, ("x", "y", "z"))
    ]
    return ReducedState(_buoyancy_rhs(state, params), *velocity)


def intermediate_pressure(state: ReducedState, params: ModelParams) -> PressureSolveReport:
    """Pressure of the intermediate model, from ``-div(phi grad p) = -div(phi F)``."""
    phi = weight_phi(params, state.resolution.nz)
    forcing = _momentum_forcing(state, params)
    return solve_pressure_weighted(-weighted_divergence(*forcing, phi), phi)


def intermediate_pressure_source(state: ReducedState, params: ModelParams) -> SpectralField:
    """Right-hand side of the weighted pressure equation in expanded form.

    Uses ``phi``, ``d_z phi`` and ``d_z^2 phi`` explicitly; equals
    ``-div(phi F)`` on velocities with ``div(phi u) = 0``.
    """
    phi, dphi, ddphi = (_z(p) for p in weight_phi_derivatives(params, state.resolution.nz))
    v1, v2, w = (_grid(f) for f in state.velocity())
    dv1, dv2, dw = (_gradient_grids(f) for f in state.velocity())
    div_h = dv1[0] + dv2[1]
    quadratic = (
        phi * (dv1[0] ** 2 + 2 * dv1[1] * dv2[0] + dv2[1] ** 2)
        + 2 * phi * (dv1[2] * dw[0] + dv2[2] * dw[1])
        + phi * dw[2] ** 2
        - w * dphi * div_h
        - w**2 * ddphi
        - w * dphi * dw[2]
    )
    h_weighted = profile_product(state.h, phi[0, 0])
    return to_spectral(params.C * quadratic, Symmetry.EVEN, check_parity=False) + derivative(
        h_weighted, "z"
    ) * params.epsilon ** (-params.nu)


def rhs_intermediate(state: ReducedState, params: ModelParams) -> ReducedState:
    """Time derivative of the intermediate (weighted pseudo-incompressible) model.

    Raises:
        DivergenceViolation: If ``div(phi u)`` is not zero to 1e-8
        NoConvergence: If the weighted pressure solve fails
    """
    phi = weight_phi(params, state.resolution.nz)
    residual = weighted_divergence_residual(*state.velocity(), phi)
    if residual > CONSTRAINT_TOLERANCE:
        raise DivergenceViolation(f"Intermediate state has weighted divergence residual {residual:.3e}")
    forcing = _momentum_forcing(state, params)
    pressure = solve_pressure_weighted(-weighted_divergence(*forcing, phi), phi).solution
    velocity = [
        (f - derivative(pressure, axis)) * (1.0 / params.C) for f, axis in zip(forcing, ("x", "y", "z"))
    ]
    return ReducedState(_buoyancy_rhs(state, params), *velocity)


# --- energies ---------------------------------------------------------------


def energy(state: State, params: ModelParams) -> float:
    """``A ||q||^2 + B ||H||^2 + ||theta^1/2 v||^2 + ||theta^1/2 w||^2``.

    Raises:
        NonpositiveTheta: If theta is not positive
    """
    q, h, v1, v2, w = (_grid(f) for f in state.fields())
    theta = _theta_grid(h, params)
    density = params.A * q**2 + params.B * h**2 + theta * (v1**2 + v2**2 + w**2)
    return float(density.mean())


def soundproof_energy(state: ReducedState, params: ModelParams) -> float:
    """``integral (B H^2 + C |u|^2) / 2``."""
    h, v1, v2, w = (_grid(f) for f in state.fields())
    return float((0.5 * (params.B * h**2 + params.C * (v1**2 + v2**2 + w**2))).mean())
