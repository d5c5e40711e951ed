"""Unit tests for the model right-hand sides and elliptic solves."""

import numpy as np
import pytest

from solver.dynamics import (
    bilinear_B,
    bilinear_B_sp,
    energy,
    fast_linear_part,
    forcing_M,
    intermediate_pressure,
    intermediate_pressure_source,
    nonlinearity_N,
    nonlinearity_N_sp,
    pseudo_incompressible_project,
    rhs_full,
    rhs_intermediate,
    rhs_soundproof,
    soundproof_energy,
    soundproof_pressure,
    soundproof_pressure_source,
    solve_pressure_poisson,
    solve_pressure_weighted,
    theta_field,
    weight_phi,
    weight_phi_derivatives,
    weighted_divergence,
    weighted_divergence_residual,
)
from solver.errors import DivergenceViolation, IncompatibleRHS, NoConvergence, NonpositiveTheta
from solver.params import ModelParams, Profiles
from solver.spectral_core import (
    ReducedState,
    Resolution,
    SpectralField,
    State,
    Symmetry,
    WaveIndex,
    dealias,
    derivative,
    laplacian,
    random_field,
    random_state,
)
from solver.wave_modes import leray_project, leray_project_state, reduce_dimension

RES8 = Resolution.cube(8)
RES16 = Resolution.cube(16)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def params():
    return ModelParams(epsilon=0.1, nu=0.25)


def _velocity(resolution, rng, k_max=3):
    return tuple(random_field(resolution, p, rng, k_max) for p in (Symmetry.EVEN, Symmetry.EVEN, Symmetry.ODD))


def _soundproof_state(resolution, rng, k_max=3, amplitude=0.1):
    reduced = reduce_dimension(random_state(resolution, rng, k_max)) * amplitude
    return leray_project_state(reduced)


def _intermediate_state(resolution, rng, params, amplitude=0.1):
    state = reduce_dimension(random_state(resolution, rng, 3)) * amplitude
    phi = weight_phi(params, resolution.nz)
    return state.with_velocity(*pseudo_incompressible_project(*state.velocity(), phi))


def test_theta_field_is_positive_for_small_data(rng, params):
    """Test that theta stays close to C for small perturbations."""
    state = random_state(RES8, rng) * 0.01
    theta = theta_field(state.h, params)
    assert 0.5 < theta.minimum < 2.0
    assert theta.field.symmetry is Symmetry.EVEN


def test_theta_field_rejects_nonpositive_weight(params):
    """Test that a large negative buoyancy drives theta below the floor."""
    h = SpectralField.single_mode(RES8, Symmetry.ODD, WaveIndex(0, 0, 1), -100.0)
    with pytest.raises(NonpositiveTheta):
        theta_field(h, params)
    state = State(SpectralField.zeros(RES8, Symmetry.EVEN), h, *State.zeros(RES8).fields()[2:])
    with pytest.raises(NonpositiveTheta):
        energy(state, params)


def test_rhs_full_splits_into_fast_part_and_transport(rng):
    """Test dU/dt = -(1/eps) L U - N(U) when profiles vanish and constants are unit."""
    params = ModelParams(epsilon=0.1, nu=0.25).linear_only()
    state = random_state(RES8, rng, k_max=2) * 0.1

    difference = rhs_full(state, params) - fast_linear_part(state, params) + nonlinearity_N(state, params)

    assert difference.norm() <= 1e-11 * rhs_full(state, params).norm()


def test_rhs_full_linear_limit(rng, params):
    """Test that without profiles a tiny state only feels the fast linear part."""
    flat = params.linear_only()
    state = random_state(RES8, rng, k_max=2) * 1e-8
    fast = fast_linear_part(state, flat)
    remainder = rhs_full(state, flat) - fast
    assert remainder.norm() <= 1e-6 * fast.norm()


def _central_jacobian(state, params, delta=1e-4):
    return (rhs_full(state * delta, params) - rhs_full(state * (-delta), params)) * (0.5 / delta)


def test_rhs_full_jacobian_is_fast_part_plus_forcing(rng):
    """Test that with only G switched on the linearisation at rest is -(1/eps) L U + M U."""
    params = ModelParams(epsilon=0.1, nu=0.25, profiles=Profiles(Hbar0="zero", Gtilde="zero"))
    state = random_state(RES8, rng, k_max=2)

    jacobian = _central_jacobian(state, params)
    expected = fast_linear_part(state, params) + forcing_M(state, params)

    assert forcing_M(state, params).norm() > 1e-3 * expected.norm()
    assert (jacobian - expected).norm() <= 1e-9 * expected.norm()


def test_rhs_full_jacobian_remainder_scales_with_eps_mu(rng):
    """Test that with every profile on the linearisation departs from -(1/eps) L U + M U by O(eps^mu)."""
    state = random_state(RES8, rng, k_max=2)
    remainders = []
    for epsilon in (0.1, 0.01):
        params = ModelParams(epsilon=epsilon, nu=0.25)
        expected = fast_linear_part(state, params) + forcing_M(state, params)
        remainder = (_central_jacobian(state, params) - expected).norm() / expected.norm()
        assert remainder <= 2 * epsilon**params.mu
        remainders.append(remainder)

    assert remainders[0] > 0
    assert 0.2 <= remainders[1] / remainders[0] <= 0.5


def test_forcing_vanishes_without_profiles(rng, params):
    state = random_state(RES8, rng)
    assert forcing_M(state, params.linear_only()).norm() == 0.0
    forced = forcing_M(state, params)
    assert forced.q.norm() > 0.0
    assert forced.h.norm() == 0.0 and forced.w.norm() == 0.0


def test_reduced_part_of_bilinear_forms(rng, params):
    """Test that dropping q commutes with the quadratic terms."""
    u1 = random_state(RES8, rng)
    u2 = random_state(RES8, rng)

    full = reduce_dimension(bilinear_B(u1, u2, params))
    reduced = bilinear_B_sp(reduce_dimension(u1), reduce_dimension(u2), params)
    assert (full - reduced).norm() <= 1e-14 * max(1.0, full.norm())

    n_full = reduce_dimension(nonlinearity_N(u1, params))
    n_reduced = nonlinearity_N_sp(reduce_dimension(u1), params)
    assert (n_full - n_reduced).norm() <= 1e-14 * max(1.0, n_full.norm())


def test_bilinear_form_is_bilinear(rng, params):
    u1 = random_state(RES8, rng, k_max=2)
    u2 = random_state(RES8, rng, k_max=2)
    u3 = random_state(RES8, rng, k_max=2)

    lhs = bilinear_B(u1, u2 * 2.0 + u3, params)
    rhs = bilinear_B(u1, u2, params) * 2.0 + bilinear_B(u1, u3, params)

    assert (lhs - rhs).norm() <= 1e-12 * rhs.norm()


def test_poisson_single_mode():
    """Test that -Laplace p = F is exact for one Fourier mode."""
    source = SpectralField.single_mode(RES8, Symmetry.EVEN, WaveIndex(1, 0, 1), 0.5)

    report = solve_pressure_poisson(source)

    k2 = (2 * np.pi) ** 2 * 2
    np.testing.assert_allclose(report.solution.coeffs, source.coeffs / k2, atol=1e-16)
    assert report.iterations == 1
    assert report.residual <= 1e-15


def test_poisson_rejects_nonzero_mean():
    constant = SpectralField.single_mode(RES8, Symmetry.EVEN, WaveIndex(0, 0, 0), 1.0)
    with pytest.raises(IncompatibleRHS):
        solve_pressure_poisson(constant)


def test_weighted_solve_with_unit_weight_is_one_poisson_solve(rng):
    coeffs = random_field(RES8, Symmetry.EVEN, rng).coeffs.copy()
    coeffs[0, 0, 0] = 0.0
    source = SpectralField(RES8, Symmetry.EVEN, coeffs)

    report = solve_pressure_weighted(source, np.ones(RES8.nz))

    assert report.iterations == 1
    np.testing.assert_allclose(report.solution.coeffs, solve_pressure_poisson(source).solution.coeffs)


def test_weighted_solve_recovers_manufactured_solution(rng, params):
    """Test -div(phi grad p) = F with a known zero-mean p at 16^3."""
    truth = random_field(RES16, Symmetry.EVEN, rng, k_max=3)
    coeffs = truth.coeffs.copy()
    coeffs[0, 0, 0] = 0.0
    truth = truth.with_coeffs(coeffs)
    phi = weight_phi(params, RES16.nz)
    source = -weighted_divergence(*(derivative(truth, axis) for axis in ("x", "y", "z")), phi)

    report = solve_pressure_weighted(source, phi)

    assert report.iterations <= 20
    assert (report.solution - truth).norm() <= 1e-8 * truth.norm()
    assert report.equation_residual <= 1e-8


def test_weighted_solve_reports_stall(rng, params):
    """Test that exhausting the iteration budget raises NoConvergence."""
    phi = weight_phi(params, RES8.nz)
    velocity = _velocity(RES8, rng)
    source = -weighted_divergence(*velocity, phi)
    with pytest.raises(NoConvergence):
        solve_pressure_weighted(source, phi, tol=1e-14, max_iterations=1)


def test_weight_phi_profile(params):
    """Test phi = 1 at the bottom, positivity and the derivative formulas."""
    nz = 1024
    phi, dphi, ddphi = weight_phi_derivatives(params, nz)
    assert phi[0] == pytest.approx(1.0)
    assert np.all(phi > 0)
    assert np.all(np.abs(phi - 1.0) < 0.1)
    np.testing.assert_allclose(phi, weight_phi(params, nz))

    # periodic central differences on the lattice
    slope = (np.roll(phi, -1) - np.roll(phi, 1)) * nz / 2
    curvature = (np.roll(phi, -1) - 2 * phi + np.roll(phi, 1)) * nz**2
    np.testing.assert_allclose(dphi, slope, atol=5e-5)
    np.testing.assert_allclose(ddphi, curvature, atol=1e-4)


def test_weight_phi_is_unity_without_profiles(params):
    np.testing.assert_array_equal(weight_phi(params.linear_only(), 8), np.ones(8))


def test_pseudo_incompressible_projection(rng, params):
    """Test that the projected velocity satisfies div(phi u) = 0."""
    phi = weight_phi(params, RES16.nz)
    velocity = _velocity(RES16, rng)

    projected = pseudo_incompressible_project(*velocity, phi)

    assert weighted_divergence_residual(*velocity, phi) > 1e-2
    assert weighted_divergence_residual(*projected, phi) <= 1e-10


def test_pseudo_incompressible_projection_of_full_band_velocity(rng, params):
    """Test div(phi u) = 0 when phi u reaches the Nyquist planes of the lattice."""
    phi = weight_phi(params, RES8.nz)
    for _ in range(4):
        velocity = tuple(random_field(RES8, p, rng) for p in (Symmetry.EVEN, Symmetry.EVEN, Symmetry.ODD))
        scale = np.sqrt(sum(f.norm() ** 2 for f in velocity))
        velocity = tuple(f * (1.0 / scale) for f in velocity)

        projected = pseudo_incompressible_project(*velocity, phi)

        assert weighted_divergence_residual(*projected, phi) <= 1e-10


def test_pseudo_incompressible_projection_reduces_to_leray(rng):
    """Test that a unit weight gives the Leray projection."""
    velocity = _velocity(RES8, rng)
    weighted = pseudo_incompressible_project(*velocity, np.ones(RES8.nz))
    leray = leray_project(*velocity)
    for a, b in zip(weighted, leray):
        assert (a - b).max_abs() <= 1e-12


def test_soundproof_pressure_matches_expanded_source(rng, params):
    """Test that the divergence-form and expanded pressure sources agree on divergence-free data."""
    state = _soundproof_state(RES16, rng)

    pressure = soundproof_pressure(state, params).solution
    expanded = soundproof_pressure_source(state, params)

    lhs = -laplacian(pressure)
    assert (lhs - expanded).norm() <= 1e-10 * expanded.norm()


def test_intermediate_source_reduces_to_soundproof_without_profiles(rng, params):
    """Test that phi = 1 turns the weighted pressure source into the soundproof one."""
    flat = params.linear_only()
    state = _soundproof_state(RES16, rng)

    weighted = dealias(intermediate_pressure_source(state, flat))
    plain = soundproof_pressure_source(state, flat)

    assert (weighted - plain).norm() <= 1e-10 * plain.norm()


def test_intermediate_pressure_converges(rng, params):
    state = _intermediate_state(RES8, rng, params)
    report = intermediate_pressure(state, params)
    assert report.iterations <= 20
    assert report.residual <= 1e-10


def test_rhs_soundproof_keeps_constraint(rng, params):
    """Test that the soundproof tendency is divergence free."""
    state = _soundproof_state(RES8, rng)

    tendency = rhs_soundproof(state, params)

    residual = weighted_divergence_residual(*tendency.velocity(), np.ones(RES8.nz))
    assert residual <= 1e-10


def test_rhs_soundproof_rejects_divergent_state(rng, params):
    state = reduce_dimension(random_state(RES8, rng))
    with pytest.raises(DivergenceViolation):
        rhs_soundproof(state, params)


def test_rhs_intermediate_keeps_weighted_constraint(rng, params):
    """Test that the intermediate tendency satisfies div(phi dU/dt) = 0."""
    state = _intermediate_state(RES8, rng, params)
    phi = weight_phi(params, RES8.nz)

    tendency = rhs_intermediate(state, params)

    assert weighted_divergence_residual(*tendency.velocity(), phi) <= 1e-8


def test_rhs_intermediate_rejects_divergent_state(rng, params):
    state = reduce_dimension(random_state(RES8, rng))
    with pytest.raises(DivergenceViolation):
        rhs_intermediate(state, params)


def test_energy_is_squared_norm_without_profiles(rng):
    """Test that the energy reduces to the L2 norm when theta = 1 and A = B = 1."""
    params = ModelParams().linear_only()
    state = random_state(RES8, rng)
    assert energy(state, params) == pytest.approx(state.norm() ** 2, rel=1e-12)


def test_soundproof_energy_of_single_mode():
    """Test the soundproof energy of v1 = cos(2 pi x)."""
    v1 = SpectralField.single_mode(RES8, Symmetry.EVEN, WaveIndex(1, 0, 0), 0.5)
    zero = ReducedState.zeros(RES8)
    state = ReducedState(zero.h, v1, zero.v2, zero.w)
    assert soundproof_energy(state, ModelParams()) == pytest.approx(0.25)
