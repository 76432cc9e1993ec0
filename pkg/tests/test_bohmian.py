import math

import numpy as np
import pytest
from conftest import closed_coefficient, group_velocity

from tunnelling.physics import bohmian, closed_form
from tunnelling.physics.errors import DomainError, NodeError
from tunnelling.physics.models import Waveguide
from tunnelling.verification import oracle

# at delta = 2, psi_m has nodes at pi/(2q) + n pi/q and psi_a at n pi/q
Q_AT_2 = (math.sqrt(6.0) - math.sqrt(2.0)) / 2.0
GRID = np.linspace(0.1, 2.0, 40)


def test_polar_decomposition_rebuilds_psi(regime_config):
    x = np.linspace(0.0, 4.0, 81)
    polar = bohmian.polar_decompose(regime_config, x)
    f = closed_form.field_arrays(regime_config, x)
    rebuilt_m = np.array([p.R_m * np.exp(1j * p.S_m) for p in polar])
    np.testing.assert_allclose(rebuilt_m, f.psi_m, atol=1e-12)
    rebuilt_a = np.array([p.R_a * np.exp(1j * p.S_a) for p in polar])
    np.testing.assert_allclose(rebuilt_a[1:], f.psi_a[1:], atol=1e-12)


def test_polar_phase_is_continuous(at_delta):
    # psi_m has no node for delta = 0.5, so its phase never jumps by pi
    x = np.linspace(0.0, 30.0, 3001)
    polar = bohmian.polar_decompose(at_delta(0.5), x)
    phase = np.array([p.S_m for p in polar])
    assert np.max(np.abs(np.diff(phase))) < 0.1
    assert -math.pi < phase[0] <= math.pi


def test_polar_flags_the_edge_node(unit_config):
    polar = bohmian.polar_decompose(unit_config, [0.0, 0.5, 1.0])
    assert polar[0].node_a and not polar[0].node_m
    assert not polar[1].node_a


def test_polar_needs_sorted_grid(unit_config):
    with pytest.raises(DomainError):
        bohmian.polar_decompose(unit_config, [1.0, 0.5])
    with pytest.raises(DomainError):
        bohmian.polar_decompose(unit_config, [1.0])


@pytest.mark.parametrize(
    "delta, x",
    [(-10.0, 0.5), (-10.0, 4.0), (-2.0, 0.5), (-2.0, 10.0), (-1.001, 5.0), (-1.001, 40.0)],
)
def test_evanescent_photons_are_at_rest(delta, x, at_delta):
    config = at_delta(delta)
    for waveguide in Waveguide:
        assert abs(bohmian.bohm_velocity(config, x, waveguide)) < 1e-12


def test_decayed_tail_counts_as_a_node(at_delta):
    config = at_delta(-2.0)
    # |psi_m| ~ e^{-sqrt(2) x} / 2 drops below 1e-10 |c0| near x = 15.8
    with pytest.raises(NodeError):
        bohmian.bohm_velocity(config, 20.0, Waveguide.MAIN)
    v = bohmian.velocity_profile(config, [10.0, 20.0], Waveguide.MAIN)
    assert abs(v[0]) < 1e-12
    assert np.isnan(v[1])


def test_node_threshold_scales_with_the_amplitude(at_delta):
    x = 14.0
    # |psi_m| is about 1.3e-9 |c0| here
    assert abs(bohmian.bohm_velocity(at_delta(-2.0), x, Waveguide.MAIN)) < 1e-12
    faint = at_delta(-2.0, amplitude_re=1e-6)
    assert abs(bohmian.bohm_velocity(faint, x, Waveguide.MAIN)) < 1e-12
    with pytest.raises(NodeError):
        bohmian.bohm_velocity(at_delta(-2.0), x, Waveguide.MAIN, node_threshold=1e-8)


@pytest.mark.parametrize("delta", [1.001, 2.0, 10.0])
def test_transmission_velocities_are_equal_and_uniform(delta, at_delta):
    config = at_delta(delta)
    expected = group_velocity(config)
    for x in (0.3, 0.7, 1.1):
        for waveguide in Waveguide:
            v = bohmian.bohm_velocity(config, x, waveguide)
            assert v == pytest.approx(expected, abs=1e-12)


def test_mixed_velocities_differ_and_depend_on_x(at_delta):
    config = at_delta(0.5)
    v_m = bohmian.velocity_profile(config, GRID, Waveguide.MAIN)
    v_a = bohmian.velocity_profile(config, GRID, Waveguide.AUXILIARY)
    assert np.max(np.abs(v_m - v_a)) > 1e-3
    assert np.ptp(v_m) > 1e-3


def test_velocity_refuses_nodes(at_delta):
    config = at_delta(2.0)
    with pytest.raises(NodeError) as info:
        bohmian.bohm_velocity(config, 0.0, Waveguide.AUXILIARY)
    assert info.value.x == 0.0
    with pytest.raises(NodeError):
        bohmian.quantum_potential(config, math.pi / (2 * Q_AT_2), Waveguide.MAIN)


def test_velocity_profile_blanks_nodes(at_delta):
    v = bohmian.velocity_profile(at_delta(2.0), [0.0, 1.0], Waveguide.AUXILIARY)
    assert math.isnan(v[0])
    assert v[1] == pytest.approx(group_velocity(at_delta(2.0)))


@pytest.mark.parametrize("delta", [-2.0, 0.5, 2.0])
@pytest.mark.parametrize("waveguide", list(Waveguide))
def test_quantum_potential_matches_differencing(delta, waveguide, at_delta):
    config = at_delta(delta)
    analytic = bohmian.quantum_potential(config, 1.0, waveguide)
    numeric = oracle.numeric_quantum_potential(config, 1.0, waveguide)
    assert analytic == pytest.approx(numeric, abs=1e-7)


def test_two_transmission_coupling_energy(at_delta):
    # psi_a/psi_m = i tan(qx) is imaginary, so the cosine term vanishes
    config = at_delta(2.0)
    assert bohmian.coupling_energy(config, 0.8, Waveguide.MAIN) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("delta", [-10.0, -2.0, -0.5, 0.0, 0.5, 2.0, 10.0])
def test_energy_budget_closes(delta, at_delta):
    config = at_delta(delta)
    scale = max(abs(config.energy), config.hbar_coupling)
    for waveguide in Waveguide:
        for x in GRID:
            assert abs(bohmian.hj_residual(config, x, waveguide)) < 1e-8 * scale


def test_energy_budget_terms(at_delta):
    config = at_delta(2.0)
    budget = bohmian.energy_budget(config, 0.5, Waveguide.MAIN)
    assert budget.kinetic == pytest.approx(group_velocity(config) ** 2 / 2.0)
    assert budget.external == config.step_potential
    assert budget.total == pytest.approx(config.energy, abs=1e-10)


def test_tunnelling_current_vanishes_without_phase(at_delta):
    j = bohmian.tunnelling_current_profile(at_delta(-2.0), GRID)
    assert np.all(j == 0.0)


def test_tunnelling_current_is_real(regime_config):
    j = bohmian.tunnelling_current_complex(regime_config, GRID)
    assert np.all(j.imag == 0.0)


def test_tunnelling_current_flows_in_transmission(at_delta):
    config = at_delta(2.0)
    # j0 = J0 sin(2 q x) for unit amplitude
    expected = np.abs(np.sin(2 * Q_AT_2 * GRID))
    j = bohmian.tunnelling_current_profile(config, GRID)
    np.testing.assert_allclose(np.abs(j), expected, atol=1e-12)


@pytest.mark.parametrize("delta", [-10.0, -2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 10.0])
def test_modified_continuity_holds(delta, at_delta):
    config = at_delta(delta)
    x = np.linspace(0.0, 5.0, 200)
    for waveguide in Waveguide:
        residual = bohmian.continuity_profile(config, x, waveguide)
        assert np.max(np.abs(residual)) < 1e-9
        assert abs(bohmian.continuity_residual(config, 1.7, waveguide)) < 1e-9


def test_flipped_current_breaks_continuity(at_delta):
    x = np.linspace(0.0, 5.0, 200)
    residual = bohmian.continuity_profile(at_delta(2.0), x, Waveguide.MAIN, current_sign=-1.0)
    assert np.max(np.abs(residual)) > 0.5


def test_total_flux_is_uniform(regime_config):
    flux = bohmian.probability_flux_profile(regime_config, np.linspace(0.0, 8.0, 100))
    np.testing.assert_allclose(flux, flux[0], atol=1e-12)


@pytest.mark.parametrize(
    "delta, expected",
    [
        (0.0, 1.0),
        (0.5, 1.0),
        (-0.5, 1.0),
        (2.0, closed_coefficient(3.0, 1.0)),
        (10.0, closed_coefficient(11.0, 9.0)),
        (-5.0, closed_coefficient(4.0, 6.0)),
        (-1.001, closed_coefficient(0.001, 2.001)),
    ],
)
def test_bohmian_coefficient_equals_closed_form(delta, expected, at_delta):
    config = at_delta(delta)
    assert bohmian.rho_aB_coefficient(config) == pytest.approx(expected, rel=1e-6)
    assert bohmian.rho_aB_coefficient(config) == pytest.approx(
        closed_form.rho_a_coefficient(config), rel=1e-6
    )


def test_bohmian_coefficient_with_tiny_epsilon(at_delta):
    config = at_delta(2.0)
    assert bohmian.rho_aB_coefficient(config, 1e-10) == pytest.approx(
        (math.sqrt(6) - math.sqrt(2)) / (math.sqrt(6) + math.sqrt(2)), rel=1e-12
    )


def test_epsilon_must_be_positive(unit_config):
    with pytest.raises(DomainError):
        bohmian.rho_aB_coefficient(unit_config, 0.0)


def test_continuation_converges_monotonically(at_delta):
    points, monotone = bohmian.continuation_sweep(at_delta(-5.0))
    assert monotone
    assert [p.epsilon for p in points] == [1e-3, 1e-6, 1e-9]
    assert points[-1].error < 1e-4
    assert points[-1].value == pytest.approx(0.10102, abs=1e-5)


@pytest.mark.parametrize("delta", [1.001, 2.0, 10.0])
def test_population_reconstructed_from_continuity(delta, at_delta):
    config = at_delta(delta)
    x = np.linspace(0.0, 5.0, 2001)
    rebuilt = bohmian.reconstruct_population(config, x)
    raw, _ = closed_form.population_profile(config, x)
    defined = ~np.isnan(rebuilt)
    assert defined.sum() > 1900
    np.testing.assert_allclose(rebuilt[defined], raw[defined], atol=1e-5)


def test_reconstruction_starts_at_the_edge(unit_config):
    with pytest.raises(DomainError):
        bohmian.reconstruct_population(unit_config, np.linspace(0.5, 2.0, 10))


def test_constant_velocity_trajectory(at_delta):
    config = at_delta(2.0)
    path = bohmian.integrate_trajectory(config, 1.0, Waveguide.MAIN, 0.5, 0.01)
    v = group_velocity(config)
    assert not path.truncated
    assert path.times[-1] == pytest.approx(0.5)
    for t, x in zip(path.times, path.positions):
        assert x == pytest.approx(1.0 + v * t, abs=1e-10)


def test_evanescent_trajectory_stays_put(at_delta):
    path = bohmian.integrate_trajectory(at_delta(-2.0), 2.0, Waveguide.AUXILIARY, 3.0, 0.1)
    assert all(x == 2.0 for x in path.positions)


def test_mixed_trajectory_converges_under_step_halving(at_delta):
    config = at_delta(0.0)
    coarse = bohmian.integrate_trajectory(config, 0.5, Waveguide.MAIN, 1.0, 0.005)
    fine = bohmian.integrate_trajectory(config, 0.5, Waveguide.MAIN, 1.0, 0.0025)
    assert np.all(np.diff(fine.positions) > 0)
    assert coarse.final_position == pytest.approx(fine.final_position, abs=1e-8)


def test_trajectory_cannot_start_at_a_node(at_delta):
    with pytest.raises(DomainError):
        bohmian.integrate_trajectory(
            at_delta(2.0), math.pi / (2 * Q_AT_2), Waveguide.MAIN, 1.0, 0.1
        )
    with pytest.raises(DomainError):
        bohmian.integrate_trajectory(at_delta(2.0), 0.0, Waveguide.MAIN, 1.0, 0.1)
    with pytest.raises(DomainError):
        bohmian.integrate_trajectory(at_delta(2.0), 1.0, Waveguide.MAIN, 1.0, 0.0)


@pytest.mark.parametrize(
    "waveguide, x0, node",
    [
        (Waveguide.AUXILIARY, 5.0, math.pi / Q_AT_2),
        (Waveguide.MAIN, 2.0, math.pi / (2 * Q_AT_2)),
    ],
)
def test_trajectory_stops_before_a_node(at_delta, waveguide, x0, node):
    config = at_delta(2.0)
    v = group_velocity(config)
    path = bohmian.integrate_trajectory(config, x0, waveguide, 1.0, 0.01)
    assert path.truncated
    assert "node" in path.reason
    assert path.times[-1] < 1.0
    assert path.final_position < node
    assert node - path.final_position < v * 0.01 + 1e-9


def test_node_free_run_is_not_truncated(at_delta):
    config = at_delta(2.0)
    path = bohmian.integrate_trajectory(config, 1.0, Waveguide.AUXILIARY, 2.0, 0.01)
    # the first auxiliary node sits past x = 6
    assert not path.truncated
    assert path.reason is None
    assert path.final_position == pytest.approx(1.0 + 2.0 * group_velocity(config), abs=1e-9)


def test_ensemble_keeps_start_order(at_delta):
    config = at_delta(0.0)
    starts = [2.0, 0.5, 1.0]
    paths = bohmian.integrate_ensemble(config, starts, Waveguide.MAIN, 0.5, 0.05)
    assert [p.positions[0] for p in paths] == starts
    single = bohmian.integrate_trajectory(config, 0.5, Waveguide.MAIN, 0.5, 0.05)
    assert paths[1].positions == single.positions
