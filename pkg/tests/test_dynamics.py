"""Tests for resonator coupling, open-system evolution and pulse protocols."""

import numpy as np
import pytest

from symprotect.core.circuit import CircuitSpec, circuit_spectrum
from symprotect.core.dynamics import (
    TWO_PI,
    CoupledSystem,
    FluxResponseTable,
    PulseSchedule,
    ResonatorSpec,
    annihilation,
    coupled_hamiltonian,
    dispersive_parameters,
    evolve_lindblad,
    liouvillian,
    numerical_dispersive_shift,
    purcell_initialization,
    renormalize_shared_inductance,
    stirap_transfer,
    thermal_ground_population,
)
from symprotect.errors import NumericalError, SpecError, TruncationError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


@pytest.fixture
def resonator():
    return ResonatorSpec()


@pytest.fixture
def crossing_table():
    """Qubit tuned from below the resonator to above it over the ramp."""
    return FluxResponseTable(
        fractions=np.array([0.0, 1.0]),
        f01_GHz=np.array([3.0, 3.6]),
        g01_GHz=np.array([0.1, 0.1]),
        target_scale=1.17,
    )


def test_resonator_parameters(resonator):
    """1.5 nH and 1.48 pF give 3.38 GHz, 31.8 ohm and Q near 11300."""
    assert resonator.frequency_GHz == pytest.approx(3.378, rel=1e-3)
    assert resonator.impedance == pytest.approx(31.8, rel=1e-2)
    assert resonator.quality_factor == pytest.approx(11300, rel=1e-2)


def test_resonator_validation():
    with pytest.raises(SpecError):
        ResonatorSpec(L=0.0)
    with pytest.raises(SpecError):
        ResonatorSpec(fock_cutoff=1)


def test_thermal_ground_population():
    """82.8% ground population at 0.818 GHz and 25 mK."""
    assert thermal_ground_population(0.818, 0.025) == pytest.approx(0.8278, abs=5e-4)
    assert thermal_ground_population(0.818, 0.0) == 1.0


def test_inductance_renormalization():
    """40 pH in series with E_Ja = 5 GHz lowers E_J by about 6.1 MHz."""
    result = renormalize_shared_inductance(40e-12, 5.0)

    assert result.delta_E_J_GHz * 1e3 == pytest.approx(6.11, rel=1e-2)
    assert result.delta_I_c * 1e9 == pytest.approx(0.0123, rel=1e-2)
    assert renormalize_shared_inductance(0.0, 5.0).delta_E_J_GHz == 0.0
    with pytest.raises(SpecError):
        renormalize_shared_inductance(-1e-12, 5.0)


def test_pulse_schedule_validation():
    with pytest.raises(SpecError):
        PulseSchedule("square")
    with pytest.raises(SpecError):
        PulseSchedule.stirap(delay=-5e-9)
    with pytest.raises(SpecError):
        PulseSchedule.stirap(shape="square")
    with pytest.raises(SpecError):
        PulseSchedule.flux_ramp(ramp_up=0.0)


def test_flux_ramp_profile():
    """Linear up, flat hold, linear down."""
    ramp = PulseSchedule.flux_ramp(ramp_up=10e-6, hold=5e-6, ramp_down=10e-6)

    assert ramp.duration == pytest.approx(25e-6)
    assert ramp.ramp_fraction(0.0) == 0.0
    assert ramp.ramp_fraction(5e-6) == pytest.approx(0.5)
    assert ramp.ramp_fraction(12e-6) == 1.0
    assert ramp.ramp_fraction(20e-6) == pytest.approx(0.5)
    assert ramp.ramp_fraction(25e-6) == pytest.approx(0.0)


def test_stirap_pulse_order():
    """Stokes peaks first, the pump one delay later."""
    pulses = PulseSchedule.stirap(sigma=20e-9, delay=15e-9, shape="gaussian")

    assert pulses.duration == pytest.approx(215e-9)
    assert pulses.stokes(pulses.stokes_center) == pytest.approx(pulses.peak_stokes)
    assert pulses.pump(pulses.stokes_center) < pulses.stokes(pulses.stokes_center)
    assert pulses.scaled(2.0).peak_pump == pytest.approx(2.0 * pulses.peak_pump)


def test_stirap_mixing_angle_reaches_its_limits():
    """The shaped pair starts purely Stokes and ends purely pump."""
    pulses = PulseSchedule.stirap()
    midpoint = 0.5 * (pulses.stokes_center + pulses.pump_center)

    assert pulses.mixing_angle(0.0) == pytest.approx(0.0, abs=1e-12)
    assert pulses.mixing_angle(midpoint) == pytest.approx(np.pi / 4)
    assert pulses.mixing_angle(pulses.duration) == pytest.approx(np.pi / 2, abs=1e-12)
    assert pulses.pump(pulses.stokes_center) < pulses.stokes(pulses.stokes_center)
    assert pulses.stokes(pulses.pump_center) < pulses.pump(pulses.pump_center)
    assert pulses.pump(midpoint) == pytest.approx(pulses.stokes(midpoint))

    bare = PulseSchedule.stirap(shape="gaussian")
    assert 0.01 < bare.mixing_angle(0.0) < 0.05
    assert np.pi / 2 - bare.mixing_angle(bare.duration) > 0.01


def test_liouvillian_preserves_trace():
    """vec(1)^T L = 0 for any H and collapse operators."""
    rng = np.random.default_rng(2)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = a + a.conj().T
    c = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))

    generator = liouvillian(h, [c])

    np.testing.assert_allclose(np.eye(3).ravel() @ generator, 0.0, atol=1e-12)


@pytest.mark.parametrize("method", ["rk", "piecewise"])
def test_rabi_oscillation(method):
    """P1(t) = sin^2(Omega t / 2) under a resonant drive."""
    omega = TWO_PI * 1e6
    times = np.linspace(0.0, 1e-6, 41)
    rho0 = np.diag([1.0, 0.0]).astype(complex)

    result = evolve_lindblad(0.5 * omega * SIGMA_X, [], rho0, times, method=method)

    np.testing.assert_allclose(result.populations()[:, 1], np.sin(0.5 * omega * times) ** 2, atol=1e-7)


@pytest.mark.parametrize("method", ["rk", "piecewise"])
def test_energy_relaxation(method):
    """An excited qubit decays as exp(-gamma t) and the trace stays 1."""
    gamma = 1e6
    times = np.linspace(0.0, 3e-6, 31)
    rho0 = np.diag([0.0, 1.0]).astype(complex)

    result = evolve_lindblad(np.zeros((2, 2)), [np.sqrt(gamma) * LOWER], rho0, times, method=method)

    np.testing.assert_allclose(result.populations()[:, 1], np.exp(-gamma * times), atol=1e-7)
    np.testing.assert_allclose(result.traces(), 1.0, atol=1e-9)


def test_unknown_lindblad_method():
    with pytest.raises(NumericalError):
        evolve_lindblad(np.zeros((2, 2)), [], np.eye(2) / 2, np.array([0.0, 1.0]), method="euler")


def test_stirap_without_drive_leaves_ground_state():
    """No pulses, no transfer."""
    result = stirap_transfer([0.0, 0.818, 5.0, 6.0, 7.0], PulseSchedule.stirap(peak_rabi=0.0))

    assert result.efficiency == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(result.populations[-1, 0], 1.0, atol=1e-9)


def test_stirap_adiabatic_transfer():
    """Long, strong counter-intuitive pulses move |0> to |1>."""
    pulses = PulseSchedule.stirap(sigma=100e-9, delay=100e-9, peak_rabi=TWO_PI * 100e6, time_step=2e-9)
    result = stirap_transfer([0.0, 0.818, 5.0, 6.0, 7.0], pulses)

    assert result.efficiency >= 0.999
    assert result.pump_frequency_GHz == pytest.approx(6.0)
    assert result.stokes_frequency_GHz == pytest.approx(6.0 - 0.818)


def test_stirap_robust_to_intermediate_decay():
    """The dark state barely populates the intermediate level."""
    pulses = PulseSchedule.stirap(sigma=100e-9, delay=100e-9, peak_rabi=TWO_PI * 100e6, time_step=2e-9)
    energies = [0.0, 0.818, 5.0, 6.0, 7.0]
    clean = stirap_transfer(energies, pulses, gamma_intermediate=20.0)
    lossy = stirap_transfer(energies, pulses, gamma_intermediate=2000.0)

    assert clean.efficiency - lossy.efficiency < 0.01


def test_stirap_default_schedule():
    """The 20 ns / 15 ns schedule moves at least 99.9% of the population."""
    result = stirap_transfer([0.0, 0.818, 5.0, 6.0, 7.0], PulseSchedule.stirap())

    assert result.efficiency >= 0.999
    assert result.populations[-1, 3] < 1e-4


def test_bare_gaussian_pair_loses_population_at_the_edges():
    """Same envelopes without the shaped mixing angle fall short of 99.9%."""
    energies = [0.0, 0.818, 5.0, 6.0, 7.0]
    bare = stirap_transfer(energies, PulseSchedule.stirap(shape="gaussian"))
    shaped = stirap_transfer(energies, PulseSchedule.stirap())

    assert bare.efficiency < 0.999
    assert bare.efficiency < shaped.efficiency


def test_stirap_efficiency_grows_with_pulse_area():
    """Five peak amplitudes spanning a factor two around the default."""
    energies = [0.0, 0.818, 5.0, 6.0, 7.0]
    base = PulseSchedule.stirap()
    efficiencies = [
        stirap_transfer(energies, base.scaled(factor)).efficiency
        for factor in np.geomspace(1 / np.sqrt(2), np.sqrt(2), 5)
    ]

    assert min(efficiencies) >= 0.999
    assert np.all(np.diff(efficiencies) >= -1e-4)


def test_stirap_rejects_bad_intermediate():
    with pytest.raises(SpecError):
        stirap_transfer([0.0, 0.818, 5.0], intermediate=1)


def test_initialization_through_resonance(crossing_table, resonator):
    """Sweeping through the lossy resonator cools the qubit."""
    result = purcell_initialization(crossing_table, resonator, PulseSchedule.flux_ramp())

    assert result.final_fidelity >= 0.99
    assert result.final_fidelity > result.initial_population
    assert result.max_fock_population < 1e-4
    assert len(result.records()) == result.times.size


def test_initialization_without_coupling_keeps_thermal_state(resonator):
    """g = 0 leaves the thermal qubit population untouched."""
    table = FluxResponseTable(np.array([0.0, 1.0]), np.array([0.818, 3.6]), np.zeros(2), 1.17)
    result = purcell_initialization(table, resonator, PulseSchedule.flux_ramp(time_step=100e-9))

    assert result.final_fidelity == pytest.approx(result.initial_population, abs=1e-8)
    assert result.initial_population == pytest.approx(0.8278, abs=5e-4)


def test_initialization_detects_fock_truncation(crossing_table):
    """Two Fock levels cannot hold the thermal resonator."""
    with pytest.raises(TruncationError):
        purcell_initialization(
            crossing_table, ResonatorSpec(fock_cutoff=2), PulseSchedule.flux_ramp(time_step=100e-9)
        )


def test_initialization_needs_flux_ramp(crossing_table, resonator):
    with pytest.raises(SpecError):
        purcell_initialization(crossing_table, resonator, PulseSchedule.stirap())


def test_resonant_fraction(crossing_table):
    """3.378 GHz is crossed 63% of the way up the ramp."""
    assert crossing_table.resonant_fraction(3.378) == pytest.approx(0.63)
    assert crossing_table.resonant_fraction(5.0) is None


def test_uncoupled_dispersive_shifts_vanish(resonator):
    energies = [0.0, 0.818, 5.0, 6.0]
    report = dispersive_parameters(energies, np.zeros((4, 4)), resonator)

    assert report.chi == 0.0
    np.testing.assert_array_equal(report.lamb_shifts, 0.0)
    assert report.dressed_f01 == pytest.approx(0.818)
    assert report.dressed_fr == pytest.approx(resonator.frequency_GHz)
    assert report.near_resonant == []


def test_dispersive_shift_matches_diagonalization(resonator):
    """Second-order chi agrees with exact diagonalization at weak coupling."""
    energies = np.array([0.0, 0.818])
    g = np.array([[0.0, 0.01], [0.01, 0.0]])
    a = annihilation(resonator.fock_cutoff)
    n = resonator.fock_cutoff
    hamiltonian = (
        np.kron(np.diag(energies), np.eye(n))
        + resonator.frequency_GHz * np.kron(np.eye(2), a.conj().T @ a)
        + np.kron(g, a + a.conj().T)
    )
    system = CoupledSystem(hamiltonian, energies, g, resonator)

    perturbative = dispersive_parameters(energies, g, resonator).chi
    exact = numerical_dispersive_shift(system)

    assert exact == pytest.approx(perturbative, rel=1e-2)
    assert perturbative < 0


def test_coupled_hamiltonian_hermitian(resonator):
    states = circuit_spectrum(CircuitSpec(n_max=2), k=3)
    system = coupled_hamiltonian(states, resonator, n_levels=3)

    assert system.hamiltonian.shape == (3 * resonator.fock_cutoff,) * 2
    np.testing.assert_allclose(system.hamiltonian, system.hamiltonian.conj().T, atol=1e-12)
    with pytest.raises(SpecError):
        coupled_hamiltonian(states, resonator, n_levels=5)
