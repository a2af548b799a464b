"""Tests for the four-node ring circuit."""

import numpy as np
import pytest
import scipy.constants as const

from symprotect.core.circuit import (
    ChargeBasis,
    CircuitSpec,
    apply_sweep_point,
    build_circuit_hamiltonian,
    capacitance_matrix,
    charge_window,
    charging_energy_to_capacitance,
    circuit_potential,
    circuit_spectrum,
    critical_current,
    electron_tunneling_operator,
    parameter_sweep,
    phase_profile,
    potential_landscape,
    protection_elements,
    truncation_convergence,
)
from symprotect.errors import SpecError


@pytest.fixture
def small_spec():
    """Optimal-point junctions with a coarse charge truncation."""
    return CircuitSpec(n_max=2)


@pytest.fixture
def small_states(small_spec):
    return circuit_spectrum(small_spec, k=4)


def test_unit_conversions():
    """E_C -> C and E_J -> I_c follow the textbook relations."""
    assert charging_energy_to_capacitance(1.0) == pytest.approx(const.e**2 / (2 * const.h * 1e9))
    assert critical_current(1.0) == pytest.approx(2.0133e-9, rel=1e-3)


def test_spec_validation():
    """Bad parameters are rejected at construction."""
    with pytest.raises(SpecError):
        CircuitSpec(E_Cr=0.0)
    with pytest.raises(SpecError):
        CircuitSpec(n_max=1)
    with pytest.raises(SpecError):
        CircuitSpec(ej_multipliers=(1.0,) * 3)


def test_capacitance_matrix_structure(small_spec):
    """Symmetric, positive definite, with radial capacitances as row sums."""
    matrix = capacitance_matrix(small_spec)
    radial = charging_energy_to_capacitance(small_spec.E_Cr)

    np.testing.assert_allclose(matrix, matrix.T)
    assert np.all(np.linalg.eigvalsh(matrix) > 0)
    np.testing.assert_allclose(matrix.sum(axis=1), radial, rtol=1e-12)


def test_geometric_capacitances_scale_matrix(small_spec):
    """Parallel geometric capacitors scale every junction capacitance."""
    plain = capacitance_matrix(small_spec, include_geometric=False)
    loaded = capacitance_matrix(small_spec, include_geometric=True)

    np.testing.assert_allclose(loaded, plain * (1.0 + small_spec.geometric_cap_fraction))


def test_charge_window_centering():
    """Windows are symmetric about the rounded gate charge."""
    np.testing.assert_array_equal(charge_window(0.0, 2), [-2, -1, 0, 1, 2])
    np.testing.assert_array_equal(charge_window(0.5, 2), [-2, -1, 0, 1, 2, 3])


def test_hamiltonian_hermitian(small_spec):
    """The sparse Hamiltonian is Hermitian with the expected dimension."""
    operator = build_circuit_hamiltonian(small_spec)

    assert operator.dimension == 6**4
    assert operator.hermiticity_error() < 1e-12


def test_spectrum_ordering(small_states):
    """Energies are nondecreasing and f_ij is antisymmetric."""
    assert np.all(np.diff(small_states.energies) >= 0)
    f = small_states.transition_frequencies
    np.testing.assert_allclose(f, -f.T)
    assert small_states.f01 > 0


def test_state_index_out_of_range(small_states):
    with pytest.raises(SpecError):
        small_states.state(10)


def test_protection_at_symmetric_point():
    """At uniform half-flux bias the lowest pair is protected."""
    states = circuit_spectrum(CircuitSpec(n_max=3), k=4)
    charge, current = protection_elements(states)

    assert charge < 1e-6
    assert current < 1e-6


def test_odd_parity_needs_electron_resolution(small_spec):
    """Odd sectors only exist with electron-resolved charges."""
    with pytest.raises(SpecError):
        ChargeBasis.for_spec(small_spec, (1, 0, 0, 0))
    with pytest.raises(SpecError):
        electron_tunneling_operator(small_spec, 0)


def test_electron_tunneling_switches_parity():
    """A radial electron flips one node; a branch electron flips two."""
    spec = CircuitSpec(n_max=2, charge_resolution="electron")
    radial, radial_out = electron_tunneling_operator(spec, 0)
    branch, branch_out = electron_tunneling_operator(spec, 4)

    assert radial_out == (1, 0, 0, 0)
    assert branch_out == (1, 1, 0, 0)
    assert radial.matrix.shape == (ChargeBasis.for_spec(spec, radial_out).size, 6**4)
    assert branch.matrix.nnz > 0


def test_potential_periodic(small_spec):
    """V is 2 pi periodic in every node phase."""
    rng = np.random.default_rng(3)
    theta = rng.uniform(-np.pi, np.pi, size=(4, 10))
    shifted = theta.copy()
    shifted[2] += 2 * np.pi

    np.testing.assert_allclose(circuit_potential(small_spec, theta), circuit_potential(small_spec, shifted))


def test_line_minima_location(small_spec):
    """Minima along theta_n = n x sit near |x| = pi/2."""
    grid = np.linspace(-np.pi, np.pi, 24, endpoint=False)
    landscape = potential_landscape(small_spec, grid, grid)

    assert landscape.minima
    assert landscape.line_minima
    for x, _ in landscape.line_minima:
        assert 0.45 * np.pi <= abs(x) <= 0.65 * np.pi


def test_phase_profile_normalized(small_states):
    """sum |psi(x)|^2 dx = 1."""
    x, density = phase_profile(small_states, 0)

    assert np.all(density >= 0)
    assert density.sum() * (x[1] - x[0]) == pytest.approx(1.0)


def test_sweep_keeps_plasma_frequency(small_spec):
    """Junction-ratio axes hold sqrt(8 E_J E_C) fixed."""
    spec = apply_sweep_point(small_spec, {"EJa_over_EJr": 1.6, "EJl_over_EJr": 2.4})

    assert spec.E_Ja == pytest.approx(1.6 * small_spec.E_Jr)
    assert np.sqrt(8 * spec.E_Ja * spec.E_Ca) == pytest.approx(10.0)
    assert np.sqrt(8 * spec.E_Jl * spec.E_Cl) == pytest.approx(10.0)


def test_sweep_offset_moves_flux_and_gate(small_spec):
    spec = apply_sweep_point(small_spec, {"offset": 0.1})

    assert spec.flux == pytest.approx((0.6,) * 4)
    assert spec.gate_charges == pytest.approx((0.6,) * 4)
    assert spec.flux_ext == pytest.approx(0.6)


def test_parameter_sweep_rows(small_spec):
    """Rows come back in grid order with frequencies filled in."""
    rows = parameter_sweep(small_spec, [("gate_offset", [0.0, 0.05])], k=3, threads=2)

    assert [r.params for r in rows] == [{"gate_offset": 0.0}, {"gate_offset": 0.05}]
    assert all(r.error is None for r in rows)
    assert len(rows[0].frequencies) == 2
    assert "f01_GHz" in rows[0].as_record()


def test_parameter_sweep_rejects_unknown_axis(small_spec):
    with pytest.raises(SpecError):
        parameter_sweep(small_spec, [("E_Cr", [1.0])])


def test_truncation_convergence_rows(small_spec):
    """The first row has no previous truncation to compare against."""
    rows = truncation_convergence(small_spec, (2, 3))

    assert [r["n_max"] for r in rows] == [2, 3]
    assert np.isnan(rows[0]["relative_change"])
    assert rows[1]["relative_change"] >= 0


@pytest.mark.slow
def test_optimal_point_transition_frequency():
    """Full truncation reproduces f01 near 0.818 GHz."""
    states = circuit_spectrum(CircuitSpec(), k=3)

    assert states.f01 == pytest.approx(0.818, rel=0.02)
