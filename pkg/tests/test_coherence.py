"""Tests for dielectric loss, quasiparticle tunneling and 1/f dephasing."""

import json
from dataclasses import replace

import numpy as np
import pytest

from symprotect.config import get_config
from symprotect.core.circuit import CircuitSpec, circuit_spectrum
from symprotect.core.coherence import (
    FrequencyResponse,
    LossChannel,
    NoiseChannelSpec,
    QuasiparticleEnv,
    dephasing_time,
    dielectric_loss_rate,
    frequency_response,
    gap_suppression_scan,
    qp_tunneling_rates,
    superconducting_gap,
    synthesize_1f_noise,
    trace_formula_rate,
)
from symprotect.core.coherence.noise import periodogram, perturb_spec
from symprotect.core.coherence.quasiparticles import calibrate_structure_factor, tunneling_prefactor
from symprotect.core.coherence.structure_factors import create_structure_factor
from symprotect.core.coherence.structure_factors.thermal import thermal_energy_GHz
from symprotect.core.numerics import RandomStream
from symprotect.errors import SpecError
from symprotect.runner import run_command


@pytest.fixture(scope="module")
def spec():
    return CircuitSpec(n_max=2)


@pytest.fixture(scope="module")
def states(spec):
    return circuit_spectrum(spec, k=3)


# Dielectric loss


def test_uniform_loss_matches_trace_formula(spec, states):
    """Sum over junction capacitors equals the C^-1 trace formula."""
    channel = LossChannel("junction_intrinsic", tan_delta=1e-6)
    rates = dielectric_loss_rate(spec, states, [channel], 0, 2)
    expected = trace_formula_rate(spec, states, 1e-6, include_geometric=False, i_state=0, j_state=2)

    assert rates["total"] == pytest.approx(expected, rel=1e-10)


def test_equal_tangents_with_geometric_capacitors(spec, states):
    """With equal loss tangents both families add up to the loaded trace formula."""
    channels = [LossChannel("junction_intrinsic", 1e-6), LossChannel("geometric", 1e-6)]
    rates = dielectric_loss_rate(spec, states, channels, 0, 2)
    expected = trace_formula_rate(spec, states, 1e-6, include_geometric=True, i_state=0, j_state=2)

    assert rates["total"] == pytest.approx(expected, rel=1e-10)
    assert rates["junction_intrinsic"] >= 0
    assert rates["geometric"] >= 0


def test_lossless_dielectric(spec, states):
    rates = dielectric_loss_rate(spec, states, [LossChannel("geometric", 0.0)])

    assert rates["total"] == 0.0


def test_protected_pair_has_negligible_dielectric_loss(spec, states):
    """Vanishing charge matrix elements suppress dielectric relaxation."""
    assert dielectric_loss_rate(spec, states)["total"] < 1e-6


def test_loss_channel_validation():
    with pytest.raises(SpecError):
        LossChannel("surface")
    with pytest.raises(SpecError):
        LossChannel("geometric", -1e-6)


# Quasiparticles


def test_gap_and_prefactor():
    """Thin-film gap and tunneling prefactor in GHz and Hz."""
    assert superconducting_gap(10.0) == pytest.approx(58.0)
    assert tunneling_prefactor(1.0) == pytest.approx(32e9)
    with pytest.raises(SpecError):
        superconducting_gap(0.0)


def test_thermal_structure_factor_suppression():
    """A gap difference suppresses both channels exponentially, for either sign of E."""
    model = create_structure_factor("thermal")

    assert model.shape(0.0, 0.0, 0.025) == pytest.approx((2.0, 2.0))
    for energy in (0.8, -0.8):
        g0 = model.shape(energy, 0.0, 0.025)
        g5 = model.shape(energy, 5.0, 0.025)
        g10 = model.shape(energy, 10.0, 0.025)
        for channel in (0, 1):
            assert g0[channel] > g5[channel] > g10[channel] > 0
            assert g10[channel] / g0[channel] < 1e-8


def test_thermal_structure_factor_channels_differ():
    """S- falls off faster than S+ away from the gap edge."""
    model = create_structure_factor("thermal")
    kT = thermal_energy_GHz(0.025)
    g_plus, g_minus = model.shape(0.8, 0.0, 0.025)

    assert g_minus < g_plus
    assert g_minus / g_plus == pytest.approx(kT / (0.8 + kT))


def test_uncalibrated_model_refuses_to_evaluate():
    model = create_structure_factor("thermal")

    assert not model.calibrated
    with pytest.raises(SpecError):
        model.evaluate(1.0, 0.0, 0.025, 5e-9)


def test_unknown_structure_factor_model():
    with pytest.raises(SpecError):
        create_structure_factor("bogus")


def test_qp_rates_need_electron_resolution(spec):
    with pytest.raises(SpecError):
        qp_tunneling_rates(spec, QuasiparticleEnv())


@pytest.fixture(scope="module")
def electron(spec):
    return replace(spec, charge_resolution="electron")


def test_qp_rates_calibrated_and_suppressed(electron):
    """Calibrated rates land near the reference values and fall with the gap difference."""
    env = QuasiparticleEnv()
    report = qp_tunneling_rates(electron, env)
    scan = gap_suppression_scan(electron, env, [0.0, 2.0, 4.0, 6.0, 8.0, 10.0])

    assert 312.0 <= report.rates["0->1"] <= 2814.0
    assert 2.6 <= report.rates["1->0"] <= 24.0
    assert all(rate >= 0 for rate in report.rates.values())
    assert scan[0]["rate_0->1_hz"] == pytest.approx(report.rates["0->1"])
    for column in ("rate_0->1_hz", "rate_1->0_hz", "rate_total_hz"):
        values = [row[column] for row in scan]
        assert all(later <= earlier for earlier, later in zip(values, values[1:]))
    assert scan[-1]["rate_0->1_hz"] < 1e-5 * scan[0]["rate_0->1_hz"]


def test_qp_rates_linear_in_density(electron):
    """Doubling x_qp doubles every rate; the calibration does not absorb it."""
    single = qp_tunneling_rates(electron, QuasiparticleEnv(x_qp=5e-9))
    double = qp_tunneling_rates(electron, QuasiparticleEnv(x_qp=1e-8))

    assert single.metadata["amplitude_plus"] == pytest.approx(double.metadata["amplitude_plus"])
    for label, rate in single.rates.items():
        assert double.rates[label] == pytest.approx(2.0 * rate, rel=1e-9, abs=1e-30)


def test_qp_rates_vanish_without_junctions():
    """With every E_J at zero no quasiparticle tunnels and all rates are zero."""
    bare = CircuitSpec(n_max=2, charge_resolution="electron", E_Jr=0.0, E_Ja=0.0, E_Jl=0.0)
    env = QuasiparticleEnv()

    report = qp_tunneling_rates(bare, env)
    scan = gap_suppression_scan(bare, env, [0.0, 5.0])

    assert report.rates == {"0->0": 0.0, "0->1": 0.0, "1->0": 0.0, "1->1": 0.0, "total": 0.0}
    assert all(row["rate_total_hz"] == 0.0 for row in scan)
    assert not calibrate_structure_factor(bare, env).calibrated


# 1/f noise and dephasing


def test_noise_channel_validation():
    with pytest.raises(SpecError):
        NoiseChannelSpec("flux", n_samples=2000)
    with pytest.raises(SpecError):
        NoiseChannelSpec("magnetic")


def test_synthesized_noise_variance():
    """Ensemble-averaged power matches the integrated PSD."""
    channel = NoiseChannelSpec("flux", amplitude=1.0, n_samples=2001)
    stream = RandomStream(17, 0)
    powers = []
    for r in range(100):
        trace = synthesize_1f_noise(channel, stream.substream(r))
        assert trace.max_imag < 1e-10
        powers.append(np.mean(trace.values**2))

    assert np.mean(powers) == pytest.approx(channel.expected_variance(), rel=0.1)


def test_perturb_spec():
    """Gate and flux offsets add; critical-current offsets scale E_J."""
    base = CircuitSpec(n_max=2)
    shifted = perturb_spec(base, {"Ng1": 0.01, "flux_ext": 0.02, "EJ3": 0.1})

    assert shifted.gate_charges[1] == pytest.approx(0.51)
    assert shifted.flux_ext == pytest.approx(0.52)
    assert shifted.ej_multipliers[3] == pytest.approx(1.1)
    with pytest.raises(SpecError):
        perturb_spec(base, {"temperature": 1.0})


def test_frequency_response_of_quadratic_surface():
    """Finite differences recover an exact quadratic f01 surface."""

    def surface(spec):
        x = spec.gate_charges[0] - 0.5
        y = spec.gate_charges[1] - 0.5
        return 1.0 + 2.0 * x + 3.0 * y**2 + x * y

    response = frequency_response(CircuitSpec(n_max=2), ["Ng0", "Ng1"], threads=1, f01=surface)

    np.testing.assert_allclose(response.gradient, [2e9, 0.0], atol=1e2)
    np.testing.assert_allclose(response.hessian, [[0.0, 1e9], [1e9, 6e9]], rtol=1e-5, atol=1e4)
    assert response.asymmetry() == 0.0
    assert response.f01_GHz == pytest.approx(1.0)


def _flat_response(gradient):
    p = len(gradient)
    return FrequencyResponse(
        parameters=tuple(f"Ng{i}" for i in range(p)),
        gradient=np.asarray(gradient, dtype=float),
        hessian=np.zeros((p, p)),
        f01_GHz=1.0,
        base_spec=CircuitSpec(n_max=2),
    )


def test_insensitive_qubit_never_dephases():
    """A zero response gives f(t) = 1 and only a lower bound on T_phi."""
    channel = NoiseChannelSpec("charge", n_samples=201)
    result = dephasing_time(_flat_response([0.0, 0.0]), channel, n_realizations=3, master_seed=1)

    np.testing.assert_allclose(result.decay, 1.0)
    assert result.lower_bound
    assert result.rate == 0.0


def test_dephasing_independent_of_threads():
    """The ensemble average does not depend on the worker count."""
    channel = NoiseChannelSpec("charge", amplitude=1e-2, n_samples=201, df=100.0)
    response = _flat_response([1e6, 2e6])
    single = dephasing_time(response, channel, n_realizations=6, master_seed=4, threads=1)
    pooled = dephasing_time(response, channel, n_realizations=6, master_seed=4, threads=3)

    np.testing.assert_array_equal(single.decay, pooled.decay)


def test_dephasing_rejects_empty_ensemble():
    with pytest.raises(SpecError):
        dephasing_time(_flat_response([1.0]), NoiseChannelSpec("charge", n_samples=201), n_realizations=0)


def test_synthesized_noise_has_one_over_f_spectrum():
    """The averaged periodogram falls with a log-log slope of -1."""
    channel = NoiseChannelSpec("flux", amplitude=1.0, n_samples=4001, df=1.0)
    stream = RandomStream(5, 0)
    estimates = []
    for r in range(20):
        frequencies, estimate = periodogram(synthesize_1f_noise(channel, stream.substream(r)))
        estimates.append(estimate)
    mean = np.mean(estimates, axis=0)

    slope, _ = np.polyfit(np.log(frequencies[1:]), np.log(mean[1:]), 1)
    assert slope == pytest.approx(-1.0, abs=0.05)


def test_decay_function_starts_at_one_and_stays_bounded():
    channel = NoiseChannelSpec("charge", amplitude=1e-2, n_samples=201, df=100.0)
    result = dephasing_time(_flat_response([1e6, 2e6]), channel, n_realizations=8, master_seed=2, threads=1)

    assert result.decay[0] == pytest.approx(1.0)
    assert np.all(np.abs(result.decay) <= 1.0 + 1e-12)
    assert result.times[0] == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("kind,expected_s", [("charge", 10.5e-3), ("critical_current", 7.3e-3)])
def test_dephasing_time_at_optimal_point(tmp_path, monkeypatch, kind, expected_s):
    """Reduced-fidelity T_phi lands within a factor 3 of 10.5 ms (charge) and 7.3 ms (I_c)."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))
    config = get_config()
    config["run"]["fidelity"] = "reduced"
    config["noise"]["channels"] = [kind]
    run_command("dephasing", config, tmp_path)

    result = json.loads((tmp_path / "dephasing.json").read_text())[kind]
    assert not result["lower_bound"]
    assert expected_s / 3.0 <= result["T_phi_s"] <= 3.0 * expected_s
