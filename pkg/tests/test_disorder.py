"""Tests for the fabrication-disorder Monte Carlo."""

from unittest.mock import patch

import numpy as np
import pytest

from symprotect.core.circuit import CircuitSpec
from symprotect.core.disorder import (
    DisorderModel,
    HistogramReport,
    MetricSettings,
    evaluate_metrics,
    mc_histogram,
    sample_disordered_spec,
)
from symprotect.core.numerics import RandomStream
from symprotect.errors import NumericalError, SpecError


@pytest.fixture
def base():
    return CircuitSpec(n_max=2)


def test_model_validation():
    with pytest.raises(SpecError):
        DisorderModel(sigma_junction=-0.1)
    with pytest.raises(SpecError):
        DisorderModel(channels=("junction", "substrate"))


def test_scenario_names():
    model = DisorderModel()

    assert model.scenario == "all"
    assert model.only("gate").scenario == "gate"
    assert model.only("loop", "gate").sigma("junction") == 0.0


def test_zero_disorder_returns_base(base):
    model = DisorderModel(sigma_junction=0.0, sigma_loop=0.0, sigma_gate=0.0)
    spec = sample_disordered_spec(base, model, RandomStream(0, 0))

    assert spec.ej_multipliers == pytest.approx(base.ej_multipliers)
    assert spec.flux == pytest.approx(base.flux)
    assert spec.gate_charges == pytest.approx(base.gate_charges)


def test_masking_leaves_other_channels_unchanged(base):
    """Disabling channels does not shift the draws of the remaining ones."""
    full = sample_disordered_spec(base, DisorderModel(), RandomStream(5, 2))
    gate_only = sample_disordered_spec(base, DisorderModel().only("gate"), RandomStream(5, 2))

    assert gate_only.gate_charges == pytest.approx(full.gate_charges)
    assert gate_only.ej_multipliers == pytest.approx(base.ej_multipliers)
    assert gate_only.flux == pytest.approx(base.flux)
    assert gate_only.gate_charges != base.gate_charges


def test_charging_energy_follows_junction_area(base):
    """E_C scales inversely with the area factor (1 + alpha)."""
    model = DisorderModel().only("junction")
    spec = sample_disordered_spec(base, model, RandomStream(1, 0))

    assert np.all(np.array(spec.ec_multipliers) > 0)
    assert not np.allclose(spec.ec_multipliers, 1.0)


def test_unknown_metric_rejected(base):
    with pytest.raises(SpecError):
        evaluate_metrics(base, ["t1_hz"], MetricSettings())


def test_reduced_fidelity_caps_truncation():
    settings = MetricSettings(fidelity="reduced", reduced_n_max=3)

    assert settings.adapt_spec(CircuitSpec(n_max=7)).n_max == 3
    assert settings.adapt_spec(CircuitSpec(n_max=2)).n_max == 2
    assert MetricSettings(n_realizations=200, fidelity="reduced").realizations == 50


def test_histogram_needs_ten_samples(base):
    with pytest.raises(SpecError):
        mc_histogram(base, DisorderModel(), "f01_MHz", 5, master_seed=0)


def test_histogram_reproducible_across_threads(base):
    """Sample i depends only on (seed, i)."""
    model = DisorderModel().only("gate")
    single = mc_histogram(base, model, "f01_MHz", 10, master_seed=3, threads=1)
    pooled = mc_histogram(base, model, "f01_MHz", 10, master_seed=3, threads=4)

    assert single.values == pooled.values
    assert single.as_dict()["n_samples"] == 10
    assert single.std >= 0


def test_histogram_aborts_on_widespread_failure(base):
    """More than 10% failed samples is an error, not a thinner histogram."""
    with patch("symprotect.core.disorder.evaluate_metrics", side_effect=NumericalError("no convergence")):
        with pytest.raises(NumericalError):
            mc_histogram(base, DisorderModel(), "f01_MHz", 10, master_seed=0, threads=1)


def test_histogram_tolerates_single_failure(base):
    """One failed sample in ten is reported and dropped."""
    calls = iter(range(100))

    def flaky(spec, metrics, settings, stream=None):
        if next(calls) == 0:
            raise NumericalError("no convergence")
        return {"f01_MHz": 818.0}

    with patch("symprotect.core.disorder.evaluate_metrics", side_effect=flaky):
        report = mc_histogram(base, DisorderModel(), "f01_MHz", 10, master_seed=0, threads=1)

    assert len(report.values) == 9
    assert report.failures[0]["error"].startswith("numerical")
    assert report.mean == pytest.approx(818.0)


def test_report_reference_mean():
    report = HistogramReport("f01_MHz", [800.0, 836.0], seed=0, n_requested=2, scenario="gate")

    assert report.reference_mean == 818.0
    assert report.mean == pytest.approx(818.0)
