"""Core simulation modules for symprotect."""

from .circuit import CircuitSpec, CircuitStates, circuit_spectrum, parameter_sweep, potential_landscape
from .disorder import DisorderModel, HistogramReport, MetricSettings, mc_histogram, mc_histograms
from .dynamics import (
    PulseSchedule,
    ResonatorSpec,
    dispersive_parameters,
    evolve_lindblad,
    purcell_initialization,
    renormalize_shared_inductance,
    stirap_transfer,
)
from .numerics import RandomStream, SparseOperator, Spectrum, lowest_eigenpairs
from .spin_model import SpinChainSpec, disorder_scan_spin, phase_scan, protection_diagnostics

__all__ = [
    "CircuitSpec",
    "CircuitStates",
    "circuit_spectrum",
    "parameter_sweep",
    "potential_landscape",
    "DisorderModel",
    "HistogramReport",
    "MetricSettings",
    "mc_histogram",
    "mc_histograms",
    "PulseSchedule",
    "ResonatorSpec",
    "dispersive_parameters",
    "evolve_lindblad",
    "purcell_initialization",
    "renormalize_shared_inductance",
    "stirap_transfer",
    "RandomStream",
    "SparseOperator",
    "Spectrum",
    "lowest_eigenpairs",
    "SpinChainSpec",
    "disorder_scan_spin",
    "phase_scan",
    "protection_diagnostics",
]
