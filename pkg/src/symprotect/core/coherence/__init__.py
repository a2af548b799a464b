"""Decoherence budget of the ring circuit."""

from .dielectric import LossChannel, default_loss_channels, dielectric_loss_rate, trace_formula_rate
from .noise import (
    DephasingResult,
    FrequencyResponse,
    NoiseChannelSpec,
    NoiseTrace,
    dephasing_time,
    frequency_response,
    periodogram,
    synthesize_1f_noise,
)
from .quasiparticles import (
    QuasiparticleEnv,
    RateReport,
    calibrate_structure_factor,
    gap_suppression_scan,
    qp_tunneling_rates,
    superconducting_gap,
)

__all__ = [
    "LossChannel",
    "default_loss_channels",
    "dielectric_loss_rate",
    "trace_formula_rate",
    "DephasingResult",
    "FrequencyResponse",
    "NoiseChannelSpec",
    "NoiseTrace",
    "dephasing_time",
    "frequency_response",
    "periodogram",
    "synthesize_1f_noise",
    "QuasiparticleEnv",
    "RateReport",
    "calibrate_structure_factor",
    "gap_suppression_scan",
    "qp_tunneling_rates",
    "superconducting_gap",
]
