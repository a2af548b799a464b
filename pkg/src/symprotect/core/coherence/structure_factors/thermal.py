"""Thermal quasiparticle structure factor with gap-asymmetric electrodes."""

import logging
from typing import Any, Dict, Tuple

import numpy as np
import scipy.constants as const

from .base import StructureFactorModel

logger = logging.getLogger(__name__)


def thermal_energy_GHz(temperature_K: float) -> float:
    """k_B T / h in GHz."""
    return const.k * temperature_K / const.h / 1e9


class ThermalStructureFactor(StructureFactorModel):
    """Thermally activated tunneling between electrodes with gaps differing by dd.

    A quasiparticle at the lower gap edge needs E - dd >= 0 from the qubit to
    cross into the larger-gap electrode; the deficit is paid from the thermal
    tail, exp((E - dd)/kT). The reverse path starts from the larger gap, whose
    occupation carries exp(-dd/kT). Crossing a gap step also dilutes the
    coherence-factor enhancement of the gap edge by sqrt(kT / (dd + kT)).

    S+ (the cos^2 channel) is this activated weight. S- (sin^2) is further
    reduced by kT / (|E| + dd + kT). Every factor is non-increasing in dd.
    """

    def __init__(self, config: Dict[str, Any]):
        super().__init__(config)
        self.minimum_temperature_K = config.get("minimum_temperature_K", 1e-3)

    def _activation(self, energy_GHz: float, kT: float) -> float:
        return float(np.exp(min(0.0, energy_GHz / kT)))

    def shape(
        self, energy_GHz: float, delta_gap_GHz: float, temperature_K: float
    ) -> Tuple[float, float]:
        kT = thermal_energy_GHz(max(temperature_K, self.minimum_temperature_K))
        dd = abs(delta_gap_GHz)
        forward = self._activation(energy_GHz - dd, kT)
        reverse = np.exp(-dd / kT) * self._activation(energy_GHz + dd, kT)
        g_plus = (forward + reverse) * np.sqrt(kT / (dd + kT))
        g_minus = g_plus * kT / (abs(energy_GHz) + dd + kT)
        return float(g_plus), float(g_minus)
