"""Base class for quasiparticle structure-factor models."""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

from ....errors import SpecError

logger = logging.getLogger(__name__)


class StructureFactorModel(ABC):
    """Spectral weight (S+, S-) of the quasiparticle bath.

    Subclasses supply the energy dependence through :meth:`shape`; the two
    amplitudes A+ and A- scale it linearly, which is what makes the model
    calibratable against reference rates.
    """

    def __init__(self, config: Dict[str, Any]):
        """Initialize the structure-factor model.

        Args:
            config: Model-specific configuration dictionary
        """
        self.config = config
        self.description = config.get("description", "Unknown structure-factor model")
        self.amplitude_plus: Optional[float] = config.get("amplitude_plus")
        self.amplitude_minus: Optional[float] = config.get("amplitude_minus")

    @abstractmethod
    def shape(
        self, energy_GHz: float, delta_gap_GHz: float, temperature_K: float
    ) -> Tuple[float, float]:
        """Unit-amplitude energy dependence of (S+, S-).

        Args:
            energy_GHz: Energy released to the bath by the tunneling event, E_i - E'_j
            delta_gap_GHz: Gap difference across the junction
            temperature_K: Device temperature

        Returns:
            Tuple of (g_plus, g_minus), both non-negative
        """
        pass

    @property
    def calibrated(self) -> bool:
        return self.amplitude_plus is not None and self.amplitude_minus is not None

    def evaluate(
        self, energy_GHz: float, delta_gap_GHz: float, temperature_K: float, x_qp: float
    ) -> Tuple[float, float]:
        """Structure factors (S+, S-) at one transition energy.

        Raises:
            SpecError: If the amplitudes have not been set or calibrated
        """
        if not self.calibrated:
            raise SpecError(f"Structure-factor model {self.get_name()} is not calibrated")
        g_plus, g_minus = self.shape(energy_GHz, delta_gap_GHz, temperature_K)
        return (
            self.amplitude_plus * x_qp * g_plus,
            self.amplitude_minus * x_qp * g_minus,
        )

    def with_amplitudes(self, amplitude_plus: float, amplitude_minus: float) -> "StructureFactorModel":
        """Copy of this model with new amplitudes."""
        config = dict(self.config)
        config.update(amplitude_plus=float(amplitude_plus), amplitude_minus=float(amplitude_minus))
        return type(self)(config)

    def get_name(self) -> str:
        return self.__class__.__name__.replace("StructureFactor", "").lower()

    def get_description(self) -> str:
        return self.description
