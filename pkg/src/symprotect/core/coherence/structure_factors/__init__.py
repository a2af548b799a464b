"""Structure-factor models for quasiparticle tunneling."""

import logging
from typing import Any, Dict, Optional

from ....config import STRUCTURE_FACTOR_CONFIGS
from ....errors import SpecError
from .base import StructureFactorModel
from .thermal import ThermalStructureFactor, thermal_energy_GHz

logger = logging.getLogger(__name__)

STRUCTURE_FACTOR_MODELS = {
    "thermal": ThermalStructureFactor,
}


def create_structure_factor(
    name: str, config: Optional[Dict[str, Any]] = None
) -> StructureFactorModel:
    """Create the named structure-factor model.

    Args:
        name: Registered model name
        config: Overrides merged over the model's default configuration

    Returns:
        Structure-factor model instance
    """
    if name not in STRUCTURE_FACTOR_MODELS:
        logger.error(f"Unknown structure-factor model: {name}")
        raise SpecError(
            f"Unknown structure-factor model {name!r}; choose from {sorted(STRUCTURE_FACTOR_MODELS)}"
        )
    model_config = dict(STRUCTURE_FACTOR_CONFIGS.get(name, {}))
    model_config.update(config or {})
    return STRUCTURE_FACTOR_MODELS[name](model_config)


__all__ = [
    "StructureFactorModel",
    "ThermalStructureFactor",
    "STRUCTURE_FACTOR_MODELS",
    "create_structure_factor",
    "thermal_energy_GHz",
]
