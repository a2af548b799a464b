"""Configuration module for symprotect.

Defaults live in module-level dictionaries with units in the key names. A
run configuration is the full tree returned by :func:`get_config`, merged
with a JSON file and dotted ``--set`` overrides.
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .errors import ConfigError

logger = logging.getLogger(__name__)

# Application metadata
APP_NAME = "symprotect"
APP_VERSION = __version__
APP_DESCRIPTION = "Simulations of a symmetry-protected spin-chain qubit and its superconducting circuit"

COMMANDS = (
    "spin-scan",
    "spin-disorder",
    "circuit-spectrum",
    "circuit-sweep",
    "potential",
    "coherence",
    "qp-rates",
    "dephasing",
    "disorder-mc",
    "dynamics",
)

RUN_CONFIG = {
    "master_seed": 0,
    "fidelity": "full",  # Options: "full", "reduced"
    "threads": None,  # None: SYMPROTECT_THREADS
    "output_dir": "results",
    "reduced_n_max": 5,
    "reduced_noise_samples": 200001,
    "reduced_realizations": 50,
}

SPIN_CONFIG = {
    "M": 4,
    "t_GHz": 1.0,
    "lambda_GHz": 0.5,
    "zeta_GHz": 0.0,
    "eta_GHz": 0.0,
    "omega_field_GHz": 0.0,
    "mu_GHz": 0.0,
    "nu_GHz": 0.0,
    "transverse_axis": "x",  # Options: "x", "y"
    "zz_convention": "double_sum",  # Options: "double_sum", "unordered_pairs"
}

SPIN_SCAN_CONFIG = {
    "axis1": {"name": "lam", "start": 0.0, "stop": 1.5, "step": 0.01},
    "axis2": None,  # Same shape as axis1 for two-dimensional maps
}

SPIN_DISORDER_CONFIG = {
    "sigma_levels": [0.0, 0.05, 0.10, 0.15, 0.20],
    "n_samples": 200,
}

# Ring circuit at the optimal point
CIRCUIT_CONFIG = {
    "E_Jr_GHz": 2.5,
    "E_Cr_GHz": 5.0,
    "E_Ja_GHz": 5.0,
    "E_Ca_GHz": 2.5,
    "E_Jl_GHz": 5.55,
    "E_Cl_GHz": 2.25,
    "ej_multipliers": [1.0] * 10,
    "ec_multipliers": [1.0] * 10,
    "flux_Phi0": [0.5, 0.5, 0.5, 0.5],
    "flux_ext_Phi0": 0.5,
    "Ng_cooper_pairs": [0.5, 0.5, 0.5, 0.5],
    "n_max": 7,
    "geometric_cap_fraction": 0.1,
    "geometric_caps_in_hamiltonian": False,
    "charge_resolution": "cooper_pair",  # Options: "cooper_pair", "electron"
}

CIRCUIT_SPECTRUM_CONFIG = {
    "n_levels": 5,
    "parity": [0, 0, 0, 0],
    "convergence_n_max": [6, 8],
}

CIRCUIT_SWEEP_CONFIG = {
    "axes": [{"name": "flux_offset", "start": -0.05, "stop": 0.05, "step": 0.005}],
    "flux_mode": "all",  # Options: "all", "outer"
    "plasma_GHz": 10.0,
    "n_levels": 4,
}

POTENTIAL_CONFIG = {
    "grid_points": 121,
    "rel_tol": 1e-6,
    "profile_states": [0, 1],
    "profile_points": 720,
}

COHERENCE_CONFIG = {
    "dielectric": {
        "tan_delta_junction": 1e-7,
        "tan_delta_geometric": 1e-6,
    },
    "quasiparticles": {
        "x_qp": 5e-9,
        "temperature_K": 0.025,
        "mean_gap_GHz": 50.0,
        "delta_gap_GHz": 0.0,
        "structure_factor": {"model": "thermal"},
        "delta_gap_scan_GHz": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
        "film_thickness_nm": None,  # [bottom, top] to derive delta_gap_GHz
    },
}

# Quasiparticle structure-factor model configurations
STRUCTURE_FACTOR_CONFIGS = {
    "thermal": {
        "description": "Thermal quasiparticle occupation above the larger gap",
        "amplitude_plus": None,  # None: calibrate against reference rates
        "amplitude_minus": None,
        "minimum_temperature_K": 1e-3,
    },
}

# 1/f noise; amplitudes are PSD strengths A in S(f) = A/f
NOISE_CONFIG = {
    "channels": ["charge", "flux", "critical_current"],
    "amplitudes": {"charge": 1e-8, "flux": 4e-12, "critical_current": 1e-14},
    "f_low_Hz": 1.0,
    "f_high_Hz": 1e6,
    "df_Hz": 0.5,
    "n_samples": 1999999,
    "n_realizations": 200,
    "stencil": 3,
    "step": 1e-4,
}

DISORDER_CONFIG = {
    "sigma_junction": 0.02,
    "sigma_loop": 0.002,
    "sigma_gate": 0.001,
    "channels": ["junction", "loop", "gate"],
    "n_samples": 200,
    "metrics": ["f01_MHz"],
}

DYNAMICS_CONFIG = {
    "parts": ["initialization", "stirap", "readout", "renormalization"],
    "resonator": {
        "L_nH": 1.50,
        "C_pF": 1.48,
        "kappa_over_2pi_MHz": 0.3,
        "fock_cutoff": 4,
        "shared_inductance_pH": 40.0,
        "coupled_junction": 4,
        "mean_photons": 0.0,
    },
    "initialization": {
        "kind": "flux_ramp",
        "ramp_up_us": 10.0,
        "hold_us": 5.0,
        "ramp_down_us": 10.0,
        "target_flux_scale": 1.17,
        "match_resonator": False,  # search the flux scale where f01 meets the resonator
        "search_flux_scale": 1.4,
        "time_step_ns": 10.0,
        "temperature_K": 0.025,
        "table_points": 25,
    },
    "stirap": {
        "kind": "stirap",
        "sigma_ns": 20.0,
        "delay_ns": 15.0,
        "peak_rabi_over_2pi_MHz": 200.0,
        "shape": "mixing_angle",  # or "gaussian" for the bare pulse pair
        "stokes_ratio": 1.0,
        "time_step_ns": 0.5,
        "gamma1_Hz": 20.0,
        "gamma_intermediate_Hz": None,
        "intermediate_level": 3,
        "n_levels": 5,
    },
    "readout": {
        "n_levels": 5,
    },
}


def get_config() -> Dict[str, Any]:
    """Get the complete default configuration tree, merged with the user's config.json."""
    config = {
        "run": copy.deepcopy(RUN_CONFIG),
        "spin": copy.deepcopy(SPIN_CONFIG),
        "spin_scan": copy.deepcopy(SPIN_SCAN_CONFIG),
        "spin_disorder": copy.deepcopy(SPIN_DISORDER_CONFIG),
        "circuit": copy.deepcopy(CIRCUIT_CONFIG),
        "circuit_spectrum": copy.deepcopy(CIRCUIT_SPECTRUM_CONFIG),
        "circuit_sweep": copy.deepcopy(CIRCUIT_SWEEP_CONFIG),
        "potential": copy.deepcopy(POTENTIAL_CONFIG),
        "coherence": copy.deepcopy(COHERENCE_CONFIG),
        "noise": copy.deepcopy(NOISE_CONFIG),
        "disorder": copy.deepcopy(DISORDER_CONFIG),
        "dynamics": copy.deepcopy(DYNAMICS_CONFIG),
    }

    user_config = load_user_config()
    if user_config:
        validate_config(user_config, config)
        config = merge_config(config, user_config)
        for name, settings in user_config.get("structure_factors", {}).items():
            if name in STRUCTURE_FACTOR_CONFIGS:
                STRUCTURE_FACTOR_CONFIGS[name].update(settings)

    return config


def load_user_config() -> Dict[str, Any]:
    """Load user configuration from file.

    Returns:
        User configuration dictionary or empty dict if not found
    """
    config_file = get_user_config_dir() / "config.json"

    if not config_file.exists():
        return {}

    try:
        with open(config_file, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.warning(f"Could not load user config: {e}")
        return {}


def get_user_config_dir() -> Path:
    """Get the user configuration directory."""
    if os.name == "posix":
        config_home = os.environ.get("XDG_CONFIG_HOME")
        if config_home:
            return Path(config_home) / "symprotect"
        else:
            return Path.home() / ".config" / "symprotect"
    else:
        return Path.home() / ".symprotect"


def merge_config(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """Deep-merge update over a copy of base; nested dicts merge, everything else replaces."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _unknown_keys(tree: Dict[str, Any], reference: Dict[str, Any], prefix: str = "") -> List[str]:
    unknown = []
    for key, value in tree.items():
        path = f"{prefix}{key}"
        if key not in reference:
            unknown.append(path)
        elif isinstance(value, dict) and isinstance(reference[key], dict):
            # structure-factor settings are model-specific
            if key == "structure_factor":
                continue
            unknown.extend(_unknown_keys(value, reference[key], f"{path}."))
    return unknown


def validate_config(tree: Dict[str, Any], reference: Optional[Dict[str, Any]] = None) -> None:
    """Reject keys that have no default.

    Raises:
        ConfigError: Listing every offending dotted key
    """
    if reference is None:
        reference = get_config()
    unknown = [k for k in _unknown_keys(tree, reference) if k != "structure_factors"]
    problems = list(unknown)

    run = tree.get("run", {})
    if run.get("fidelity", "full") not in ("full", "reduced"):
        problems.append("run.fidelity")
    seed = run.get("master_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append("run.master_seed")

    if problems:
        raise ConfigError(f"Invalid configuration keys: {', '.join(problems)}", problems)


def load_config(path: Optional[Path] = None) -> Dict[str, Any]:
    """Defaults deep-merged with a JSON run file.

    Raises:
        ConfigError: If the file is unreadable or holds unknown keys
    """
    config = get_config()
    if path is None:
        return config
    try:
        with open(path, "r") as f:
            tree = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not read config {path}: {e}", [str(path)]) from e
    if not isinstance(tree, dict):
        raise ConfigError(f"Config {path} must hold a JSON object", [str(path)])
    validate_config(tree, config)
    logger.info(f"Loaded run configuration from {path}")
    return merge_config(config, tree)


def _parse_literal(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(tree: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply ``a.b.c=value`` overrides, values parsed as JSON literals when possible.

    Raises:
        ConfigError: Listing every malformed or unknown override path
    """
    result = copy.deepcopy(tree)
    bad: List[str] = []
    for item in overrides:
        if "=" not in item:
            bad.append(item)
            continue
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        node = result
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                node = None
                break
            node = node[key]
        if node is None or keys[-1] not in node:
            bad.append(path.strip())
            continue
        node[keys[-1]] = _parse_literal(raw.strip())
    if bad:
        raise ConfigError(f"Unknown override keys: {', '.join(bad)}", bad)
    validate_config(result, tree)
    return result
