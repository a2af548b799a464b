"""Command runner: turns a configuration tree into data files and a manifest."""

import copy
import csv
import json
import logging
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .config import COMMANDS, merge_config, validate_config
from .core.circuit import (
    CircuitSpec,
    circuit_spectrum,
    parameter_sweep,
    phase_profile,
    potential_landscape,
    protection_elements,
    truncation_convergence,
)
from .core.coherence import (
    LossChannel,
    NoiseChannelSpec,
    QuasiparticleEnv,
    RateReport,
    dephasing_time,
    dielectric_loss_rate,
    frequency_response,
    gap_suppression_scan,
    qp_tunneling_rates,
    superconducting_gap,
    trace_formula_rate,
)
from .core.disorder import DEPHASING_SUBSTREAMS, DisorderModel, MetricSettings, mc_histograms
from .core.dynamics import (
    PulseSchedule,
    ResonatorSpec,
    circuit_dispersive_parameters,
    flux_response_table,
    purcell_initialization,
    renormalize_shared_inductance,
    stirap_transfer,
    thermal_ground_population,
)
from .core.numerics import RandomStream
from .core.spin_model import SpinChainSpec, disorder_scan_spin, phase_scan, protected_intervals
from .errors import BundleError, ConfigError, NumericalError, SpecError, SymprotectError
from .utils.output import file_digest, write_csv, write_json
from .utils.parallel import get_thread_count

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

MANIFEST_FILE = "manifest.json"
ERROR_FILE = "error.json"

Outputs = Dict[str, Path]
Handler = Callable[[Dict[str, Any], Path], Tuple[Outputs, Dict[str, Any]]]


@dataclass
class RunManifest:
    """Everything needed to reproduce a run."""

    command: str
    config: Dict[str, Any]
    master_seed: int
    version: str = __version__
    wall_time_s: float = 0.0
    outputs: Dict[str, str] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        with open(path, "r") as f:
            data = json.load(f)
        return cls(**data)


def exit_code_for(error: BaseException) -> int:
    """0 success, 2 usage or configuration, 3 numerical failure."""
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (ConfigError, SpecError, BundleError)):
        return EXIT_USAGE
    return EXIT_FAILED


def error_payload(error: SymprotectError) -> Dict[str, Any]:
    return {
        "error": error.kind,
        "message": str(error),
        "keys": list(getattr(error, "keys", [])),
        "exit_code": exit_code_for(error),
    }


def grid(axis: Dict[str, Any]) -> np.ndarray:
    """Inclusive start:stop:step grid."""
    start, stop, step = float(axis["start"]), float(axis["stop"]), float(axis["step"])
    if step <= 0 or stop < start:
        raise ConfigError(f"Bad grid {start}:{stop}:{step}", [str(axis.get("name", "axis"))])
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def _threads(config: Dict[str, Any]) -> int:
    threads = config["run"].get("threads")
    return get_thread_count() if threads is None else max(1, int(threads))


def _reduced(config: Dict[str, Any]) -> bool:
    return config["run"]["fidelity"] == "reduced"


def _circuit_spec(config: Dict[str, Any]) -> CircuitSpec:
    spec = CircuitSpec.from_config(config["circuit"])
    if _reduced(config) and spec.n_max > config["run"]["reduced_n_max"]:
        spec = replace(spec, n_max=int(config["run"]["reduced_n_max"]))
    return spec


def _qp_env(config: Dict[str, Any]) -> QuasiparticleEnv:
    settings = dict(config["coherence"]["quasiparticles"])
    thickness = settings.get("film_thickness_nm")
    if thickness:
        bottom, top = thickness
        settings["delta_gap_GHz"] = abs(superconducting_gap(bottom) - superconducting_gap(top))
        logger.info(f"Gap difference {settings['delta_gap_GHz']:.3f} GHz from films {bottom}/{top} nm")
    return QuasiparticleEnv.from_config(settings)


def _loss_channels(config: Dict[str, Any]) -> List[LossChannel]:
    dielectric = config["coherence"]["dielectric"]
    return [
        LossChannel("junction_intrinsic", dielectric["tan_delta_junction"]),
        LossChannel("geometric", dielectric["tan_delta_geometric"]),
    ]


def _noise_channel(config: Dict[str, Any], kind: str) -> NoiseChannelSpec:
    noise = config["noise"]
    n_samples = int(noise["n_samples"])
    if _reduced(config):
        n_samples = min(n_samples, int(config["run"]["reduced_noise_samples"]))
    return NoiseChannelSpec(
        kind,
        amplitude=noise["amplitudes"].get(kind),
        f_low=float(noise["f_low_Hz"]),
        f_high=float(noise["f_high_Hz"]),
        df=float(noise["df_Hz"]),
        n_samples=n_samples,
    )


def _realizations(config: Dict[str, Any], requested: int) -> int:
    if _reduced(config):
        return min(int(requested), int(config["run"]["reduced_realizations"]))
    return int(requested)


def run_spin_scan(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    base = SpinChainSpec.from_config(config["spin"])
    scan = config["spin_scan"]
    axis1 = (scan["axis1"]["name"], grid(scan["axis1"]))
    axis2 = (scan["axis2"]["name"], grid(scan["axis2"])) if scan.get("axis2") else None
    rows = phase_scan(base, axis1, axis2, threads=_threads(config))
    outputs = {"scan": write_csv(out / "scan.csv", [r.as_record() for r in rows])}
    summary: Dict[str, Any] = {
        "M": base.M,
        "n_points": len(rows),
        "n_failed": sum(1 for r in rows if r.error),
    }
    if axis2 is None:
        summary["protected_intervals"] = [list(i) for i in protected_intervals(rows, axis1[0])]
    outputs["summary"] = write_json(out / "summary.json", summary)
    return outputs, summary


def run_spin_disorder(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    base = SpinChainSpec.from_config(config["spin"])
    settings = config["spin_disorder"]
    rows = disorder_scan_spin(
        base,
        settings["sigma_levels"],
        _realizations(config, settings["n_samples"]),
        config["run"]["master_seed"],
        threads=_threads(config),
    )
    outputs = {"spin_disorder": write_csv(out / "spin_disorder.csv", [r.as_record() for r in rows])}
    return outputs, {"levels": len(rows)}


def run_circuit_spectrum(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = _circuit_spec(config)
    settings = config["circuit_spectrum"]
    states = circuit_spectrum(spec, k=int(settings["n_levels"]), parity=tuple(settings["parity"]))
    charge, current = protection_elements(states)
    result: Dict[str, Any] = {
        "f01_GHz": states.f01,
        "energies_GHz": states.energies,
        "transition_frequencies_GHz": states.transition_frequencies[0, 1:],
        "max_charge_element": charge,
        "max_current_over_Ic": current,
        "n_max": spec.n_max,
        "basis_size": states.basis.size,
    }
    outputs: Outputs = {}
    if settings["convergence_n_max"] and not _reduced(config):
        rows = truncation_convergence(spec, settings["convergence_n_max"])
        result["convergence"] = rows
        outputs["convergence"] = write_csv(out / "convergence.csv", rows)
    outputs["spectrum"] = write_json(out / "spectrum.json", result)
    logger.info(f"f01 = {states.f01 * 1e3:.3f} MHz at n_max={spec.n_max}")
    return outputs, {"f01_GHz": states.f01}


def run_circuit_sweep(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = _circuit_spec(config)
    settings = config["circuit_sweep"]
    axes = [(axis["name"], grid(axis)) for axis in settings["axes"]]
    rows = parameter_sweep(
        spec,
        axes,
        k=int(settings["n_levels"]),
        flux_mode=settings["flux_mode"],
        plasma_GHz=settings["plasma_GHz"],
        threads=_threads(config),
    )
    outputs = {"sweep": write_csv(out / "sweep.csv", [r.as_record() for r in rows])}
    return outputs, {"n_points": len(rows), "n_failed": sum(1 for r in rows if r.error)}


def run_potential(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = _circuit_spec(config)
    settings = config["potential"]
    axis = np.linspace(-np.pi, np.pi, int(settings["grid_points"]), endpoint=False)
    landscape = potential_landscape(spec, axis, axis, rel_tol=float(settings["rel_tol"]))

    records = [
        {"x": x, "y": y, "V_GHz": landscape.values[i, j]}
        for i, x in enumerate(landscape.x)
        for j, y in enumerate(landscape.y)
    ]
    outputs = {"potential": write_csv(out / "potential.csv", records)}

    states_needed = max(settings["profile_states"]) + 1
    states = circuit_spectrum(spec, k=max(2, states_needed))
    x_profile = np.linspace(-np.pi, np.pi, int(settings["profile_points"]), endpoint=False)
    profile: Dict[str, np.ndarray] = {"x": x_profile}
    peaks = {}
    for index in settings["profile_states"]:
        _, density = phase_profile(states, index, x_profile)
        profile[f"p{index}"] = density
        peaks[str(index)] = float(x_profile[np.argmax(density)] / np.pi)
    profile_records = [
        {name: values[k] for name, values in profile.items()} for k in range(x_profile.size)
    ]
    outputs["profile"] = write_csv(out / "phase_profile.csv", profile_records)

    minima = {
        "minima": [{"x": x, "y": y, "V_GHz": v} for x, y, v in landscape.minima],
        "line_minima_over_pi": [x / np.pi for x, _ in landscape.line_minima],
        "line_minimum_abs_over_pi": min(abs(x) for x, _ in landscape.line_minima) / np.pi,
        "profile_peaks_over_pi": peaks,
    }
    outputs["minima"] = write_json(out / "minima.json", minima)
    return outputs, {"n_minima": len(landscape.minima)}


def run_coherence(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = _circuit_spec(config)
    states = circuit_spectrum(spec, k=2)
    channels = _loss_channels(config)
    dielectric = RateReport("dielectric", dielectric_loss_rate(spec, states, channels))
    trace_check = trace_formula_rate(spec, states, channels[0].loss_tangent)
    qp = qp_tunneling_rates(replace(spec, charge_resolution="electron"), _qp_env(config))

    result = {
        "f01_GHz": states.f01,
        "dielectric_hz": dielectric.rates,
        "dielectric_trace_formula_hz": trace_check,
        "quasiparticle_hz": qp.rates,
        "quasiparticle_metadata": qp.metadata,
    }
    outputs = {
        "coherence": write_json(out / "coherence.json", result),
        "rates": write_csv(out / "rates.csv", dielectric.records() + qp.records()),
    }
    return outputs, {"dielectric_total_hz": dielectric.rates["total"], "qp_total_hz": qp.rates["total"]}


def run_qp_rates(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = replace(_circuit_spec(config), charge_resolution="electron")
    env = _qp_env(config)
    report = qp_tunneling_rates(spec, env)
    scan = gap_suppression_scan(spec, env, config["coherence"]["quasiparticles"]["delta_gap_scan_GHz"])
    outputs = {
        "qp_rates": write_json(out / "qp_rates.json", {
            "delta_gap_GHz": env.delta_gap_GHz,
            "rates_hz": report.rates,
            "metadata": report.metadata,
            "params_digest": report.params_digest,
        }),
        "gap_scan": write_csv(out / "gap_scan.csv", scan),
    }
    return outputs, {"rate_0->1_hz": report.rates["0->1"], "rate_1->0_hz": report.rates["1->0"]}


def run_dephasing(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = _circuit_spec(config)
    noise = config["noise"]
    seed = config["run"]["master_seed"]
    threads = _threads(config)
    realizations = _realizations(config, noise["n_realizations"])
    outputs: Outputs = {}
    result: Dict[str, Any] = {}
    for kind in noise["channels"]:
        channel = _noise_channel(config, kind)
        response = frequency_response(
            spec, channel.parameters, step=float(noise["step"]), stencil=int(noise["stencil"]), threads=threads
        )
        dephasing = dephasing_time(
            response,
            channel,
            realizations,
            master_seed=seed,
            threads=threads,
            stream=RandomStream(seed, 0).substream(DEPHASING_SUBSTREAMS[kind]),
        )
        result[kind] = {
            "T_phi_s": dephasing.T_phi,
            "rate_hz": dephasing.rate,
            "lower_bound": dephasing.lower_bound,
            "n_realizations": dephasing.n_realizations,
            "n_samples": channel.n_samples,
            "gradient_hz": dict(zip(response.parameters, response.gradient)),
            "hessian_asymmetry_hz": response.asymmetry(),
        }
        outputs[f"decay_{kind}"] = write_csv(out / f"decay_{kind}.csv", dephasing.trace_records())
        logger.info(f"T_phi[{kind}] = {dephasing.T_phi:.4e} s")
    outputs["dephasing"] = write_json(out / "dephasing.json", result)
    return outputs, {kind: r["T_phi_s"] for kind, r in result.items()}


def run_disorder_mc(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    base = CircuitSpec.from_config(config["circuit"])
    disorder = config["disorder"]
    run = config["run"]
    model = DisorderModel.from_config(disorder)
    settings = MetricSettings(
        qp_env=_qp_env(config),
        loss_channels=_loss_channels(config),
        noise_channels={
            kind: replace(_noise_channel(config, kind), n_samples=int(config["noise"]["n_samples"]))
            for kind in ("charge", "flux", "critical_current")
        },
        n_realizations=int(config["noise"]["n_realizations"]),
        fidelity=run["fidelity"],
        reduced_n_max=int(run["reduced_n_max"]),
        reduced_realizations=int(run["reduced_realizations"]),
    )
    metrics = list(disorder["metrics"])
    reports = mc_histograms(
        base, model, metrics, int(disorder["n_samples"]), run["master_seed"], settings, _threads(config)
    )
    histograms = {metric: report.as_dict() for metric, report in reports.items()}
    first = reports[metrics[0]]
    samples = [
        {metric: reports[metric].values[k] for metric in metrics} for k in range(len(first.values))
    ]
    outputs = {
        "histograms": write_json(out / "histograms.json", histograms),
        "samples": write_csv(out / "samples.csv", samples, columns=metrics),
    }
    return outputs, {metric: report.mean for metric, report in reports.items()}


def _matched_flux_scale(spec: CircuitSpec, resonator: ResonatorSpec, settings: Dict[str, Any],
                        threads: int) -> float:
    """Flux scale that brings f_01 onto the resonator, or the configured target."""
    target = float(settings["target_flux_scale"])
    if not settings["match_resonator"]:
        return target
    search = float(settings["search_flux_scale"])
    table = flux_response_table(spec, resonator, search, int(settings["table_points"]), threads)
    fraction = table.resonant_fraction(resonator.frequency_GHz)
    if fraction is None:
        logger.warning(f"f01 never reaches {resonator.frequency_GHz:.3f} GHz up to scale {search}; "
                       f"using {target}")
        return target
    return 1.0 + fraction * (search - 1.0)


def run_dynamics(config: Dict[str, Any], out: Path) -> Tuple[Outputs, Dict[str, Any]]:
    spec = _circuit_spec(config)
    dynamics = config["dynamics"]
    parts = set(dynamics["parts"])
    unknown = parts - {"initialization", "stirap", "readout", "renormalization"}
    if unknown:
        raise ConfigError(f"Unknown dynamics parts: {sorted(unknown)}", ["dynamics.parts"])
    resonator = ResonatorSpec.from_config(dynamics["resonator"])
    threads = _threads(config)
    n_levels = max(int(dynamics["stirap"]["n_levels"]), int(dynamics["readout"]["n_levels"]), 2)
    states = circuit_spectrum(spec, k=n_levels)
    temperature = float(dynamics["initialization"]["temperature_K"])

    result: Dict[str, Any] = {
        "resonator": {
            "frequency_GHz": resonator.frequency_GHz,
            "impedance_ohm": resonator.impedance,
            "current_zpf_A": resonator.current_zpf,
            "quality_factor": resonator.quality_factor,
        },
        "thermal": {
            "f01_GHz": states.f01,
            "temperature_K": temperature,
            "ground_population": thermal_ground_population(states.f01, temperature),
        },
    }
    outputs: Outputs = {}

    if "renormalization" in parts:
        shift = renormalize_shared_inductance(resonator.shared_inductance, spec.E_Ja)
        result["renormalization"] = {
            "eta": shift.eta,
            "L_J_nH": shift.L_J * 1e9,
            "E_Ja_adjusted_GHz": shift.E_J_adjusted_GHz,
            "delta_E_J_MHz": shift.delta_E_J_GHz * 1e3,
            "delta_I_c_nA": shift.delta_I_c * 1e9,
        }

    if "readout" in parts:
        report = circuit_dispersive_parameters(states, resonator, int(dynamics["readout"]["n_levels"]))
        readout = report.as_dict()
        readout["chi_over_kappa"] = abs(report.chi * 1e9) / resonator.kappa_over_2pi
        result["readout"] = readout

    if "stirap" in parts:
        settings = dynamics["stirap"]
        schedule = PulseSchedule.from_config(settings)
        transfer = stirap_transfer(
            states.energies[: int(settings["n_levels"])] - states.energies[0],
            schedule,
            gamma1=float(settings["gamma1_Hz"]),
            gamma_intermediate=settings["gamma_intermediate_Hz"],
            intermediate=int(settings["intermediate_level"]),
        )
        result["stirap"] = {
            "efficiency": transfer.efficiency,
            "pump_frequency_GHz": transfer.pump_frequency_GHz,
            "stokes_frequency_GHz": transfer.stokes_frequency_GHz,
        }
        outputs["stirap"] = write_csv(out / "stirap.csv", transfer.records())

    if "initialization" in parts:
        settings = dynamics["initialization"]
        scale = _matched_flux_scale(spec, resonator, settings, threads)
        table = flux_response_table(spec, resonator, scale, int(settings["table_points"]), threads)
        schedule = replace(PulseSchedule.from_config(settings), target_scale=scale)
        init = purcell_initialization(table, resonator, schedule, temperature)
        result["initialization"] = {
            "target_flux_scale": scale,
            "initial_ground_population": init.initial_population,
            "final_fidelity": init.final_fidelity,
            "max_fock_population": init.max_fock_population,
        }
        outputs["initialization"] = write_csv(out / "initialization.csv", init.records())

    outputs["dynamics"] = write_json(out / "dynamics.json", result)
    return outputs, {part: True for part in sorted(parts)}


COMMAND_HANDLERS: Dict[str, Handler] = {
    "spin-scan": run_spin_scan,
    "spin-disorder": run_spin_disorder,
    "circuit-spectrum": run_circuit_spectrum,
    "circuit-sweep": run_circuit_sweep,
    "potential": run_potential,
    "coherence": run_coherence,
    "qp-rates": run_qp_rates,
    "dephasing": run_dephasing,
    "disorder-mc": run_disorder_mc,
    "dynamics": run_dynamics,
}


def run_command(command: str, config: Dict[str, Any], output_dir: Path) -> RunManifest:
    """Execute one command and write its data files plus manifest.json.

    Raises:
        ConfigError: Unknown command
        SymprotectError: Whatever the computation raises
    """
    if command not in COMMAND_HANDLERS:
        raise ConfigError(f"Unknown command {command!r}; choose from {list(COMMANDS)}", ["command"])
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running {command} into {output_dir}")

    started = time.perf_counter()
    outputs, summary = COMMAND_HANDLERS[command](config, output_dir)
    manifest = RunManifest(
        command=command,
        config=copy.deepcopy(config),
        master_seed=int(config["run"]["master_seed"]),
        wall_time_s=time.perf_counter() - started,
        outputs={path.name: file_digest(path) for path in outputs.values()},
        summary=summary,
    )
    write_json(output_dir / MANIFEST_FILE, manifest)
    logger.info(f"{command} finished in {manifest.wall_time_s:.2f} s")
    return manifest


def run(command: str, config: Dict[str, Any], output_dir: Path) -> int:
    """run_command with exceptions mapped to exit codes and error.json."""
    try:
        run_command(command, config, output_dir)
        return EXIT_OK
    except SymprotectError as e:
        logger.error(f"{command} failed: {e}")
        payload = error_payload(e)
        try:
            write_json(Path(output_dir) / ERROR_FILE, payload)
        except OSError as write_error:
            logger.warning(f"Could not write {ERROR_FILE}: {write_error}")
        print(json.dumps(payload, sort_keys=True))
        return payload["exit_code"]


@dataclass
class CaseResult:
    name: str
    status: str
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class VerifyReport:
    bundle: str
    cases: List[CaseResult]

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "bundle": self.bundle,
            "passed": self.passed,
            "cases": [
                {"name": c.name, "status": c.status, "failures": c.failures} for c in self.cases
            ],
        }


def _lookup(data: Any, path: str) -> Any:
    node = data
    for part in path.split(".") if path else []:
        if isinstance(node, list):
            node = node[int(part)]
        else:
            node = node[part]
    return node


def _read_value(directory: Path, check: Dict[str, Any]) -> float:
    target = directory / check["file"]
    if target.suffix == ".json":
        with open(target, "r") as f:
            value = _lookup(json.load(f), check["path"])
    else:
        with open(target, "r", newline="") as f:
            rows = list(csv.DictReader(f))
        value = rows[int(check["row"])][check["column"]]
    return float(value)


def evaluate_check(directory: Path, check: Dict[str, Any]) -> Optional[str]:
    """None when the check passes, otherwise a one-line numeric diff."""
    where = f"{check['file']}:{check.get('path', check.get('column'))}"
    try:
        value = _read_value(directory, check)
    except (OSError, KeyError, IndexError, ValueError, TypeError) as e:
        return f"{where}: could not read value ({e})"
    if "expected" in check:
        expected = float(check["expected"])
        rtol = float(check.get("rtol", 0.0))
        atol = float(check.get("atol", 0.0))
        if not abs(value - expected) <= atol + rtol * abs(expected):
            return (f"{where}: got {value!r}, expected {expected!r} "
                    f"(diff {value - expected:.3e}, rtol {rtol}, atol {atol})")
    if "min" in check and not value >= float(check["min"]):
        return f"{where}: got {value!r}, below minimum {check['min']!r}"
    if "max" in check and not value <= float(check["max"]):
        return f"{where}: got {value!r}, above maximum {check['max']!r}"
    return None


def verify_case(case: Dict[str, Any], base_config: Dict[str, Any], directory: Path) -> CaseResult:
    """Rerun one bundled case in reduced fidelity and compare against its checks."""
    name = case.get("name", case.get("command", "unnamed"))
    command = case.get("command")
    if command not in COMMAND_HANDLERS:
        return CaseResult(name, "config_error", [f"unknown command {command!r}"])
    try:
        overrides = case.get("config", {})
        validate_config(overrides, base_config)
        config = merge_config(base_config, overrides)
        config["run"]["fidelity"] = "reduced"
        if "seed" in case:
            config["run"]["master_seed"] = int(case["seed"])
        run_command(command, config, directory)
    except ConfigError as e:
        return CaseResult(name, "config_error", [f"{e} ({', '.join(e.keys)})"])
    except SymprotectError as e:
        return CaseResult(name, "error", [f"{e.kind}: {e}"])

    failures = [f for f in (evaluate_check(directory, c) for c in case.get("checks", [])) if f]
    return CaseResult(name, "fail" if failures else "pass", failures)


def verify(bundle_path: Path, base_config: Dict[str, Any], output_dir: Optional[Path] = None) -> VerifyReport:
    """Rerun every case of a golden bundle and collect pass/fail results.

    Raises:
        BundleError: Missing or malformed bundle
    """
    bundle_path = Path(bundle_path)
    if not bundle_path.exists():
        raise BundleError(f"Bundle not found: {bundle_path}")
    try:
        with open(bundle_path, "r") as f:
            bundle = json.load(f)
        cases = bundle["cases"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise BundleError(f"Malformed bundle {bundle_path}: {e}") from e

    results: List[CaseResult] = []
    with tempfile.TemporaryDirectory(prefix="symprotect-verify-") as scratch:
        root = Path(output_dir) if output_dir is not None else Path(scratch)
        for index, case in enumerate(cases):
            directory = root / f"{index:02d}-{case.get('command', 'unknown')}"
            result = verify_case(case, base_config, directory)
            logger.info(f"verify {result.name}: {result.status}")
            for failure in result.failures:
                logger.warning(f"  {failure}")
            results.append(result)

    report = VerifyReport(str(bundle_path), results)
    if output_dir is not None:
        write_json(Path(output_dir) / "verify_report.json", report.as_dict())
    return report

