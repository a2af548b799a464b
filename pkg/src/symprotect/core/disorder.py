"""Monte Carlo over fabrication disorder of the ring circuit.

Sample i always draws from stream (master_seed, i); an invalid draw is
replaced from the stream's children, so every sample is stable under any
thread count.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NumericalError, SpecError
from ..utils.parallel import ordered_map
from .circuit import N_JUNCTIONS, N_NODES, CircuitSpec, circuit_spectrum
from .coherence.dielectric import LossChannel, default_loss_channels, dielectric_loss_rate
from .coherence.noise import REDUCED_SAMPLES, NoiseChannelSpec, dephasing_time, frequency_response
from .coherence.quasiparticles import QuasiparticleEnv, calibrate_structure_factor, qp_tunneling_rates
from .numerics import RandomStream

logger = logging.getLogger(__name__)

DISORDER_CHANNELS = ("junction", "loop", "gate")

METRICS = (
    "f01_MHz",
    "dielectric_junction_hz",
    "dielectric_geometric_hz",
    "dielectric_total_hz",
    "qp_01_hz",
    "qp_10_hz",
    "dephasing_charge_hz",
    "dephasing_flux_hz",
    "dephasing_critical_current_hz",
)

FIDELITY_MODES = ("full", "reduced")

# children 0..MAX_RESAMPLES of a sample stream are reserved for resampling
DEPHASING_SUBSTREAMS = {"charge": 1001, "flux": 1002, "critical_current": 1003}
MAX_FAILURE_FRACTION = 0.1
MAX_RESAMPLES = 100

# Published histogram means per disorder scenario, kept for comparison.
REFERENCE_MEANS: Dict[str, Dict[str, float]] = {
    "junction": {"f01_MHz": 835.0, "qp_01_hz": 665.0, "qp_10_hz": 90.0,
                 "dephasing_charge_hz": 90.0, "dephasing_critical_current_hz": 153.0},
    "loop": {"qp_01_hz": 941.0, "qp_10_hz": 16.0, "dielectric_total_hz": 214.0,
             "dephasing_flux_hz": 312.0},
    "gate": {"f01_MHz": 818.0, "dephasing_charge_hz": 800.0},
    "all": {"f01_MHz": 836.0, "qp_01_hz": 613.0, "qp_10_hz": 102.0, "dielectric_total_hz": 211.0,
            "dephasing_charge_hz": 802.0, "dephasing_flux_hz": 329.0,
            "dephasing_critical_current_hz": 162.0},
}


@dataclass(frozen=True)
class DisorderModel:
    """Relative standard deviations of the fabrication disorder."""

    sigma_junction: float = 0.02
    sigma_loop: float = 0.002
    sigma_gate: float = 0.001
    channels: Tuple[str, ...] = DISORDER_CHANNELS

    def __post_init__(self) -> None:
        for name in ("sigma_junction", "sigma_loop", "sigma_gate"):
            if getattr(self, name) < 0:
                raise SpecError(f"{name} must be non-negative")
        unknown = set(self.channels) - set(DISORDER_CHANNELS)
        if unknown:
            raise SpecError(f"Unknown disorder channels: {sorted(unknown)}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "DisorderModel":
        return cls(
            sigma_junction=float(config["sigma_junction"]),
            sigma_loop=float(config["sigma_loop"]),
            sigma_gate=float(config["sigma_gate"]),
            channels=tuple(config.get("channels", DISORDER_CHANNELS)),
        )

    def only(self, *channels: str) -> "DisorderModel":
        return replace(self, channels=tuple(channels))

    @property
    def scenario(self) -> str:
        if set(self.channels) == set(DISORDER_CHANNELS):
            return "all"
        return "+".join(sorted(self.channels))

    def sigma(self, channel: str) -> float:
        if channel not in self.channels:
            return 0.0
        return {"junction": self.sigma_junction, "loop": self.sigma_loop, "gate": self.sigma_gate}[channel]


def _draw(base: CircuitSpec, model: DisorderModel, stream: RandomStream) -> Tuple[CircuitSpec, int]:
    """Disordered spec and the number of resampled draws.

    Every draw consumes the same random numbers whether or not its channel
    is enabled, so masking a channel leaves the others unchanged.
    """
    resamples = 0
    source = stream
    for attempt in range(MAX_RESAMPLES + 1):
        alpha = source.normal(N_JUNCTIONS) * model.sigma("junction")
        beta = source.normal(N_JUNCTIONS) * model.sigma("junction")
        gamma = source.normal(N_NODES + 1) * model.sigma("loop")
        delta = source.normal(N_NODES) * model.sigma("gate")
        if np.all(1.0 + alpha > 0) and np.all(1.0 + beta > 0):
            break
        resamples += 1
        source = stream.substream(attempt)
    else:
        raise NumericalError(f"No valid disorder draw after {MAX_RESAMPLES} attempts")

    spec = base.with_updates(
        ej_multipliers=np.array(base.ej_multipliers) * (1.0 + alpha) * (1.0 + beta),
        ec_multipliers=np.array(base.ec_multipliers) / (1.0 + alpha),
        flux=np.array(base.flux) * (1.0 + gamma[:N_NODES]),
        flux_ext=base.flux_ext * (1.0 + gamma[N_NODES]),
        gate_charges=np.array(base.gate_charges) * (1.0 + delta),
    )
    return spec, resamples


def sample_disordered_spec(base: CircuitSpec, model: DisorderModel, stream: RandomStream) -> CircuitSpec:
    """One disordered copy of ``base``.

    E_J -> E_J (1+alpha)(1+beta) and E_C -> E_C / (1+alpha) per junction,
    flux -> flux (1+gamma) per loop, Ng -> Ng (1+delta) per node.
    """
    spec, resamples = _draw(base, model, stream)
    if resamples:
        logger.warning(f"Resampled {resamples} invalid disorder draw(s) for {stream!r}")
    return spec


@dataclass
class MetricSettings:
    """Everything needed to evaluate histogram metrics on a sample."""

    qp_env: Optional[QuasiparticleEnv] = None
    loss_channels: List[LossChannel] = field(default_factory=default_loss_channels)
    noise_channels: Dict[str, NoiseChannelSpec] = field(default_factory=lambda: {
        kind: NoiseChannelSpec(kind) for kind in ("charge", "flux", "critical_current")
    })
    n_realizations: int = 200
    fidelity: str = "full"
    reduced_n_max: int = 5
    reduced_realizations: int = 50

    def __post_init__(self) -> None:
        if self.fidelity not in FIDELITY_MODES:
            raise SpecError(f"Unknown fidelity mode: {self.fidelity}")

    def adapt_spec(self, spec: CircuitSpec) -> CircuitSpec:
        if self.fidelity == "reduced" and spec.n_max > self.reduced_n_max:
            return replace(spec, n_max=self.reduced_n_max)
        return spec

    def noise_channel(self, kind: str) -> NoiseChannelSpec:
        channel = self.noise_channels[kind]
        if self.fidelity == "reduced" and channel.n_samples > REDUCED_SAMPLES:
            return channel.with_samples(REDUCED_SAMPLES)
        return channel

    @property
    def realizations(self) -> int:
        if self.fidelity == "reduced":
            return min(self.n_realizations, self.reduced_realizations)
        return self.n_realizations


def evaluate_metrics(
    spec: CircuitSpec,
    metrics: Sequence[str],
    settings: MetricSettings,
    stream: Optional[RandomStream] = None,
) -> Dict[str, float]:
    """Compute the requested metrics for one circuit spec."""
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise SpecError(f"Unknown metrics: {unknown}")
    spec = settings.adapt_spec(spec)
    values: Dict[str, float] = {}

    if "f01_MHz" in metrics or any(m.startswith("dielectric") for m in metrics):
        states = circuit_spectrum(spec, k=2)
        values["f01_MHz"] = states.f01 * 1e3
        if any(m.startswith("dielectric") for m in metrics):
            rates = dielectric_loss_rate(spec, states, settings.loss_channels)
            values["dielectric_junction_hz"] = rates.get("junction_intrinsic", 0.0)
            values["dielectric_geometric_hz"] = rates.get("geometric", 0.0)
            values["dielectric_total_hz"] = rates["total"]

    if "qp_01_hz" in metrics or "qp_10_hz" in metrics:
        if settings.qp_env is None:
            raise SpecError("Quasiparticle metrics need a QuasiparticleEnv")
        report = qp_tunneling_rates(replace(spec, charge_resolution="electron"), settings.qp_env)
        values["qp_01_hz"] = report.rates["0->1"]
        values["qp_10_hz"] = report.rates["1->0"]

    for kind in ("charge", "flux", "critical_current"):
        name = f"dephasing_{kind}_hz"
        if name not in metrics:
            continue
        channel = settings.noise_channel(kind)
        response = frequency_response(spec, channel.parameters, threads=1)
        result = dephasing_time(
            response, channel, settings.realizations, threads=1,
            stream=(stream or RandomStream(0, 0)).substream(DEPHASING_SUBSTREAMS[kind]),
        )
        values[name] = result.rate
    return {m: values[m] for m in metrics}


@dataclass
class HistogramReport:
    """Sample values and statistics of one metric."""

    metric: str
    values: List[float]
    seed: int
    n_requested: int
    failures: List[Dict[str, Any]] = field(default_factory=list)
    resamples: int = 0
    scenario: str = "all"
    fidelity: str = "full"

    @property
    def mean(self) -> float:
        return float(np.mean(np.sort(self.values))) if self.values else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(np.sort(self.values), ddof=1)) if len(self.values) > 1 else 0.0

    @property
    def reference_mean(self) -> Optional[float]:
        return REFERENCE_MEANS.get(self.scenario, {}).get(self.metric)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "metric": self.metric,
            "mean": self.mean,
            "std": self.std,
            "n_samples": len(self.values),
            "n_requested": self.n_requested,
            "n_failures": len(self.failures),
            "failures": self.failures,
            "resamples": self.resamples,
            "seed": self.seed,
            "scenario": self.scenario,
            "fidelity": self.fidelity,
            "reference_mean": self.reference_mean,
        }


@dataclass
class _SampleResult:
    index: int
    values: Optional[Dict[str, float]]
    resamples: int
    error: Optional[str] = None


def mc_histograms(
    base: CircuitSpec,
    model: DisorderModel,
    metrics: Sequence[str],
    n_samples: int,
    master_seed: int,
    settings: Optional[MetricSettings] = None,
    threads: Optional[int] = None,
) -> Dict[str, HistogramReport]:
    """Histograms of several metrics from one set of disordered samples.

    Raises:
        NumericalError: When more than 10% of the samples fail
    """
    if n_samples < 10:
        raise SpecError(f"mc_histogram needs n_samples >= 10, got {n_samples}")
    settings = settings or MetricSettings()
    if any(m.startswith("qp_") for m in metrics):
        env = settings.qp_env or QuasiparticleEnv()
        if not env.structure_factor.calibrated:
            clean = replace(settings.adapt_spec(base), charge_resolution="electron")
            env = replace(env, structure_factor=calibrate_structure_factor(clean, env))
        settings = replace(settings, qp_env=env)

    def run_sample(index: int) -> _SampleResult:
        stream = RandomStream(master_seed, index)
        try:
            spec, resamples = _draw(base, model, stream)
        except NumericalError as e:
            return _SampleResult(index, None, MAX_RESAMPLES, f"{e.kind}: {e}")
        try:
            values = evaluate_metrics(spec, metrics, settings, stream)
            logger.debug(f"Disorder sample {index}: {values}")
            return _SampleResult(index, values, resamples)
        except (NumericalError, SpecError) as e:
            logger.warning(f"Disorder sample {index} failed: {e}")
            return _SampleResult(index, None, resamples, f"{e.kind}: {e}")

    logger.info(f"Disorder Monte Carlo: {n_samples} samples, scenario {model.scenario}")
    results = ordered_map(run_sample, list(range(n_samples)), threads)
    failures = [{"sample": r.index, "error": r.error} for r in results if r.values is None]
    if len(failures) > MAX_FAILURE_FRACTION * n_samples:
        raise NumericalError(
            f"{len(failures)} of {n_samples} disorder samples failed; aborting histogram"
        )
    resamples = sum(r.resamples for r in results)
    return {
        metric: HistogramReport(
            metric=metric,
            values=[r.values[metric] for r in results if r.values is not None],
            seed=master_seed,
            n_requested=n_samples,
            failures=failures,
            resamples=resamples,
            scenario=model.scenario,
            fidelity=settings.fidelity,
        )
        for metric in metrics
    }


def mc_histogram(
    base: CircuitSpec,
    model: DisorderModel,
    metric: str,
    n_samples: int,
    master_seed: int,
    settings: Optional[MetricSettings] = None,
    threads: Optional[int] = None,
) -> HistogramReport:
    """Histogram of one metric over n_samples disordered circuits."""
    return mc_histograms(base, model, [metric], n_samples, master_seed, settings, threads)[metric]
