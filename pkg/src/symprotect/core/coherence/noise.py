"""1/f noise synthesis and pure dephasing from the f_01 response surface.

Noise traces are built in the frequency domain: each positive bin gets a
complex normal amplitude scaled by sqrt(S(f) df / 2), the negative bins
carry the conjugate, and an inverse DFT returns a real series. The qubit
frequency is expanded to second order around the operating point,

    df_01(t) = g . x(t) + 1/2 x(t)^T h x(t),

and the decay function is the ensemble average of exp(-i phi(t)) with
phi = 2 pi int df_01 dt.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ...errors import NumericalError, SpecError
from ...utils.parallel import get_thread_count, ordered_map
from ..circuit import N_JUNCTIONS, N_NODES, CircuitSpec, transition_frequency
from ..numerics import RandomStream

logger = logging.getLogger(__name__)

NOISE_KINDS = ("charge", "flux", "critical_current")

# PSD strengths A of S(f) = A / |f|: charge in Cooper pairs^2 (2e-4 e),
# flux in Phi0^2, critical current relative to I_c.
DEFAULT_AMPLITUDES = {
    "charge": (1e-4) ** 2,
    "flux": (2e-6) ** 2,
    "critical_current": (1e-7) ** 2,
}

CHANNEL_PARAMETERS = {
    "charge": tuple(f"Ng{i}" for i in range(N_NODES)),
    "flux": tuple(f"flux{i}" for i in range(N_NODES)) + ("flux_ext",),
    "critical_current": tuple(f"EJ{j}" for j in range(N_JUNCTIONS)),
}

DEFAULT_STEP = 1e-4
REDUCED_SAMPLES = 200001

INV_E = float(np.exp(-1.0))


@dataclass(frozen=True)
class NoiseChannelSpec:
    """One-sided 1/f PSD of a noise channel and its sampling grid."""

    kind: str
    amplitude: Optional[float] = None
    f_low: float = 1.0
    f_high: float = 1e6
    df: float = 0.5
    n_samples: int = 1999999

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise SpecError(f"Unknown noise channel kind: {self.kind}")
        if self.n_samples % 2 == 0 or self.n_samples < 3:
            raise SpecError(f"n_samples must be odd and >= 3, got {self.n_samples}")
        if self.strength < 0:
            raise SpecError("Noise amplitude must be non-negative")
        if not 0 < self.f_low <= self.f_high or self.df <= 0:
            raise SpecError("Need 0 < f_low <= f_high and df > 0")

    @property
    def strength(self) -> float:
        return DEFAULT_AMPLITUDES[self.kind] if self.amplitude is None else float(self.amplitude)

    @property
    def dt(self) -> float:
        return 1.0 / (self.n_samples * self.df)

    @property
    def parameters(self) -> Tuple[str, ...]:
        return CHANNEL_PARAMETERS[self.kind]

    def psd(self, frequency: np.ndarray, strength: Optional[float] = None) -> np.ndarray:
        """One-sided S(f): flat below f_low, A/|f| up to f_high, zero above."""
        a = self.strength if strength is None else strength
        f = np.abs(np.asarray(frequency, dtype=float))
        return np.where(f < self.f_low, a / self.f_low, np.where(f <= self.f_high, a / np.maximum(f, self.f_low), 0.0))

    def expected_variance(self, strength: Optional[float] = None) -> float:
        """Variance of a synthesized trace, sum of S(f_k) df over the resolved bins."""
        k = np.arange(1, (self.n_samples - 1) // 2 + 1)
        return float(np.sum(self.psd(k * self.df, strength)) * self.df + self._dc_variance(strength))

    def _dc_variance(self, strength: Optional[float] = None) -> float:
        return float(self.psd(np.array([0.0]), strength)[0]) * self.df / 2.0

    def with_samples(self, n_samples: int) -> "NoiseChannelSpec":
        return NoiseChannelSpec(self.kind, self.amplitude, self.f_low, self.f_high, self.df, n_samples)


@dataclass
class NoiseTrace:
    values: np.ndarray
    dt: float
    max_imag: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt


def synthesize_1f_noise(
    channel: NoiseChannelSpec, stream: RandomStream, strength: Optional[float] = None
) -> NoiseTrace:
    """Real 1/f time series with time step 1/(N df).

    Args:
        channel: PSD and sampling grid
        stream: Random stream for the bin amplitudes
        strength: PSD strength overriding the channel's (used when a channel
            amplitude is split across parameters)
    """
    n = channel.n_samples
    half = (n - 1) // 2
    frequencies = np.arange(1, half + 1) * channel.df
    scale = np.sqrt(channel.psd(frequencies, strength) * channel.df / 2.0)

    spectrum = np.zeros(n, dtype=complex)
    spectrum[0] = stream.normal() * np.sqrt(channel._dc_variance(strength))
    positive = stream.complex_normal(half) * scale
    spectrum[1 : half + 1] = positive
    spectrum[n - half :] = np.conj(positive[::-1])

    series = n * np.fft.ifft(spectrum)
    rms = float(np.sqrt(np.mean(series.real**2))) or 1.0
    max_imag = float(np.max(np.abs(series.imag))) / rms
    return NoiseTrace(series.real.copy(), channel.dt, max_imag)


def periodogram(trace: NoiseTrace) -> Tuple[np.ndarray, np.ndarray]:
    """One-sided PSD estimate 2|X_k|^2 / (N^2 df) at the positive bins."""
    n = trace.values.size
    df = 1.0 / (n * trace.dt)
    transform = np.fft.fft(trace.values)
    half = (n - 1) // 2
    frequencies = np.arange(1, half + 1) * df
    estimate = 2.0 * np.abs(transform[1 : half + 1]) ** 2 / (n**2 * df)
    return frequencies, estimate


def perturb_spec(spec: CircuitSpec, offsets: Dict[str, float]) -> CircuitSpec:
    """Shift noise parameters: Ng_i and fluxes additively, E_J relatively."""
    gates = list(spec.gate_charges)
    flux = list(spec.flux)
    flux_ext = spec.flux_ext
    ej = list(spec.ej_multipliers)
    for name, value in offsets.items():
        if name.startswith("Ng"):
            gates[int(name[2:])] += value
        elif name == "flux_ext":
            flux_ext += value
        elif name.startswith("flux"):
            flux[int(name[4:])] += value
        elif name.startswith("EJ"):
            ej[int(name[2:])] *= 1.0 + value
        else:
            raise SpecError(f"Unknown noise parameter: {name}")
    return spec.with_updates(gate_charges=gates, flux=flux, flux_ext=flux_ext, ej_multipliers=ej)


@dataclass
class FrequencyResponse:
    """Gradient (Hz/unit) and Hessian (Hz/unit^2) of f_01 at an operating point."""

    parameters: Tuple[str, ...]
    gradient: np.ndarray
    hessian: np.ndarray
    f01_GHz: float
    base_spec: CircuitSpec
    step: float = DEFAULT_STEP

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.hessian - self.hessian.T))) if self.hessian.size else 0.0

    def frequency_shift(self, x: np.ndarray) -> np.ndarray:
        """df_01 in Hz for parameter offsets x of shape (P, T)."""
        linear = self.gradient @ x
        quadratic = 0.5 * np.einsum("pt,pq,qt->t", x, self.hessian, x)
        return linear + quadratic


def frequency_response(
    spec: CircuitSpec,
    parameters: Sequence[str],
    step: float = DEFAULT_STEP,
    stencil: int = 3,
    threads: Optional[int] = None,
    f01: Optional[Callable[[CircuitSpec], float]] = None,
) -> FrequencyResponse:
    """Central finite differences of f_01 over the given noise parameters.

    Diagonal Hessian entries use the 3-point second difference, off-diagonal
    ones the 4-point mixed stencil; the result is symmetrized. With
    ``stencil=5`` the gradient uses the 5-point formula.
    """
    if stencil not in (3, 5):
        raise SpecError("stencil must be 3 or 5")
    parameters = tuple(parameters)
    evaluate = f01 or transition_frequency
    p = len(parameters)

    points: List[Dict[str, float]] = [{}]
    for a in range(p):
        for sign in (1, -1):
            points.append({parameters[a]: sign * step})
            if stencil == 5:
                points.append({parameters[a]: 2 * sign * step})
    for a in range(p):
        for b in range(a + 1, p):
            for sa in (1, -1):
                for sb in (1, -1):
                    points.append({parameters[a]: sa * step, parameters[b]: sb * step})
    logger.info(f"Frequency response over {p} parameters ({len(points)} eigensolves)")
    values = ordered_map(lambda offsets: evaluate(perturb_spec(spec, offsets)), points, threads)
    table = {tuple(sorted(pt.items())): v for pt, v in zip(points, values)}

    def at(**offsets: float) -> float:
        return table[tuple(sorted(offsets.items()))] if offsets else table[()]

    f0 = at()
    gradient = np.zeros(p)
    hessian = np.zeros((p, p))
    for a, name in enumerate(parameters):
        plus, minus = at(**{name: step}), at(**{name: -step})
        if stencil == 5:
            plus2, minus2 = at(**{name: 2 * step}), at(**{name: -2 * step})
            gradient[a] = (-plus2 + 8 * plus - 8 * minus + minus2) / (12 * step)
        else:
            gradient[a] = (plus - minus) / (2 * step)
        hessian[a, a] = (plus - 2 * f0 + minus) / step**2
    for a in range(p):
        for b in range(a + 1, p):
            na, nb = parameters[a], parameters[b]
            mixed = (
                at(**{na: step, nb: step}) - at(**{na: step, nb: -step})
                - at(**{na: -step, nb: step}) + at(**{na: -step, nb: -step})
            ) / (4 * step**2)
            hessian[a, b] = hessian[b, a] = mixed
    hessian = 0.5 * (hessian + hessian.T)
    return FrequencyResponse(parameters, gradient * 1e9, hessian * 1e9, f0, spec, step)


@dataclass
class DephasingResult:
    """Decay function and the 1/e dephasing time."""

    channel: str
    times: np.ndarray
    decay: np.ndarray
    T_phi: float
    lower_bound: bool
    n_realizations: int
    seed: int
    metadata: Dict[str, float] = field(default_factory=dict)

    @property
    def rate(self) -> float:
        """Gamma_phi = 1/T_phi in Hz (0 when only a lower bound exists)."""
        return 0.0 if self.lower_bound else 1.0 / self.T_phi

    def trace_records(self, max_rows: int = 10001) -> List[Dict[str, float]]:
        stride = max(1, int(np.ceil(self.times.size / max_rows)))
        return [
            {"t_s": float(t), "re_f": float(f.real), "im_f": float(f.imag)}
            for t, f in zip(self.times[::stride], self.decay[::stride])
        ]


def _one_over_e_crossing(times: np.ndarray, decay: np.ndarray) -> Tuple[float, bool]:
    magnitude = np.abs(decay)
    below = np.nonzero(magnitude <= INV_E)[0]
    if below.size == 0:
        return float(times[-1]), True
    i = int(below[0])
    if i == 0:
        return 0.0, False
    m0, m1 = magnitude[i - 1], magnitude[i]
    t0, t1 = times[i - 1], times[i]
    return float(t0 + (m0 - INV_E) / (m0 - m1) * (t1 - t0)), False


def _realization_phase(
    response: FrequencyResponse, channel: NoiseChannelSpec, strength: float, stream: RandomStream
) -> np.ndarray:
    traces = np.stack([
        synthesize_1f_noise(channel, stream.substream(p), strength).values
        for p in range(len(response.parameters))
    ])
    shift = response.frequency_shift(traces)
    phase = 2.0 * np.pi * cumulative_trapezoid(shift, dx=channel.dt, initial=0.0)
    return np.exp(-1j * phase)


def dephasing_time(
    response: FrequencyResponse,
    channel: NoiseChannelSpec,
    n_realizations: int = 200,
    master_seed: int = 0,
    threads: Optional[int] = None,
    stream: Optional[RandomStream] = None,
) -> DephasingResult:
    """Ensemble decay f(t) = <exp(-i phi(t))> and the first 1/e crossing.

    The channel's PSD strength is split evenly across the response
    parameters; realization r draws parameter p from stream (seed, r, p),
    or from child (r, p) of ``stream`` when one is given.
    """
    if n_realizations < 1:
        raise SpecError("n_realizations must be at least 1")
    if len(response.parameters) == 0:
        raise SpecError("Frequency response has no parameters")
    strength = channel.strength / len(response.parameters)
    times = np.arange(channel.n_samples) * channel.dt
    threads = get_thread_count() if threads is None else max(1, int(threads))

    def _realization_stream(r: int) -> RandomStream:
        return stream.substream(r) if stream is not None else RandomStream(master_seed, r)

    total = np.zeros(channel.n_samples, dtype=complex)
    batch = max(1, threads)
    for start in range(0, n_realizations, batch):
        indices = list(range(start, min(start + batch, n_realizations)))
        results = ordered_map(
            lambda r: _realization_phase(response, channel, strength, _realization_stream(r)),
            indices,
            threads,
        )
        # accumulate in realization order so the sum does not depend on threads
        for result in results:
            total += result
        logger.debug(f"Dephasing realizations {indices[0]}-{indices[-1]} done")
    decay = total / n_realizations
    if not np.all(np.isfinite(decay)):
        raise NumericalError("Decay function contains non-finite values")

    T_phi, lower = _one_over_e_crossing(times, decay)
    if lower:
        logger.warning(
            f"{channel.kind} decay never reaches 1/e within {times[-1]:.3g} s; "
            f"reporting T_phi > {T_phi:.3g} s"
        )
    else:
        logger.info(f"{channel.kind} T_phi = {T_phi * 1e3:.4g} ms")
    return DephasingResult(
        channel=channel.kind,
        times=times,
        decay=decay,
        T_phi=float("inf") if lower else T_phi,
        lower_bound=lower,
        n_realizations=n_realizations,
        seed=master_seed,
        metadata={"trace_length_s": float(times[-1]), "strength": channel.strength},
    )
