"""Qubit operation: resonator coupling, Purcell initialization, STIRAP, readout.

Hamiltonians handed to :func:`evolve_lindblad` are angular frequencies in
rad/s and times are seconds. Circuit energies stay in GHz until they enter
a propagator.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.constants as const
import scipy.linalg as linalg
from scipy.integrate import solve_ivp
from scipy.special import erf

from ..errors import NumericalError, SpecError, TruncationError
from ..utils.parallel import ordered_map
from .circuit import CircuitSpec, CircuitStates, circuit_spectrum, critical_current, transition_matrix_element

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
FOCK_POPULATION_LIMIT = 1e-4
ADIABATIC_EFFICIENCY = 0.99
STIRAP_SHAPES = ("mixing_angle", "gaussian")

Hamiltonian = Union[np.ndarray, Callable[[float], np.ndarray]]


@dataclass(frozen=True)
class ResonatorSpec:
    """LC readout resonator sharing an inductance l with one azimuthal junction."""

    L: float = 1.50e-9
    C: float = 1.48e-12
    kappa_over_2pi: float = 0.3e6
    fock_cutoff: int = 4
    shared_inductance: float = 40e-12
    coupled_junction: int = 4
    mean_photons: float = 0.0

    def __post_init__(self) -> None:
        if self.L <= 0 or self.C <= 0:
            raise SpecError("Resonator L and C must be positive")
        if self.kappa_over_2pi < 0 or self.shared_inductance < 0:
            raise SpecError("kappa and shared inductance must be non-negative")
        if self.fock_cutoff < 2:
            raise SpecError("fock_cutoff must be at least 2")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "ResonatorSpec":
        return cls(
            L=float(config["L_nH"]) * 1e-9,
            C=float(config["C_pF"]) * 1e-12,
            kappa_over_2pi=float(config["kappa_over_2pi_MHz"]) * 1e6,
            fock_cutoff=int(config["fock_cutoff"]),
            shared_inductance=float(config["shared_inductance_pH"]) * 1e-12,
            coupled_junction=int(config.get("coupled_junction", 4)),
            mean_photons=float(config.get("mean_photons", 0.0)),
        )

    @property
    def omega(self) -> float:
        """omega_r = 1/sqrt(LC) in rad/s."""
        return 1.0 / np.sqrt(self.L * self.C)

    @property
    def frequency_GHz(self) -> float:
        return self.omega / TWO_PI / 1e9

    @property
    def impedance(self) -> float:
        return float(np.sqrt(self.L / self.C))

    @property
    def current_zpf(self) -> float:
        """I_ZPF = omega_r sqrt(hbar / 2Z) in amperes."""
        return self.omega * np.sqrt(const.hbar / (2.0 * self.impedance))

    @property
    def kappa(self) -> float:
        return TWO_PI * self.kappa_over_2pi

    @property
    def quality_factor(self) -> float:
        return self.omega / self.kappa if self.kappa > 0 else float("inf")

    def coupling_GHz(self, current_element: complex) -> complex:
        """g = l I_ZPF <i|I_a|j> / h in GHz."""
        return self.shared_inductance * self.current_zpf * current_element / const.h / 1e9


def thermal_ground_population(f01_GHz: float, temperature_K: float = 0.025) -> float:
    """p0 = 1 / (1 + exp(-h f01 / k T)) for a two-level system."""
    if temperature_K <= 0:
        return 1.0
    ratio = const.h * f01_GHz * 1e9 / (const.k * temperature_K)
    return float(1.0 / (1.0 + np.exp(-ratio)))


def thermal_photon_number(f_GHz: float, temperature_K: float) -> float:
    if temperature_K <= 0:
        return 0.0
    return float(1.0 / np.expm1(const.h * f_GHz * 1e9 / (const.k * temperature_K)))


def annihilation(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock)), 1).astype(complex)


@dataclass(frozen=True)
class PulseSchedule:
    """Flux ramp or STIRAP pulse pair.

    Flux ramps move every loop flux from the optimal point by
    (target_scale - 1) x Phi_opt, hold, and return. STIRAP schedules are
    built on Gaussian pump and Stokes envelopes of width sigma, Stokes first
    and the pump one delay later.

    With ``shape="gaussian"`` the two Gaussians are applied as they are.
    Their mixing angle arctan(Omega_P / Omega_S) only approaches 0 and pi/2
    exponentially, so population freezes out at the pulse edges. The default
    ``shape="mixing_angle"`` keeps the rms envelope of the pair but sweeps the
    mixing angle along a smoothed error function of width sigma, centred
    between the pulses. It starts at 0 and ends at pi/2 with zero slope.
    """

    kind: str
    ramp_up: float = 10e-6
    hold: float = 5e-6
    ramp_down: float = 10e-6
    target_scale: float = 1.17
    sigma: float = 20e-9
    delay: float = 15e-9
    peak_pump: float = TWO_PI * 200e6
    peak_stokes: float = TWO_PI * 200e6
    time_step: float = 10e-9
    shape: str = "mixing_angle"

    def __post_init__(self) -> None:
        if self.kind not in ("flux_ramp", "stirap"):
            raise SpecError(f"Unknown schedule kind: {self.kind}")
        if self.time_step <= 0:
            raise SpecError("time_step must be positive")
        if self.kind == "flux_ramp" and (min(self.ramp_up, self.ramp_down) <= 0 or self.hold < 0):
            raise SpecError("Ramp times must be positive and the hold non-negative")
        if self.kind == "stirap":
            if self.sigma <= 0:
                raise SpecError("Gaussian width must be positive")
            if self.delay <= 0:
                raise SpecError("Stokes pulse must precede the pump (delay > 0)")
            if self.peak_pump < 0 or self.peak_stokes < 0:
                raise SpecError("Peak Rabi frequencies must be non-negative")
            if self.shape not in STIRAP_SHAPES:
                raise SpecError(f"Unknown STIRAP shape: {self.shape}")

    @classmethod
    def flux_ramp(cls, ramp_up: float = 10e-6, hold: float = 5e-6, ramp_down: float = 10e-6,
                  target_scale: float = 1.17, time_step: float = 10e-9) -> "PulseSchedule":
        return cls("flux_ramp", ramp_up=ramp_up, hold=hold, ramp_down=ramp_down,
                   target_scale=target_scale, time_step=time_step)

    @classmethod
    def stirap(cls, sigma: float = 20e-9, delay: float = 15e-9, peak_rabi: float = TWO_PI * 200e6,
               stokes_ratio: float = 1.0, time_step: float = 0.5e-9,
               shape: str = "mixing_angle") -> "PulseSchedule":
        return cls("stirap", sigma=sigma, delay=delay, peak_pump=peak_rabi,
                   peak_stokes=peak_rabi * stokes_ratio, time_step=time_step, shape=shape)

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "PulseSchedule":
        if config["kind"] == "flux_ramp":
            return cls.flux_ramp(
                ramp_up=float(config["ramp_up_us"]) * 1e-6,
                hold=float(config["hold_us"]) * 1e-6,
                ramp_down=float(config["ramp_down_us"]) * 1e-6,
                target_scale=float(config["target_flux_scale"]),
                time_step=float(config["time_step_ns"]) * 1e-9,
            )
        return cls.stirap(
            sigma=float(config["sigma_ns"]) * 1e-9,
            delay=float(config["delay_ns"]) * 1e-9,
            peak_rabi=TWO_PI * float(config["peak_rabi_over_2pi_MHz"]) * 1e6,
            stokes_ratio=float(config.get("stokes_ratio", 1.0)),
            time_step=float(config["time_step_ns"]) * 1e-9,
            shape=config.get("shape", "mixing_angle"),
        )

    @property
    def duration(self) -> float:
        if self.kind == "flux_ramp":
            return self.ramp_up + self.hold + self.ramp_down
        return 10.0 * self.sigma + self.delay

    def times(self) -> np.ndarray:
        steps = max(1, int(np.ceil(self.duration / self.time_step)))
        return np.linspace(0.0, self.duration, steps + 1)

    def ramp_fraction(self, t: float) -> float:
        """0 at the optimal point, 1 at the target flux."""
        if t <= self.ramp_up:
            return max(0.0, t / self.ramp_up)
        if t <= self.ramp_up + self.hold:
            return 1.0
        return max(0.0, 1.0 - (t - self.ramp_up - self.hold) / self.ramp_down)

    @property
    def stokes_center(self) -> float:
        return 5.0 * self.sigma

    @property
    def pump_center(self) -> float:
        return self.stokes_center + self.delay

    def _gaussian(self, t: float, center: float) -> float:
        return float(np.exp(-((t - center) ** 2) / (2 * self.sigma**2)))

    def mixing_angle(self, t: float) -> float:
        """theta(t) with tan(theta) = Omega_P / Omega_S at equal peaks."""
        if self.shape == "gaussian":
            pump, stokes = self._gaussian(t, self.pump_center), self._gaussian(t, self.stokes_center)
            return float(np.arctan2(pump, stokes))
        midpoint = 0.5 * (self.stokes_center + self.pump_center)
        progress = 0.5 * (1.0 + erf((t - midpoint) / (np.sqrt(2.0) * self.sigma)))
        return float(0.5 * np.pi * (progress - np.sin(TWO_PI * progress) / TWO_PI))

    def _envelope(self, t: float) -> float:
        return float(np.hypot(self._gaussian(t, self.pump_center), self._gaussian(t, self.stokes_center)))

    def pump(self, t: float) -> float:
        if self.shape == "gaussian":
            return self.peak_pump * self._gaussian(t, self.pump_center)
        return self.peak_pump * self._envelope(t) * np.sin(self.mixing_angle(t))

    def stokes(self, t: float) -> float:
        if self.shape == "gaussian":
            return self.peak_stokes * self._gaussian(t, self.stokes_center)
        return self.peak_stokes * self._envelope(t) * np.cos(self.mixing_angle(t))

    def scaled(self, factor: float) -> "PulseSchedule":
        """Same schedule with both peak Rabi frequencies multiplied by factor."""
        return replace(self, peak_pump=self.peak_pump * factor, peak_stokes=self.peak_stokes * factor)


@dataclass
class LindbladResult:
    times: np.ndarray
    states: np.ndarray

    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tii->ti", self.states))

    def traces(self) -> np.ndarray:
        return np.real(np.einsum("tii->t", self.states))

    def expectation(self, operator: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("tij,ji->t", self.states, operator))


def liouvillian(hamiltonian: np.ndarray, collapse: Sequence[np.ndarray]) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    dim = hamiltonian.shape[0]
    identity = np.eye(dim)
    generator = -1j * (np.kron(hamiltonian, identity) - np.kron(identity, hamiltonian.T))
    for c in collapse:
        cdc = c.conj().T @ c
        generator += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, identity) - 0.5 * np.kron(identity, cdc.T)
    return generator


def evolve_lindblad(
    hamiltonian: Hamiltonian,
    collapse: Sequence[np.ndarray],
    rho0: np.ndarray,
    times: np.ndarray,
    method: str = "rk",
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> LindbladResult:
    """Integrate d rho/dt = -i[H, rho] + sum_k (C rho C^+ - {C^+C, rho}/2).

    Args:
        hamiltonian: Matrix or callable t -> matrix, in rad/s
        collapse: Collapse operators with rates folded in (sqrt(gamma) C)
        rho0: Initial density matrix
        times: Output times in seconds, ascending
        method: "rk" for adaptive Runge-Kutta, "piecewise" for exact
            exponentials of the Liouvillian on each output interval, with H
            evaluated at the interval midpoint

    Raises:
        NumericalError: If the integrator fails or the trace drifts
    """
    times = np.asarray(times, dtype=float)
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    h_of_t = hamiltonian if callable(hamiltonian) else (lambda t, h=np.asarray(hamiltonian): h)
    collapse = [np.asarray(c, dtype=complex) for c in collapse]

    if method == "rk":
        dissipators = [(c, c.conj().T, c.conj().T @ c) for c in collapse]

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            rho = y.reshape(dim, dim)
            h = h_of_t(t)
            drho = -1j * (h @ rho - rho @ h)
            for c, cd, cdc in dissipators:
                drho += c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
            return drho.ravel()

        solution = solve_ivp(rhs, (times[0], times[-1]), rho0.ravel(), t_eval=times,
                             method="DOP853", rtol=rtol, atol=atol)
        if not solution.success:
            raise NumericalError(f"Lindblad integration failed: {solution.message}")
        states = solution.y.T.reshape(-1, dim, dim)
    elif method == "piecewise":
        states = np.empty((times.size, dim, dim), dtype=complex)
        states[0] = rho0
        vector = rho0.ravel()
        for k in range(1, times.size):
            dt = times[k] - times[k - 1]
            generator = liouvillian(h_of_t(0.5 * (times[k] + times[k - 1])), collapse)
            vector = linalg.expm(generator * dt) @ vector
            states[k] = vector.reshape(dim, dim)
    else:
        raise NumericalError(f"Unknown Lindblad method: {method}")

    result = LindbladResult(times, states)
    drift = float(np.max(np.abs(result.traces() - np.real(np.trace(rho0)))))
    if drift > 1e-8:
        raise NumericalError(f"Density-matrix trace drifted by {drift:.3e}")
    return result


@dataclass
class CoupledSystem:
    """Circuit levels tensored with resonator Fock states, energies in GHz."""

    hamiltonian: np.ndarray
    energies: np.ndarray
    couplings: np.ndarray
    resonator: ResonatorSpec

    @property
    def n_levels(self) -> int:
        return int(self.energies.size)

    @property
    def n_fock(self) -> int:
        return self.resonator.fock_cutoff


def coupling_matrix(states: CircuitStates, resonator: ResonatorSpec, n_levels: int) -> np.ndarray:
    """g_ij = l I_ZPF <i|I_a|j> in GHz."""
    g = np.zeros((n_levels, n_levels), dtype=complex)
    for i in range(n_levels):
        for j in range(n_levels):
            element = transition_matrix_element(states, "junction_current", resonator.coupled_junction, j, i)
            g[i, j] = resonator.coupling_GHz(element)
    return g


def coupled_hamiltonian(
    states: CircuitStates, resonator: ResonatorSpec, n_levels: int = 2
) -> CoupledSystem:
    """H = sum E_i |i><i| + f_r a^+a + l I_ZPF (a + a^+) I_a, in GHz."""
    if len(states.spectrum) < n_levels:
        raise SpecError(f"Need {n_levels} circuit states, have {len(states.spectrum)}")
    energies = states.energies[:n_levels] - states.energies[0]
    g = coupling_matrix(states, resonator, n_levels)
    a = annihilation(resonator.fock_cutoff)
    hamiltonian = (
        np.kron(np.diag(energies), np.eye(resonator.fock_cutoff))
        + resonator.frequency_GHz * np.kron(np.eye(n_levels), a.conj().T @ a)
        + np.kron(g, a + a.conj().T)
    )
    return CoupledSystem(hamiltonian, energies, g, resonator)


@dataclass
class FluxResponseTable:
    """f_01 and |g_01| against the ramp fraction of the flux detuning."""

    fractions: np.ndarray
    f01_GHz: np.ndarray
    g01_GHz: np.ndarray
    target_scale: float

    def at(self, fraction: float) -> Tuple[float, float]:
        return (
            float(np.interp(fraction, self.fractions, self.f01_GHz)),
            float(np.interp(fraction, self.fractions, self.g01_GHz)),
        )

    def resonant_fraction(self, f_r_GHz: float) -> Optional[float]:
        """First ramp fraction where f_01 crosses f_r, by linear interpolation."""
        detuning = self.f01_GHz - f_r_GHz
        for k in range(1, detuning.size):
            if detuning[k - 1] == 0.0:
                return float(self.fractions[k - 1])
            if detuning[k - 1] * detuning[k] < 0:
                x0, x1 = self.fractions[k - 1], self.fractions[k]
                return float(x0 + detuning[k - 1] / (detuning[k - 1] - detuning[k]) * (x1 - x0))
        return None


def flux_response_table(
    base: CircuitSpec,
    resonator: ResonatorSpec,
    target_scale: float = 1.17,
    points: int = 25,
    threads: Optional[int] = None,
) -> FluxResponseTable:
    """Tabulate f_01 and the resonator coupling as all fluxes move to target_scale x optimum."""
    fractions = np.linspace(0.0, 1.0, points)

    def evaluate(fraction: float) -> Tuple[float, float]:
        delta = fraction * (target_scale - 1.0) * 0.5
        states = circuit_spectrum(base.with_flux_offset(delta, "all"), k=2)
        element = transition_matrix_element(states, "junction_current", resonator.coupled_junction)
        return states.f01, abs(resonator.coupling_GHz(element))

    values = ordered_map(evaluate, list(fractions), threads)
    return FluxResponseTable(
        fractions, np.array([v[0] for v in values]), np.array([v[1] for v in values]), target_scale
    )


@dataclass
class InitializationResult:
    times: np.ndarray
    ground_population: np.ndarray
    f01_GHz: np.ndarray
    g01_GHz: np.ndarray
    initial_population: float
    max_fock_population: float

    @property
    def final_fidelity(self) -> float:
        return float(self.ground_population[-1])

    def records(self) -> List[Dict[str, float]]:
        return [
            {"t_s": float(t), "p0": float(p), "f01_GHz": float(f), "g01_GHz": float(g)}
            for t, p, f, g in zip(self.times, self.ground_population, self.f01_GHz, self.g01_GHz)
        ]


def purcell_initialization(
    table: FluxResponseTable,
    resonator: ResonatorSpec,
    schedule: Optional[PulseSchedule] = None,
    temperature_K: float = 0.025,
    qubit_gamma1: float = 0.0,
) -> InitializationResult:
    """Ground-state population along a flux ramp through the resonator.

    Two qubit levels times the resonator Fock space, in the frame rotating at
    f_r with the rotating-wave coupling g(sigma+ a + sigma- a^+). The resonator
    decays at kappa into a bath at the device temperature; the qubit starts
    thermal.

    Raises:
        TruncationError: If the top Fock level is populated beyond 1e-4
    """
    schedule = schedule or PulseSchedule.flux_ramp()
    if schedule.kind != "flux_ramp":
        raise SpecError("purcell_initialization needs a flux_ramp schedule")
    n_fock = resonator.fock_cutoff
    f_r = resonator.frequency_GHz
    a = annihilation(n_fock)
    raising = np.array([[0, 0], [1, 0]], dtype=complex)
    excited = np.kron(np.diag([0.0, 1.0]), np.eye(n_fock))
    exchange = np.kron(raising, a) + np.kron(raising.conj().T, a.conj().T)

    def hamiltonian(t: float) -> np.ndarray:
        f01, g = table.at(schedule.ramp_fraction(t))
        return TWO_PI * 1e9 * ((f01 - f_r) * excited + g * exchange)

    n_th = thermal_photon_number(f_r, temperature_K)
    collapse = []
    if resonator.kappa > 0:
        collapse.append(np.sqrt(resonator.kappa * (n_th + 1.0)) * np.kron(np.eye(2), a))
        if n_th > 0:
            collapse.append(np.sqrt(resonator.kappa * n_th) * np.kron(np.eye(2), a.conj().T))
    if qubit_gamma1 > 0:
        collapse.append(np.sqrt(qubit_gamma1) * np.kron(raising.conj().T, np.eye(n_fock)))

    f01_start, _ = table.at(0.0)
    p0 = thermal_ground_population(f01_start, temperature_K)
    photons = np.exp(-np.arange(n_fock) * np.log1p(1.0 / n_th)) if n_th > 0 else np.eye(n_fock)[0]
    photons = photons / photons.sum()
    rho0 = np.kron(np.diag([p0, 1.0 - p0]), np.diag(photons)).astype(complex)

    times = schedule.times()
    result = evolve_lindblad(hamiltonian, collapse, rho0, times, method="piecewise")
    populations = result.populations().reshape(times.size, 2, n_fock)
    ground = populations[:, 0, :].sum(axis=1)
    top_fock = float(populations[:, :, -1].sum(axis=1).max())
    if top_fock > FOCK_POPULATION_LIMIT:
        raise TruncationError(f"Fock level {n_fock - 1} reaches population {top_fock:.2e}")

    fractions = [schedule.ramp_fraction(t) for t in times]
    trajectory = np.array([table.at(x) for x in fractions])
    logger.info(f"Initialization: p0 {p0:.4f} -> {ground[-1]:.5f} over {times[-1] * 1e6:.1f} us")
    return InitializationResult(times, ground, trajectory[:, 0], trajectory[:, 1], p0, top_fock)


@dataclass
class StirapResult:
    times: np.ndarray
    populations: np.ndarray
    intermediate: int
    pump_frequency_GHz: float
    stokes_frequency_GHz: float

    @property
    def efficiency(self) -> float:
        return float(self.populations[-1, 1])

    def records(self) -> List[Dict[str, float]]:
        rows = []
        for t, p in zip(self.times, self.populations):
            row = {"t_s": float(t)}
            row.update({f"p{i}": float(v) for i, v in enumerate(p)})
            rows.append(row)
        return rows


def stirap_transfer(
    energies_GHz: Sequence[float],
    schedule: Optional[PulseSchedule] = None,
    gamma1: float = 20.0,
    gamma_intermediate: Optional[float] = None,
    intermediate: int = 3,
    detuning_GHz: float = 0.0,
    couplings: Tuple[float, float] = (1.0, 1.0),
) -> StirapResult:
    """|0> -> |1> transfer through the Lambda system 0 - k - 1.

    Pump drives 0-k at f_0k and Stokes drives 1-k at f_1k, both under the
    rotating-wave approximation; ``detuning_GHz`` offsets the intermediate
    level. |1> relaxes to |0> at gamma1 and the intermediate level decays
    into both at gamma_intermediate/2 each. The efficiency is the final
    population of |1>.
    """
    schedule = schedule or PulseSchedule.stirap()
    if schedule.kind != "stirap":
        raise SpecError("stirap_transfer needs a stirap schedule")
    energies = np.asarray(energies_GHz, dtype=float)
    n = energies.size
    if not 2 <= intermediate < n:
        raise SpecError(f"Intermediate level {intermediate} outside the {n}-level space")
    if gamma_intermediate is None:
        gamma_intermediate = gamma1
    k = intermediate

    def projector(i: int, j: int) -> np.ndarray:
        m = np.zeros((n, n), dtype=complex)
        m[i, j] = 1.0
        return m

    pump_op = couplings[0] * (projector(0, k) + projector(k, 0))
    stokes_op = couplings[1] * (projector(1, k) + projector(k, 1))
    static = TWO_PI * 1e9 * detuning_GHz * projector(k, k)

    def hamiltonian(t: float) -> np.ndarray:
        return static + 0.5 * schedule.pump(t) * pump_op + 0.5 * schedule.stokes(t) * stokes_op

    collapse = []
    if gamma1 > 0:
        collapse.append(np.sqrt(gamma1) * projector(0, 1))
    if gamma_intermediate > 0:
        collapse.append(np.sqrt(gamma_intermediate / 2) * projector(0, k))
        collapse.append(np.sqrt(gamma_intermediate / 2) * projector(1, k))

    rho0 = projector(0, 0)
    times = schedule.times()
    result = evolve_lindblad(hamiltonian, collapse, rho0, times, method="rk")
    populations = result.populations()
    outcome = StirapResult(
        times, populations, k, float(energies[k] - energies[0]), float(energies[k] - energies[1])
    )
    if schedule.peak_pump > 0 and outcome.efficiency < ADIABATIC_EFFICIENCY:
        logger.warning(f"STIRAP efficiency {outcome.efficiency:.5f} below {ADIABATIC_EFFICIENCY}; "
                       "transfer is not adiabatic")
    else:
        logger.info(f"STIRAP efficiency {outcome.efficiency:.7f}")
    return outcome


@dataclass
class DispersiveReport:
    """Dispersive shifts, Lamb shifts and dressed frequencies in GHz."""

    chi_levels: np.ndarray
    lamb_shifts: np.ndarray
    chi: float
    dressed_f01: float
    dressed_fr: float
    dispersive: np.ndarray
    near_resonant: List[Tuple[int, int]] = field(default_factory=list)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "chi_over_2pi_MHz": self.chi * 1e3,
            "chi_levels_GHz": self.chi_levels,
            "lamb_shifts_GHz": self.lamb_shifts,
            "dressed_f01_GHz": self.dressed_f01,
            "dressed_fr_GHz": self.dressed_fr,
            "near_resonant_pairs": [list(p) for p in self.near_resonant],
        }


def dispersive_parameters(
    energies_GHz: Sequence[float], couplings_GHz: np.ndarray, resonator: ResonatorSpec
) -> DispersiveReport:
    """chi_i = sum_j (|g_ij|^2/D_ij - |g_ji|^2/D_ji), D_ij = f_i - f_j - f_r.

    A pair (i, j) is dispersive when |D_ij| >= 10 |g_ij| sqrt(1 + n).
    """
    f = np.asarray(energies_GHz, dtype=float)
    g = np.asarray(couplings_GHz)
    m = f.size
    f_r = resonator.frequency_GHz
    delta = f[:, np.newaxis] - f[np.newaxis, :] - f_r
    weight = np.abs(g) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(weight > 0, weight / delta, 0.0)
    lamb = ratio.sum(axis=1)
    chi_levels = ratio.sum(axis=1) - ratio.sum(axis=0)

    dispersive = np.abs(delta) >= 10.0 * np.abs(g) * np.sqrt(1.0 + resonator.mean_photons)
    near = [(i, j) for i in range(m) for j in range(m) if not dispersive[i, j]]
    if near:
        logger.warning(f"Pairs outside the dispersive regime: {near}")
    chi = 0.5 * (chi_levels[1] - chi_levels[0])
    return DispersiveReport(
        chi_levels=chi_levels,
        lamb_shifts=lamb,
        chi=float(chi),
        dressed_f01=float(f[1] - f[0] + lamb[1] - lamb[0]),
        dressed_fr=float(f_r + 0.5 * (chi_levels[0] + chi_levels[1])),
        dispersive=dispersive,
        near_resonant=near,
    )


def circuit_dispersive_parameters(
    states: CircuitStates, resonator: ResonatorSpec, n_levels: int = 5
) -> DispersiveReport:
    """Dispersive parameters from the lowest n_levels circuit states."""
    if len(states.spectrum) < n_levels:
        raise SpecError(f"Need {n_levels} circuit states, have {len(states.spectrum)}")
    energies = states.energies[:n_levels] - states.energies[0]
    return dispersive_parameters(energies, coupling_matrix(states, resonator, n_levels), resonator)


def numerical_dispersive_shift(system: CoupledSystem) -> float:
    """chi from exact diagonalization: half the difference of the resonator
    frequencies seen with the qubit in |1> and in |0>, dressed states labeled
    by their largest bare overlap."""
    values, vectors = linalg.eigh(system.hamiltonian)
    n_fock = system.n_fock
    labels = {}
    for col in range(values.size):
        bare = int(np.argmax(np.abs(vectors[:, col]) ** 2))
        labels.setdefault(bare, values[col])
    needed = [0 * n_fock + 0, 0 * n_fock + 1, 1 * n_fock + 0, 1 * n_fock + 1]
    if any(index not in labels for index in needed):
        raise NumericalError("Could not label the dressed states")
    shift0 = labels[1] - labels[0]
    shift1 = labels[n_fock + 1] - labels[n_fock]
    return float(0.5 * (shift1 - shift0))


@dataclass
class InductanceRenormalization:
    eta: float
    L_J: float
    E_J_adjusted_GHz: float
    delta_E_J_GHz: float
    delta_I_c: float


def renormalize_shared_inductance(l: float, E_Ja_GHz: float) -> InductanceRenormalization:
    """Fold a series inductance l into the junction: L_J -> L_J (1 + l/L_J)."""
    if l < 0:
        raise SpecError("Shared inductance must be non-negative")
    if E_Ja_GHz <= 0:
        raise SpecError("E_Ja must be positive")
    reduced_flux_quantum = const.hbar / (2.0 * const.e)
    L_J = reduced_flux_quantum**2 / (const.h * E_Ja_GHz * 1e9)
    eta = l / L_J
    adjusted = E_Ja_GHz / (1.0 + eta)
    return InductanceRenormalization(
        eta=eta,
        L_J=L_J,
        E_J_adjusted_GHz=adjusted,
        delta_E_J_GHz=E_Ja_GHz - adjusted,
        delta_I_c=critical_current(E_Ja_GHz) - critical_current(adjusted),
    )
