"""Charge-basis model of the four-node ring circuit.

Four islands sit on a ring around a grounded centre. Each island couples to
ground through a radial junction, to its neighbours through azimuthal
junctions and to the opposite island through one of two diametric
junctions. Energies are E/h in GHz, fluxes in units of Phi0 and gate
charges in Cooper pairs.

Junction order (used by the multiplier tuples and reports):
radial 0-3, azimuthal 4-7 (nodes i, i+1), diametric 8-9 (nodes i, i+2).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.constants as const
import scipy.sparse as sparse
from scipy.optimize import minimize, minimize_scalar

from ..errors import NumericalError, SpecError, TruncationError
from ..utils.parallel import ordered_map
from .numerics import SparseOperator, Spectrum, lowest_eigenpairs

logger = logging.getLogger(__name__)

N_NODES = 4
N_JUNCTIONS = 10
JUNCTION_KINDS = ("radial",) * 4 + ("azimuthal",) * 4 + ("diametric",) * 2
CHARGE_RESOLUTIONS = ("cooper_pair", "electron")
FLUX_MODES = ("all", "outer")

# Matrix elements below this count as vanishing when classifying protection.
PROTECTION_ELEMENT_TOL = 1e-6


@dataclass(frozen=True)
class Junction:
    """One Josephson junction of the ring."""

    index: int
    kind: str
    nodes: Tuple[int, ...]
    E_J: float
    E_C: float
    flux: float

    @property
    def capacitance(self) -> float:
        return charging_energy_to_capacitance(self.E_C)

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.index}"


def charging_energy_to_capacitance(E_C_GHz: float) -> float:
    """C = e^2 / (2 h E_C), in farads."""
    return const.e**2 / (2.0 * const.h * E_C_GHz * 1e9)


def critical_current(E_J_GHz: float) -> float:
    """I_c = 2 pi E_J / Phi0 in amperes (E_J given as E_J/h in GHz)."""
    return 4.0 * np.pi * const.e * E_J_GHz * 1e9


@dataclass(frozen=True)
class CircuitSpec:
    """Junction parameters, biases and truncation of the ring circuit."""

    E_Jr: float = 2.5
    E_Cr: float = 5.0
    E_Ja: float = 5.0
    E_Ca: float = 2.5
    E_Jl: float = 5.55
    E_Cl: float = 2.25
    ej_multipliers: Tuple[float, ...] = (1.0,) * N_JUNCTIONS
    ec_multipliers: Tuple[float, ...] = (1.0,) * N_JUNCTIONS
    flux: Tuple[float, ...] = (0.5,) * N_NODES
    flux_ext: float = 0.5
    gate_charges: Tuple[float, ...] = (0.5,) * N_NODES
    n_max: int = 7
    geometric_cap_fraction: float = 0.1
    geometric_caps_in_hamiltonian: bool = False
    charge_resolution: str = "cooper_pair"

    def __post_init__(self) -> None:
        for name in ("E_Jr", "E_Ja", "E_Jl"):
            if getattr(self, name) < 0:
                raise SpecError(f"{name} must be non-negative, got {getattr(self, name)}")
        for name in ("E_Cr", "E_Ca", "E_Cl"):
            if getattr(self, name) <= 0:
                raise SpecError(f"{name} must be positive, got {getattr(self, name)}")
        if len(self.ej_multipliers) != N_JUNCTIONS or len(self.ec_multipliers) != N_JUNCTIONS:
            raise SpecError(f"Junction multipliers need {N_JUNCTIONS} entries")
        if min(self.ej_multipliers) < 0 or min(self.ec_multipliers) <= 0:
            raise SpecError("Junction multipliers must keep E_J >= 0 and E_C > 0")
        if len(self.flux) != N_NODES or len(self.gate_charges) != N_NODES:
            raise SpecError(f"Need {N_NODES} inner fluxes and {N_NODES} gate charges")
        if self.n_max < 2:
            raise SpecError(f"n_max must be at least 2, got {self.n_max}")
        if self.geometric_cap_fraction < 0:
            raise SpecError("geometric_cap_fraction must be non-negative")
        if self.charge_resolution not in CHARGE_RESOLUTIONS:
            raise SpecError(f"Unknown charge_resolution: {self.charge_resolution}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "CircuitSpec":
        """Build a spec from the ``circuit`` section of a run configuration."""
        return cls(
            E_Jr=float(config["E_Jr_GHz"]),
            E_Cr=float(config["E_Cr_GHz"]),
            E_Ja=float(config["E_Ja_GHz"]),
            E_Ca=float(config["E_Ca_GHz"]),
            E_Jl=float(config["E_Jl_GHz"]),
            E_Cl=float(config["E_Cl_GHz"]),
            ej_multipliers=tuple(float(x) for x in config.get("ej_multipliers", (1.0,) * N_JUNCTIONS)),
            ec_multipliers=tuple(float(x) for x in config.get("ec_multipliers", (1.0,) * N_JUNCTIONS)),
            flux=tuple(float(x) for x in config["flux_Phi0"]),
            flux_ext=float(config["flux_ext_Phi0"]),
            gate_charges=tuple(float(x) for x in config["Ng_cooper_pairs"]),
            n_max=int(config["n_max"]),
            geometric_cap_fraction=float(config.get("geometric_cap_fraction", 0.1)),
            geometric_caps_in_hamiltonian=bool(config.get("geometric_caps_in_hamiltonian", False)),
            charge_resolution=config.get("charge_resolution", "cooper_pair"),
        )

    def with_updates(self, **changes: Any) -> "CircuitSpec":
        for key in ("ej_multipliers", "ec_multipliers", "flux", "gate_charges"):
            if key in changes:
                changes[key] = tuple(float(x) for x in changes[key])
        return replace(self, **changes)

    def with_flux_offset(self, delta: float, mode: str = "all") -> "CircuitSpec":
        """Shift the fluxes; "all" moves inner loops and the outer loop, "outer" only the outer."""
        if mode not in FLUX_MODES:
            raise SpecError(f"Unknown flux mode: {mode}")
        if mode == "outer":
            return replace(self, flux_ext=self.flux_ext + delta)
        return replace(
            self, flux=tuple(f + delta for f in self.flux), flux_ext=self.flux_ext + delta
        )

    def with_gate_offset(self, delta: float) -> "CircuitSpec":
        return replace(self, gate_charges=tuple(g + delta for g in self.gate_charges))

    def junctions(self) -> List[Junction]:
        """All ten junctions with their per-instance energies and flux phases."""
        result = []
        for j in range(N_JUNCTIONS):
            kind = JUNCTION_KINDS[j]
            if kind == "radial":
                i = j
                nodes: Tuple[int, ...] = (i,)
                E_J, E_C, flux = self.E_Jr, self.E_Cr, 0.0
            elif kind == "azimuthal":
                i = j - 4
                nodes = (i, (i + 1) % N_NODES)
                E_J, E_C, flux = self.E_Ja, self.E_Ca, self.flux[i]
            else:
                i = j - 8
                nodes = (i, i + 2)
                E_J, E_C = self.E_Jl, self.E_Cl
                flux = self.flux[i] + self.flux[i + 1] + self.flux_ext
            result.append(
                Junction(
                    index=j,
                    kind=kind,
                    nodes=nodes,
                    E_J=E_J * self.ej_multipliers[j],
                    E_C=E_C * self.ec_multipliers[j],
                    flux=flux,
                )
            )
        return result


def capacitance_matrix(spec: CircuitSpec, include_geometric: Optional[bool] = None) -> np.ndarray:
    """Node capacitance matrix in farads.

    Radial junctions stamp onto the diagonal; branch junctions stamp +C on
    both diagonals and -C off-diagonal. With geometric capacitances each
    junction gains a parallel capacitor of geometric_cap_fraction x C_b.

    Raises:
        NumericalError: If the matrix is singular
    """
    if include_geometric is None:
        include_geometric = spec.geometric_caps_in_hamiltonian
    scale = 1.0 + (spec.geometric_cap_fraction if include_geometric else 0.0)
    matrix = np.zeros((N_NODES, N_NODES))
    for junction in spec.junctions():
        c = junction.capacitance * scale
        if len(junction.nodes) == 1:
            i = junction.nodes[0]
            matrix[i, i] += c
        else:
            a, b = junction.nodes
            matrix[a, a] += c
            matrix[b, b] += c
            matrix[a, b] -= c
            matrix[b, a] -= c
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > 1e12:
        raise NumericalError(f"Capacitance matrix is singular (condition number {condition:.3e})")
    return matrix


def charging_matrix(spec: CircuitSpec) -> np.ndarray:
    """2 e^2 C^-1 / h in GHz per Cooper pair squared."""
    inverse = np.linalg.inv(capacitance_matrix(spec))
    return 2.0 * const.e**2 * inverse / const.h / 1e9


def charge_window(gate: float, n_max: int) -> np.ndarray:
    """Integer charges |n - h| <= n_max (+1/2 if h is half-integer), h = gate rounded to 1/2."""
    twice = int(np.round(2.0 * gate))
    if twice % 2:
        low = (twice - 1) // 2 - n_max
        high = (twice + 1) // 2 + n_max
    else:
        low = twice // 2 - n_max
        high = twice // 2 + n_max
    return np.arange(low, high + 1)


@dataclass
class ChargeBasis:
    """Tensor-product charge basis for one parity sector.

    Node i holds physical charge n + parity[i]/2 Cooper pairs, n from
    ``windows[i]``. Node 0 is the most significant tensor factor.
    """

    windows: Tuple[np.ndarray, ...]
    parity: Tuple[int, ...]
    gate_charges: Tuple[float, ...]

    @classmethod
    def for_spec(cls, spec: CircuitSpec, parity: Sequence[int] = (0,) * N_NODES) -> "ChargeBasis":
        parity = tuple(int(p) for p in parity)
        if len(parity) != N_NODES or any(p not in (0, 1) for p in parity):
            raise SpecError(f"Parity sector must be four 0/1 entries, got {parity}")
        if any(parity) and spec.charge_resolution != "electron":
            raise SpecError("Odd parity sectors need charge_resolution='electron'")
        effective = [g - p / 2.0 for g, p in zip(spec.gate_charges, parity)]
        windows = tuple(charge_window(g, spec.n_max) for g in effective)
        return cls(windows=windows, parity=parity, gate_charges=tuple(spec.gate_charges))

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(len(w) for w in self.windows)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def node_integers(self, node: int) -> np.ndarray:
        """Integer part n of node charge for every basis state."""
        grids = np.indices(self.dims).reshape(N_NODES, -1)
        return self.windows[node][grids[node]]

    def node_charges(self, node: int) -> np.ndarray:
        """Physical node charge (Cooper pairs) for every basis state."""
        return self.node_integers(node) + self.parity[node] / 2.0

    def locate(self, integers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Flat indices of (N_NODES, count) integer charges, with a validity mask."""
        offsets = np.stack([integers[i] - self.windows[i][0] for i in range(N_NODES)])
        valid = np.all((offsets >= 0) & (offsets < np.array(self.dims)[:, np.newaxis]), axis=0)
        clipped = np.where(valid, offsets, 0)
        return np.ravel_multi_index(tuple(clipped), self.dims), valid


def _embed(basis: ChargeBasis, local: Dict[int, sparse.spmatrix]) -> sparse.csr_matrix:
    result = None
    for node, dim in enumerate(basis.dims):
        factor = local.get(node, sparse.identity(dim, dtype=complex, format="csr"))
        result = factor if result is None else sparse.kron(result, factor, format="csr")
    return result


def _raising(dim: int) -> sparse.csr_matrix:
    """Sigma^+ = sum_n |n+1><n| inside a truncated window."""
    return sparse.diags(np.ones(dim - 1, dtype=complex), -1, format="csr")


def _tunneling_terms(basis: ChargeBasis, junction: Junction) -> sparse.csr_matrix:
    """e^{i phi_b} for the junction's gauge-invariant phase."""
    dims = basis.dims
    if len(junction.nodes) == 1:
        node = junction.nodes[0]
        return _embed(basis, {node: _raising(dims[node])})
    a, b = junction.nodes
    phase = np.exp(-2j * np.pi * junction.flux)
    return phase * _embed(basis, {b: _raising(dims[b]), a: _raising(dims[a]).T.tocsr()})


def build_circuit_hamiltonian(
    spec: CircuitSpec, parity: Sequence[int] = (0,) * N_NODES
) -> SparseOperator:
    """Charging plus Josephson terms in one parity sector.

    H = sum_ij K_ij (n_i - Ng_i)(n_j - Ng_j) - sum_b E_Jb cos(phi_b), with
    K = 2e^2 C^-1 / h and each cosine written as (e^{i phi} + e^{-i phi})/2
    through truncated tunneling operators.
    """
    basis = ChargeBasis.for_spec(spec, parity)
    kinetic = charging_matrix(spec)
    offsets = np.stack(
        [basis.node_charges(i) - spec.gate_charges[i] for i in range(N_NODES)]
    )
    diagonal = np.einsum("is,ij,js->s", offsets, kinetic, offsets)
    matrix = sparse.diags(diagonal.astype(complex), format="csr")

    for junction in spec.junctions():
        if junction.E_J == 0.0:
            continue
        hop = -0.5 * junction.E_J * _tunneling_terms(basis, junction)
        matrix = matrix + hop + hop.conj().T
    logger.debug(f"Circuit Hamiltonian dim={basis.size} parity={basis.parity}")
    return SparseOperator(matrix.tocsr())


@dataclass
class CircuitStates:
    """Lowest circuit eigenstates in one parity sector."""

    spectrum: Spectrum
    basis: ChargeBasis
    spec: CircuitSpec
    parity: Tuple[int, ...] = (0,) * N_NODES

    @property
    def energies(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def transition_frequencies(self) -> np.ndarray:
        """f_ij = E_j - E_i in GHz."""
        e = self.spectrum.eigenvalues
        return e[np.newaxis, :] - e[:, np.newaxis]

    @property
    def f01(self) -> float:
        return float(self.spectrum.eigenvalues[1] - self.spectrum.eigenvalues[0])

    def state(self, index: int) -> np.ndarray:
        if not 0 <= index < len(self.spectrum):
            raise SpecError(f"State {index} not computed (have {len(self.spectrum)})")
        return self.spectrum.eigenvectors[:, index]


def circuit_spectrum(
    spec: CircuitSpec,
    k: int = 5,
    parity: Sequence[int] = (0,) * N_NODES,
    method: str = "auto",
    tol: float = 1e-10,
) -> CircuitStates:
    """Lowest k eigenstates of the circuit."""
    if k < 2:
        raise SpecError("circuit_spectrum needs k >= 2")
    operator = build_circuit_hamiltonian(spec, parity)
    spectrum = lowest_eigenpairs(operator, min(k, operator.dimension), tol=tol, method=method)
    return CircuitStates(spectrum, ChargeBasis.for_spec(spec, parity), spec, tuple(parity))


def transition_frequency(spec: CircuitSpec, **kwargs: Any) -> float:
    """f_01 in GHz."""
    return circuit_spectrum(spec, k=2, **kwargs).f01


def charge_operator(states: CircuitStates, node: int) -> SparseOperator:
    """N_i - Ng_i in Cooper pairs."""
    if not 0 <= node < N_NODES:
        raise SpecError(f"Node index {node} out of range")
    values = states.basis.node_charges(node) - states.spec.gate_charges[node]
    return SparseOperator(sparse.diags(values.astype(complex), format="csr"))


def current_operator(states: CircuitStates, junction_index: int) -> SparseOperator:
    """I_b = I_c sin(phi_b) in amperes."""
    if not 0 <= junction_index < N_JUNCTIONS:
        raise SpecError(f"Junction index {junction_index} out of range")
    junction = states.spec.junctions()[junction_index]
    forward = _tunneling_terms(states.basis, junction)
    sine = (forward - forward.conj().T) / 2j
    return SparseOperator((critical_current(junction.E_J) * sine).tocsr())


def transition_matrix_element(
    states: CircuitStates, kind: str, index: int, i_state: int = 0, j_state: int = 1
) -> complex:
    """<j|O|i> for O a node charge (Cooper pairs) or a junction current (A)."""
    if kind == "node_charge":
        operator = charge_operator(states, index)
    elif kind == "junction_current":
        operator = current_operator(states, index)
    else:
        raise SpecError(f"Unknown operator kind: {kind}")
    return operator.expectation(states.state(j_state), states.state(i_state))


def electron_tunneling_operator(
    spec: CircuitSpec,
    junction_index: int,
    parity_in: Sequence[int] = (0,) * N_NODES,
    direction: int = 1,
) -> Tuple[SparseOperator, Tuple[int, ...]]:
    """e^{+-i phi_b/2} mapping parity sector parity_in to the switched sector.

    A single electron crossing junction b moves half a Cooper pair: onto the
    island for a radial junction, from node a to node b for a branch
    junction. Both directions land in the same final sector.

    Returns:
        (operator of shape (dim_out, dim_in), parity_out)
    """
    if spec.charge_resolution != "electron":
        raise SpecError("Electron tunneling needs charge_resolution='electron'")
    if direction not in (1, -1):
        raise SpecError("direction must be +1 or -1")
    junction = spec.junctions()[junction_index]
    source = ChargeBasis.for_spec(spec, parity_in)
    parity_out = list(source.parity)
    for node in junction.nodes:
        parity_out[node] = 1 - parity_out[node]
    target = ChargeBasis.for_spec(spec, parity_out)

    # charges in half Cooper pairs keep the arithmetic integer
    halves = np.stack([2 * source.node_integers(i) + source.parity[i] for i in range(N_NODES)])
    if len(junction.nodes) == 1:
        halves[junction.nodes[0]] += direction
        phase = 1.0
    else:
        a, b = junction.nodes
        halves[b] += direction
        halves[a] -= direction
        phase = np.exp(-1j * direction * np.pi * junction.flux)
    integers = np.stack([(halves[i] - parity_out[i]) // 2 for i in range(N_NODES)])
    rows, valid = target.locate(integers)
    cols = np.arange(source.size)
    matrix = sparse.csr_matrix(
        (np.full(int(valid.sum()), phase, dtype=complex), (rows[valid], cols[valid])),
        shape=(target.size, source.size),
    )
    return SparseOperator(matrix, hermitian=False), tuple(parity_out)


def half_phase_operators(
    spec: CircuitSpec, junction_index: int, parity_in: Sequence[int] = (0,) * N_NODES
) -> Tuple[sparse.csr_matrix, sparse.csr_matrix, Tuple[int, ...]]:
    """cos(phi_b/2) and sin(phi_b/2) between parity sectors."""
    plus, parity_out = electron_tunneling_operator(spec, junction_index, parity_in, 1)
    minus, _ = electron_tunneling_operator(spec, junction_index, parity_in, -1)
    cosine = 0.5 * (plus.matrix + minus.matrix)
    sine = (plus.matrix - minus.matrix) / 2j
    return cosine, sine, parity_out


def circuit_potential(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    """Josephson potential in GHz for node phases theta of shape (4, ...)."""
    theta = np.asarray(theta, dtype=float)
    value = np.zeros(theta.shape[1:])
    for junction in spec.junctions():
        if len(junction.nodes) == 1:
            phase = theta[junction.nodes[0]]
        else:
            a, b = junction.nodes
            phase = theta[b] - theta[a] - 2.0 * np.pi * junction.flux
        value = value - junction.E_J * np.cos(phase)
    return value


def _line_phases(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = np.arange(1, N_NODES + 1).reshape((N_NODES,) + (1,) * np.ndim(x))
    return n * x + y


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2.0 * np.pi) - np.pi)


@dataclass
class PotentialLandscape:
    """V(x, y) with theta_n = n x + y, plus located minima."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    minima: List[Tuple[float, float, float]]
    line_minima: List[Tuple[float, float]] = field(default_factory=list)


def potential_landscape(
    spec: CircuitSpec,
    x_grid: Sequence[float],
    y_grid: Sequence[float],
    rel_tol: float = 1e-6,
) -> PotentialLandscape:
    """Evaluate V on the (x, y) grid and locate its global minima.

    Grid-local minima are refined with a simplex search; ``line_minima``
    holds the global minima of V(x, 0).
    """
    x = np.asarray(x_grid, dtype=float)
    y = np.asarray(y_grid, dtype=float)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    values = circuit_potential(spec, _line_phases(xx, yy))

    def energy(point: np.ndarray) -> float:
        return float(circuit_potential(spec, _line_phases(np.array(point[0]), np.array(point[1]))))

    candidates = np.ones_like(values, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx or dy:
                candidates &= values <= np.roll(np.roll(values, dx, axis=0), dy, axis=1)

    refined: List[Tuple[float, float, float]] = []
    for i, j in zip(*np.nonzero(candidates)):
        result = minimize(energy, [x[i], y[j]], method="Nelder-Mead",
                          options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        px, py = _wrap(result.x[0]), _wrap(result.x[1])
        if not any(abs(px - qx) < 1e-5 and abs(py - qy) < 1e-5 for qx, qy, _ in refined):
            refined.append((px, py, float(result.fun)))

    scale = max(1.0, float(np.ptp(values)))
    lowest = min(v for _, _, v in refined) if refined else float(values.min())
    minima = sorted((m for m in refined if m[2] - lowest <= rel_tol * scale), key=lambda m: (m[0], m[1]))

    return PotentialLandscape(x, y, values, minima, _line_minima(spec, rel_tol))


def _line_minima(spec: CircuitSpec, rel_tol: float, points: int = 2048) -> List[Tuple[float, float]]:
    x = np.linspace(-np.pi, np.pi, points, endpoint=False)
    line = circuit_potential(spec, _line_phases(x, np.zeros_like(x)))
    step = x[1] - x[0]

    def energy(value: float) -> float:
        return float(circuit_potential(spec, _line_phases(np.array(value), np.array(0.0))))

    found: List[Tuple[float, float]] = []
    for i in np.nonzero((line <= np.roll(line, 1)) & (line <= np.roll(line, -1)))[0]:
        result = minimize_scalar(energy, bounds=(x[i] - step, x[i] + step), method="bounded",
                                 options={"xatol": 1e-12})
        found.append((_wrap(result.x), float(result.fun)))
    lowest = min(v for _, v in found)
    scale = max(1.0, float(np.ptp(line)))
    return sorted(m for m in found if m[1] - lowest <= rel_tol * scale)


def phase_profile(
    states: CircuitStates,
    which_state: int = 0,
    x_grid: Optional[Sequence[float]] = None,
    y: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """|psi(x)|^2 along theta_n = n x + y, normalized so sum |psi|^2 dx = 1.

    psi(x) = sum_s c_s exp(i (x sum_n n q_n + y sum_n q_n)) over charge
    configurations s with node charges q_n.
    """
    if x_grid is None:
        x = np.linspace(-np.pi, np.pi, 720, endpoint=False)
    else:
        x = np.asarray(x_grid, dtype=float)
    amplitudes = states.state(which_state)
    charges = np.stack([states.basis.node_charges(i) for i in range(N_NODES)])
    winding = np.arange(1, N_NODES + 1) @ charges
    weighted = amplitudes * np.exp(1j * y * charges.sum(axis=0))

    # half-integer windings (odd sectors) are handled by the doubled index
    doubled = np.round(2 * winding).astype(int)
    keys, inverse = np.unique(doubled, return_inverse=True)
    coefficients = np.zeros(keys.size, dtype=complex)
    np.add.at(coefficients, inverse, weighted)
    psi = np.exp(0.5j * np.outer(x, keys)) @ coefficients
    density = np.abs(psi) ** 2
    dx = x[1] - x[0] if x.size > 1 else 1.0
    total = density.sum() * dx
    if total == 0.0:
        raise NumericalError("Phase profile vanishes on the grid")
    return x, density / total


@dataclass
class SweepRow:
    """One point of a circuit parameter sweep."""

    params: Dict[str, float]
    frequencies: List[float] = field(default_factory=list)
    max_charge_element: float = float("nan")
    max_current_ratio: float = float("nan")
    error: Optional[str] = None

    @property
    def f01(self) -> float:
        return self.frequencies[0] if self.frequencies else float("nan")

    @property
    def protected(self) -> bool:
        return (
            self.error is None
            and self.max_charge_element < PROTECTION_ELEMENT_TOL
            and self.max_current_ratio < PROTECTION_ELEMENT_TOL
        )

    def as_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = dict(self.params)
        for j, value in enumerate(self.frequencies, start=1):
            record[f"f0{j}_GHz"] = value
        record["max_charge_element"] = self.max_charge_element
        record["max_current_over_Ic"] = self.max_current_ratio
        record["protected"] = self.protected
        record["error"] = self.error or ""
        return record


SWEEP_AXES = ("EJa_over_EJr", "EJl_over_EJr", "flux_offset", "gate_offset", "offset")


def apply_sweep_point(
    base: CircuitSpec,
    params: Dict[str, float],
    flux_mode: str = "all",
    plasma_GHz: Optional[float] = 10.0,
) -> CircuitSpec:
    """Spec at one sweep point.

    Junction-ratio axes keep sqrt(8 E_J E_C) fixed at plasma_GHz when given.
    "offset" moves every gate charge and every flux together.
    """
    spec = base
    for name, value in params.items():
        if name == "EJa_over_EJr":
            E_J = value * base.E_Jr
            changes = {"E_Ja": E_J}
            if plasma_GHz:
                changes["E_Ca"] = plasma_GHz**2 / (8.0 * E_J)
            spec = replace(spec, **changes)
        elif name == "EJl_over_EJr":
            E_J = value * base.E_Jr
            changes = {"E_Jl": E_J}
            if plasma_GHz:
                changes["E_Cl"] = plasma_GHz**2 / (8.0 * E_J)
            spec = replace(spec, **changes)
        elif name == "flux_offset":
            spec = spec.with_flux_offset(value, flux_mode)
        elif name == "gate_offset":
            spec = spec.with_gate_offset(value)
        elif name == "offset":
            spec = spec.with_flux_offset(value, "all").with_gate_offset(value)
        else:
            raise SpecError(f"Cannot sweep {name!r}; choose from {SWEEP_AXES}")
    return spec


def protection_elements(states: CircuitStates) -> Tuple[float, float]:
    """Largest |<0|N_i|1>| and largest |<0|I_b|1>| / I_c."""
    charge = max(abs(transition_matrix_element(states, "node_charge", i)) for i in range(N_NODES))
    ratios = []
    for junction in states.spec.junctions():
        if junction.E_J == 0.0:
            continue
        element = transition_matrix_element(states, "junction_current", junction.index)
        ratios.append(abs(element) / critical_current(junction.E_J))
    return float(charge), float(max(ratios) if ratios else 0.0)


def _sweep_point(base: CircuitSpec, params: Dict[str, float], k: int, flux_mode: str, plasma_GHz: Optional[float]) -> SweepRow:
    try:
        spec = apply_sweep_point(base, params, flux_mode, plasma_GHz)
        states = circuit_spectrum(spec, k=k)
        frequencies = [float(f) for f in states.transition_frequencies[0, 1:]]
        charge, current = protection_elements(states)
        return SweepRow(params, frequencies, charge, current)
    except (NumericalError, SpecError) as e:
        logger.warning(f"Sweep point {params} failed: {e}")
        return SweepRow(params, error=f"{e.kind}: {e}")


def parameter_sweep(
    base: CircuitSpec,
    axes: Sequence[Tuple[str, Sequence[float]]],
    k: int = 4,
    flux_mode: str = "all",
    plasma_GHz: Optional[float] = 10.0,
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """Frequencies f_0j and protection elements over a grid (row-major, first axis outer)."""
    if not axes:
        raise SpecError("parameter_sweep needs at least one axis")
    points: List[Dict[str, float]] = [{}]
    for name, values in axes:
        if name not in SWEEP_AXES:
            raise SpecError(f"Cannot sweep {name!r}; choose from {SWEEP_AXES}")
        points = [dict(p, **{name: float(v)}) for p in points for v in values]
    logger.info(f"Circuit sweep over {len(points)} points")
    return ordered_map(lambda p: _sweep_point(base, p, k, flux_mode, plasma_GHz), points, threads)


def truncation_convergence(
    spec: CircuitSpec,
    n_max_values: Sequence[int] = (6, 8),
    tol: float = 1e-3,
    strict: bool = False,
) -> List[Dict[str, float]]:
    """f_01 against n_max with the relative change between successive truncations.

    Raises:
        TruncationError: When strict and the last relative change exceeds tol
    """
    rows: List[Dict[str, float]] = []
    previous: Optional[float] = None
    for n_max in n_max_values:
        f01 = transition_frequency(replace(spec, n_max=int(n_max)))
        change = float("nan") if previous is None else abs(f01 - previous) / abs(f01)
        rows.append({"n_max": int(n_max), "f01_GHz": f01, "relative_change": change})
        logger.info(f"n_max={n_max}: f01={f01:.9f} GHz")
        previous = f01
    last = rows[-1]["relative_change"]
    if strict and len(rows) > 1 and last > tol:
        raise TruncationError(f"f01 changes by {last:.2e} between the last two truncations")
    return rows
