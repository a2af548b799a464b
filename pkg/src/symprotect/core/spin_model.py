"""Interacting flip-flop spin chain and its protection diagnostics.

The clean Hamiltonian has nearest (t) and next-nearest (lambda) flip-flop
couplings on a ring. Residual terms add an all-to-all sigma^z sigma^z
coupling (zeta), transverse (eta) and longitudinal (omega) fields and
counter-rotating couplings (mu, nu). All couplings are in GHz.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sparse

from ..errors import AmbiguousStateError, NumericalError, SpecError
from ..utils.parallel import ordered_map
from .numerics import (
    RandomStream,
    SparseOperator,
    lowest_eigenpairs,
    single_site_reduced_density,
    von_neumann_entropy,
)
from .symmetry import SymmetryLabels, resolve_degenerate_group

logger = logging.getLogger(__name__)

MIN_SPINS = 4
MAX_SPINS = 18

# Combined sensitivity below this value counts as first-order protected.
PROTECTION_THRESHOLD = 1e-8

SCAN_PARAMETERS = ("lam", "zeta", "eta", "omega_field", "mu", "nu", "M", "t")
PARAMETER_ALIASES = {"lambda": "lam", "omega": "omega_field"}


@dataclass(frozen=True)
class SpinChainSpec:
    """Parameters of the periodic spin chain.

    ``t_bond_multipliers[m]`` scales the bond (m, m+1) and
    ``lam_bond_multipliers[m]`` the bond (m, m+2), both 0-based and periodic.
    ``zz_convention`` selects how zeta is counted: "double_sum" sums
    zeta/4 over ordered pairs (zeta/2 per unordered pair, constant dropped),
    "unordered_pairs" puts zeta/4 on each unordered pair.
    """

    M: int = 4
    t: float = 1.0
    lam: float = 0.0
    zeta: float = 0.0
    eta: float = 0.0
    omega_field: float = 0.0
    mu: float = 0.0
    nu: float = 0.0
    t_bond_multipliers: Optional[Tuple[float, ...]] = None
    lam_bond_multipliers: Optional[Tuple[float, ...]] = None
    transverse_axis: str = "x"
    zz_convention: str = "double_sum"

    def __post_init__(self) -> None:
        if self.M % 2 or self.M < MIN_SPINS:
            raise SpecError(f"Spin count must be even and >= {MIN_SPINS}, got {self.M}")
        if self.M > MAX_SPINS:
            raise SpecError(f"Spin count above {MAX_SPINS} is not supported, got {self.M}")
        for name in ("t_bond_multipliers", "lam_bond_multipliers"):
            values = getattr(self, name)
            if values is not None and len(values) != self.M:
                raise SpecError(f"{name} needs {self.M} entries, got {len(values)}")
        if self.transverse_axis not in ("x", "y"):
            raise SpecError(f"transverse_axis must be 'x' or 'y', got {self.transverse_axis}")
        if self.zz_convention not in ("double_sum", "unordered_pairs"):
            raise SpecError(f"Unknown zz_convention: {self.zz_convention}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "SpinChainSpec":
        """Build a spec from the ``spin`` section of a run configuration."""
        return cls(
            M=int(config["M"]),
            t=float(config["t_GHz"]),
            lam=float(config["lambda_GHz"]),
            zeta=float(config.get("zeta_GHz", 0.0)),
            eta=float(config.get("eta_GHz", 0.0)),
            omega_field=float(config.get("omega_field_GHz", 0.0)),
            mu=float(config.get("mu_GHz", 0.0)),
            nu=float(config.get("nu_GHz", 0.0)),
            transverse_axis=config.get("transverse_axis", "x"),
            zz_convention=config.get("zz_convention", "double_sum"),
        )

    def with_updates(self, **changes: Any) -> "SpinChainSpec":
        changes = {PARAMETER_ALIASES.get(k, k): v for k, v in changes.items()}
        if "M" in changes:
            changes["M"] = int(round(changes["M"]))
            if changes["M"] != self.M:
                changes.setdefault("t_bond_multipliers", None)
                changes.setdefault("lam_bond_multipliers", None)
        return replace(self, **changes)

    def scaled(self, factor: float) -> "SpinChainSpec":
        """Uniformly rescale every coupling and field."""
        return replace(
            self,
            t=self.t * factor,
            lam=self.lam * factor,
            zeta=self.zeta * factor,
            eta=self.eta * factor,
            omega_field=self.omega_field * factor,
            mu=self.mu * factor,
            nu=self.nu * factor,
        )

    def bond_factors(self, kind: str) -> np.ndarray:
        values = self.t_bond_multipliers if kind == "t" else self.lam_bond_multipliers
        return np.ones(self.M) if values is None else np.asarray(values, dtype=float)


def _site_masks(M: int) -> np.ndarray:
    return 1 << (M - 1 - np.arange(M))


def _spin_signs(M: int) -> np.ndarray:
    index = np.arange(2**M)
    bits = (index[:, np.newaxis] & _site_masks(M)[np.newaxis, :]) != 0
    return np.where(bits, 1.0, -1.0)


def build_spin_hamiltonian(spec: SpinChainSpec) -> SparseOperator:
    """Assemble H0 plus the residual terms as a sparse 2^M operator."""
    M = spec.M
    dim = 2**M
    index = np.arange(dim)
    masks = _site_masks(M)
    signs = _spin_signs(M)

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    data: List[np.ndarray] = []

    def pair_terms(a: int, b: int, flip_flop: float, counter: float) -> None:
        both = masks[a] | masks[b]
        differ = signs[:, a] != signs[:, b]
        for selected, amplitude in ((differ, flip_flop), (~differ, counter)):
            if amplitude == 0.0:
                continue
            source = index[selected]
            rows.append(source ^ both)
            cols.append(source)
            data.append(np.full(source.size, amplitude, dtype=complex))

    t_factors = spec.bond_factors("t")
    lam_factors = spec.bond_factors("lam")
    for m in range(M):
        pair_terms(m, (m + 1) % M, 0.5 * spec.t * t_factors[m], 0.5 * spec.mu)
        pair_terms(m, (m + 2) % M, 0.5 * spec.lam * lam_factors[m], 0.5 * spec.nu)

    diagonal = np.zeros(dim)
    if spec.zeta:
        total = signs.sum(axis=1)
        weight = 0.25 if spec.zz_convention == "double_sum" else 0.125
        diagonal += spec.zeta * weight * (total**2 - M)
    if spec.omega_field:
        diagonal += spec.omega_field * signs.sum(axis=1)
    rows.append(index)
    cols.append(index)
    data.append(diagonal.astype(complex))

    if spec.eta:
        for m in range(M):
            rows.append(index ^ masks[m])
            cols.append(index)
            if spec.transverse_axis == "x":
                data.append(np.full(dim, spec.eta, dtype=complex))
            else:
                data.append(spec.eta * np.where(signs[:, m] > 0, 1j, -1j))

    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    matrix.eliminate_zeros()
    return SparseOperator(matrix)


def _apply_pauli(ket: np.ndarray, axis: str, site: int, M: int) -> np.ndarray:
    index = np.arange(ket.size)
    mask = 1 << (M - 1 - site)
    up = (index & mask) != 0
    if axis == "z":
        return np.where(up, ket, -ket)
    flipped = ket[index ^ mask]
    if axis == "x":
        return flipped
    return np.where(up, -1j, 1j) * flipped


def pauli_matrix_elements(bra: np.ndarray, ket: np.ndarray, M: int) -> np.ndarray:
    """Matrix elements <bra|sigma_m^w|ket> as an (M, 3) array over (x, y, z)."""
    elements = np.zeros((M, 3), dtype=complex)
    for m in range(M):
        for w, axis in enumerate(("x", "y", "z")):
            elements[m, w] = np.vdot(bra, _apply_pauli(ket, axis, m, M))
    return elements


@dataclass
class ProtectionDiagnostics:
    """Relaxation (R) and dephasing (D) amplitudes of the |0>, |1> pair."""

    R_per_site: np.ndarray
    D_per_site: np.ndarray
    R_aggregate: float
    D_aggregate: float
    combined: float
    gap01: float
    energies: Tuple[float, float]
    labels: Tuple[Optional[SymmetryLabels], Optional[SymmetryLabels]]
    entropy_site1: float
    state0: np.ndarray = field(repr=False)
    state1: np.ndarray = field(repr=False)

    @property
    def protected(self) -> bool:
        return self.combined < PROTECTION_THRESHOLD

    def as_record(self) -> Dict[str, float]:
        return {
            "R_aggregate": self.R_aggregate,
            "D_aggregate": self.D_aggregate,
            "combined": self.combined,
            "gap01_GHz": self.gap01,
            "entropy_site1": self.entropy_site1,
        }


def _select_computational_pair(spectrum, M: int, filling: Optional[int] = None):
    """Return the two lowest symmetry-resolved states, or None if k is too small.

    With ``filling`` set, only states with that excitation number count.
    """
    groups = spectrum.degenerate_groups()
    selected: List[Tuple[np.ndarray, Optional[SymmetryLabels], float]] = []
    for group in groups:
        at_edge = group[-1] == len(spectrum) - 1
        if at_edge and spectrum.eigenvectors.shape[0] > len(spectrum):
            return None
        energy = float(np.mean(spectrum.eigenvalues[group]))
        resolved = resolve_degenerate_group(spectrum.eigenvectors[:, group], M)
        members = [
            j for j, label in enumerate(resolved.labels)
            if filling is None or (label is not None and label.n == filling)
        ]
        resolved_vectors = resolved.vectors[:, members]
        labels = [resolved.labels[j] for j in members]

        needed = 2 - len(selected)
        for j in range(min(needed, len(members))):
            selected.append((resolved_vectors[:, j], labels[j], energy))
        if len(selected) == 2:
            taken = needed
            if taken < len(members):
                last, first_left = labels[taken - 1], labels[taken]
                if last is None or first_left is None or last.matches(first_left):
                    raise AmbiguousStateError(
                        f"Degenerate group at E={energy:.6g} GHz has no symmetry "
                        f"label separating |1> from the next state"
                    )
            return selected
    return None


def protection_diagnostics(
    spec: SpinChainSpec,
    k: int = 6,
    method: str = "auto",
    tol: float = 1e-10,
    filling: Optional[int] = None,
) -> ProtectionDiagnostics:
    """Diagonalize the chain and compute R, D for the two lowest resolved states.

    Args:
        spec: Spin chain parameters
        k: Initial number of eigenpairs (raised to at least 6, doubled on demand)
        method: Eigensolver method passed to lowest_eigenpairs
        tol: Eigensolver tolerance
        filling: Excitation number both states must carry (M/2 for the
            qubit pair); None takes the two lowest states of any filling

    Returns:
        ProtectionDiagnostics for the selected pair

    Raises:
        AmbiguousStateError: If a degenerate group straddles the |1> selection
    """
    operator = build_spin_hamiltonian(spec)
    dim = operator.dimension
    k = min(max(6, k), dim)
    while True:
        spectrum = lowest_eigenpairs(operator, k, tol=tol, method=method)
        selection = _select_computational_pair(spectrum, spec.M, filling)
        if selection is not None:
            break
        if k == dim:
            raise NumericalError("Could not isolate the two lowest states")
        k = min(2 * k, dim)
        logger.debug(f"Degenerate group reaches the solver edge, retrying with k={k}")

    (state0, labels0, energy0), (state1, labels1, energy1) = selection
    M = spec.M
    off_diagonal = pauli_matrix_elements(state1, state0, M)
    difference = pauli_matrix_elements(state1, state1, M) - pauli_matrix_elements(
        state0, state0, M
    )
    R_per_site = np.sqrt(np.sum(np.abs(off_diagonal) ** 2, axis=1))
    D_per_site = np.sqrt(np.sum(np.abs(difference) ** 2, axis=1))
    R_aggregate = float(np.sqrt(np.sum(R_per_site**2)))
    D_aggregate = float(np.sqrt(np.sum(D_per_site**2)))

    rho = single_site_reduced_density(state1, 0, [2] * M)
    entropy = von_neumann_entropy(rho)

    return ProtectionDiagnostics(
        R_per_site=R_per_site,
        D_per_site=D_per_site,
        R_aggregate=R_aggregate,
        D_aggregate=D_aggregate,
        combined=float(np.hypot(R_aggregate, D_aggregate)),
        gap01=energy1 - energy0,
        energies=(energy0, energy1),
        labels=(labels0, labels1),
        entropy_site1=entropy,
        state0=state0,
        state1=state1,
    )


def dimer_product(pairs: Sequence[Tuple[int, int]], M: int, kind: str = "-") -> np.ndarray:
    """Product of two-site Bell states |Psi^kind>_{ij} on 1-based site pairs."""
    index = np.arange(2**M)
    amplitude = np.ones(index.size, dtype=complex)
    sign = -1.0 if kind == "-" else 1.0
    for i, j in pairs:
        up_i = (index >> (M - i)) & 1
        up_j = (index >> (M - j)) & 1
        factor = np.where(up_i == up_j, 0.0, np.where(up_i == 1, 1.0, sign))
        amplitude *= factor / np.sqrt(2.0)
    return amplitude


def _basis_state(bits: str) -> np.ndarray:
    vector = np.zeros(2 ** len(bits), dtype=complex)
    vector[int(bits, 2)] = 1.0
    return vector


@dataclass
class AnalyticStates:
    """Closed-form M=4 low-energy states.

    Away from the Majumdar-Ghosh point ``gamma`` is the non-Bell amplitude of
    |G+>. At the point itself ``coefficients`` holds the dimer-basis
    projections (alpha_plus, beta_plus, alpha_minus, beta_minus).
    """

    g_plus: np.ndarray
    g_minus: np.ndarray
    gamma: Optional[float]
    coefficients: Dict[str, complex] = field(default_factory=dict)


def analytic_reference_states(t: float, lam: float) -> AnalyticStates:
    """Reference |G+>, |G-> for the four-spin chain.

    Raises:
        SpecError: If t is zero
    """
    if t == 0:
        raise SpecError("Analytic states need a nonzero nearest-neighbour coupling")
    M = 4
    g_minus = dimer_product([(1, 3), (2, 4)], M, "-")

    if abs(lam - 0.5 * t) > 1e-12 * abs(t):
        bell = 2.0 * dimer_product([(1, 3), (2, 4)], M, "+")
        neel = _basis_state("1010") + _basis_state("0101")
        basis = np.column_stack([bell / np.linalg.norm(bell), neel / np.linalg.norm(neel)])
        hamiltonian = build_spin_hamiltonian(SpinChainSpec(M=M, t=t, lam=lam)).matrix
        block = basis.conj().T @ (hamiltonian @ basis)
        values, vectors = np.linalg.eigh(0.5 * (block + block.conj().T))
        a, b = vectors[:, 0]
        if abs(a) < 1e-14:
            raise NumericalError("Ground vector of the symmetric block has no Bell part")
        gamma = float(np.real(np.sqrt(2.0) * b / a))
        g_plus = (bell + gamma * neel) / np.sqrt(4.0 + 2.0 * gamma**2)
        return AnalyticStates(g_plus=g_plus, g_minus=g_minus, gamma=gamma)

    operator = build_spin_hamiltonian(SpinChainSpec(M=M, t=t, lam=lam))
    spectrum = lowest_eigenpairs(operator, 2, method="dense")
    resolved = resolve_degenerate_group(spectrum.eigenvectors[:, :2], M)
    state_plus, state_minus = resolved.vectors[:, 1], resolved.vectors[:, 0]

    dimer_a = dimer_product([(1, 3), (2, 4)], M)
    dimer_b = dimer_product([(1, 4), (2, 3)], M)
    dimer_c = dimer_product([(1, 2), (3, 4)], M)
    plus_coeffs, *_ = np.linalg.lstsq(np.column_stack([dimer_a, dimer_c]), state_plus, rcond=None)
    minus_coeffs, *_ = np.linalg.lstsq(np.column_stack([dimer_b, dimer_c]), state_minus, rcond=None)
    coefficients = {
        "alpha_plus": complex(plus_coeffs[0]),
        "beta_plus": complex(plus_coeffs[1]),
        "alpha_minus": complex(minus_coeffs[0]),
        "beta_minus": complex(minus_coeffs[1]),
    }
    return AnalyticStates(
        g_plus=state_plus, g_minus=state_minus, gamma=None, coefficients=coefficients
    )


@dataclass
class ScanRow:
    """One grid point of a phase scan."""

    params: Dict[str, float]
    diagnostics: Optional[ProtectionDiagnostics]
    error: Optional[str] = None

    def as_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = dict(self.params)
        if self.diagnostics is not None:
            record.update(self.diagnostics.as_record())
        else:
            record.update(
                {key: float("nan") for key in ("R_aggregate", "D_aggregate", "combined", "gap01_GHz", "entropy_site1")}
            )
        record["error"] = self.error or ""
        return record


def _canonical_axis(name: str) -> str:
    name = PARAMETER_ALIASES.get(name, name)
    if name not in SCAN_PARAMETERS:
        raise SpecError(f"Cannot scan parameter {name!r}; choose from {SCAN_PARAMETERS}")
    return name


def _scan_point(base: SpinChainSpec, params: Dict[str, float]) -> ScanRow:
    try:
        spec = base.with_updates(**params)
        logger.debug(f"Scan point {params}")
        return ScanRow(params, protection_diagnostics(spec))
    except (NumericalError, SpecError) as e:
        logger.warning(f"Scan point {params} failed: {e}")
        return ScanRow(params, None, f"{e.kind}: {e}")


def phase_scan(
    base: SpinChainSpec,
    axis1: Tuple[str, Sequence[float]],
    axis2: Optional[Tuple[str, Sequence[float]]] = None,
    threads: Optional[int] = None,
) -> List[ScanRow]:
    """Evaluate diagnostics over a one- or two-dimensional parameter grid.

    Rows come back in row-major order (axis1 outer). Failing points keep
    their row with the error recorded.
    """
    name1, values1 = _canonical_axis(axis1[0]), list(axis1[1])
    points: List[Dict[str, float]] = []
    if axis2 is None:
        points = [{name1: v} for v in values1]
    else:
        name2, values2 = _canonical_axis(axis2[0]), list(axis2[1])
        points = [{name1: v1, name2: v2} for v1 in values1 for v2 in values2]

    logger.info(f"Phase scan over {len(points)} points")
    return ordered_map(lambda p: _scan_point(base, p), points, threads)


def protected_intervals(
    rows: Sequence[ScanRow], axis: str = "lam", threshold: float = PROTECTION_THRESHOLD
) -> List[Tuple[float, float]]:
    """Contiguous runs of a 1-D scan whose combined sensitivity is below threshold."""
    axis = PARAMETER_ALIASES.get(axis, axis)
    intervals: List[Tuple[float, float]] = []
    start: Optional[float] = None
    last: Optional[float] = None
    for row in rows:
        value = row.params[axis]
        inside = row.diagnostics is not None and row.diagnostics.combined < threshold
        if inside:
            if start is None:
                start = value
            last = value
        elif start is not None:
            intervals.append((start, last))
            start = None
    if start is not None:
        intervals.append((start, last))
    return intervals


@dataclass
class SpinDisorderRow:
    """Disorder averages at one sigma.

    Bond disorder keeps N and the global spin flip, so a sample only loses
    protection when a state of another filling or spin-flip parity drops below
    the second half-filled state. ``fraction_unprotected`` counts those samples.
    """

    sigma: float
    mean_combined: float
    mean_entropy: float
    mean_gap01: float
    n_samples: int
    n_failed: int = 0
    fraction_unprotected: float = 0.0

    def as_record(self) -> Dict[str, float]:
        return {
            "sigma": self.sigma,
            "mean_combined": self.mean_combined,
            "mean_entropy_site1": self.mean_entropy,
            "mean_gap01_GHz": self.mean_gap01,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
            "fraction_unprotected": self.fraction_unprotected,
        }


def disordered_spin_spec(base: SpinChainSpec, sigma: float, stream: RandomStream) -> SpinChainSpec:
    """Draw t -> t(1+alpha), lambda -> lambda(1+beta) per bond."""
    alpha = stream.normal(base.M, scale=sigma)
    beta = stream.normal(base.M, scale=sigma)
    return replace(
        base,
        t_bond_multipliers=tuple(float(x) for x in base.bond_factors("t") * (1.0 + alpha)),
        lam_bond_multipliers=tuple(float(x) for x in base.bond_factors("lam") * (1.0 + beta)),
    )


def disorder_scan_spin(
    base: SpinChainSpec,
    sigma_levels: Sequence[float],
    n_samples: int,
    master_seed: int,
    threads: Optional[int] = None,
) -> List[SpinDisorderRow]:
    """Average diagnostics over random bond disorder at each sigma level.

    Sample s of level i draws from stream (master_seed, i) with path (s,),
    so results do not depend on the thread count.
    """
    if n_samples < 1:
        raise SpecError("n_samples must be at least 1")
    if any(s < 0 for s in sigma_levels):
        raise SpecError("Disorder levels must be non-negative")

    rows: List[SpinDisorderRow] = []
    for level, sigma in enumerate(sigma_levels):

        def sample(s: int, level: int = level, sigma: float = sigma):
            spec = disordered_spin_spec(base, sigma, RandomStream(master_seed, level, (s,)))
            try:
                return protection_diagnostics(spec)
            except NumericalError as e:
                logger.warning(f"Disorder sample {s} at sigma={sigma} failed: {e}")
                return None

        results = ordered_map(sample, list(range(n_samples)), threads)
        good = [r for r in results if r is not None]
        if not good:
            raise NumericalError(f"Every disorder sample failed at sigma={sigma}")
        rows.append(
            SpinDisorderRow(
                sigma=float(sigma),
                mean_combined=float(np.mean([r.combined for r in good])),
                mean_entropy=float(np.mean([r.entropy_site1 for r in good])),
                mean_gap01=float(np.mean([r.gap01 for r in good])),
                n_samples=n_samples,
                n_failed=n_samples - len(good),
                fraction_unprotected=float(np.mean([not r.protected for r in good])),
            )
        )
        logger.info(
            f"sigma={sigma}: mean combined sensitivity {rows[-1].mean_combined:.3e}, "
            f"{rows[-1].fraction_unprotected:.1%} of samples unprotected"
        )
    return rows
