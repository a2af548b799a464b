"""Number, translation and inversion symmetries of the periodic spin chain.

Basis convention: site m (0-based) occupies bit M-1-m of the basis index and
bit value 1 is spin up (sigma^z = +1, one excitation).
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as linalg
import scipy.sparse as sparse

from ..errors import SpecError, SymmetryError
from .numerics import SparseOperator

logger = logging.getLogger(__name__)

SYMMETRY_KINDS = ("number", "translation", "inversion")
PAULI_AXES = ("x", "y", "z")

LABEL_TOL = 1e-8
CLASSIFY_TOL = 1e-6


@dataclass(frozen=True)
class SymmetryLabels:
    """Quantum numbers of a simultaneous eigenstate of N, T and I.

    ``iota`` is None when the translation eigenvalue is not real, since the
    inversion then maps the state out of its T eigenspace.
    """

    n: int
    tau: complex
    iota: Optional[int]
    residuals: Dict[str, float] = field(default_factory=dict, compare=False)

    def sort_key(self) -> Tuple[float, float, float, float]:
        return (
            float(self.n),
            round(self.tau.real, 8),
            float(self.iota if self.iota is not None else 0),
            round(self.tau.imag, 8),
        )

    def matches(self, other: "SymmetryLabels") -> bool:
        return (
            self.n == other.n
            and abs(self.tau - other.tau) < LABEL_TOL
            and self.iota == other.iota
        )


@dataclass
class ResolvedGroup:
    """A degenerate group rotated into simultaneous symmetry eigenstates."""

    vectors: np.ndarray
    labels: List[Optional[SymmetryLabels]]
    applied: List[str]
    skipped: List[str]

    @property
    def resolved(self) -> bool:
        return all(label is not None for label in self.labels)


def _basis_bits(M: int) -> np.ndarray:
    index = np.arange(2**M)
    shifts = M - 1 - np.arange(M)
    return (index[:, np.newaxis] >> shifts[np.newaxis, :]) & 1


def _bits_to_index(bits: np.ndarray) -> np.ndarray:
    M = bits.shape[1]
    weights = 1 << (M - 1 - np.arange(M))
    return bits @ weights


def _permutation(target: np.ndarray) -> sparse.csr_matrix:
    dim = target.shape[0]
    return sparse.csr_matrix(
        (np.ones(dim, dtype=complex), (target, np.arange(dim))), shape=(dim, dim)
    )


@lru_cache(maxsize=64)
def symmetry_operator(kind: str, M: int) -> SparseOperator:
    """Build N, T or I on the 2^M dimensional spin space.

    Args:
        kind: "number", "translation" or "inversion"
        M: Number of spins (>= 2)

    Returns:
        The operator; T and I are permutation matrices with
        T sigma_m T^-1 = sigma_{m+1} and I sigma_m I = sigma_{M-1-m} (0-based)
    """
    if M < 2:
        raise SpecError(f"Symmetry operators need at least 2 spins, got {M}")
    bits = _basis_bits(M)

    if kind == "number":
        counts = bits.sum(axis=1).astype(complex)
        return SparseOperator(sparse.diags(counts, format="csr"))
    if kind == "translation":
        return SparseOperator(_permutation(_bits_to_index(np.roll(bits, 1, axis=1))), hermitian=False)
    if kind == "inversion":
        return SparseOperator(_permutation(_bits_to_index(bits[:, ::-1])))
    raise SpecError(f"Unknown symmetry operator: {kind}")


@lru_cache(maxsize=512)
def pauli_operator(axis: str, site: int, M: int) -> SparseOperator:
    """Single-site Pauli (or ladder) operator on a 0-based site.

    Args:
        axis: "x", "y", "z", "plus" or "minus"
        site: Site index 0..M-1
        M: Number of spins
    """
    if not 0 <= site < M:
        raise SpecError(f"Site {site} out of range for M={M}")
    dim = 2**M
    index = np.arange(dim)
    mask = 1 << (M - 1 - site)
    up = (index & mask) != 0

    if axis == "z":
        return SparseOperator(sparse.diags(np.where(up, 1.0, -1.0).astype(complex), format="csr"))
    if axis == "x":
        data = np.ones(dim, dtype=complex)
        rows, cols = index ^ mask, index
    elif axis == "y":
        # sigma^y |up> = i |down>, sigma^y |down> = -i |up>
        data = np.where(up, 1j, -1j)
        rows, cols = index ^ mask, index
    elif axis == "plus":
        cols = index[~up]
        rows = cols | mask
        data = np.ones(cols.size, dtype=complex)
        return SparseOperator(sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim)), hermitian=False)
    elif axis == "minus":
        cols = index[up]
        rows = cols ^ mask
        data = np.ones(cols.size, dtype=complex)
        return SparseOperator(sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim)), hermitian=False)
    else:
        raise SpecError(f"Unknown Pauli axis: {axis}")
    return SparseOperator(sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim)))


def _spin_count(state: np.ndarray) -> int:
    M = int(round(np.log2(state.size)))
    if 2**M != state.size:
        raise SpecError(f"State length {state.size} is not a power of two")
    return M


def classify_state(
    state: np.ndarray,
    M: Optional[int] = None,
    kinds: Sequence[str] = SYMMETRY_KINDS,
    tol: float = CLASSIFY_TOL,
) -> SymmetryLabels:
    """Label a state by its N, T and I eigenvalues (Rayleigh quotients).

    Raises:
        SymmetryError: If the state is not an eigenvector of a requested operator
    """
    state = np.asarray(state, dtype=complex)
    M = M if M is not None else _spin_count(state)
    norm = np.linalg.norm(state)
    if norm == 0.0:
        raise SymmetryError("Cannot classify the zero vector")
    psi = state / norm

    values: Dict[str, complex] = {}
    residuals: Dict[str, float] = {}
    for kind in kinds:
        applied = symmetry_operator(kind, M).apply(psi)
        value = complex(np.vdot(psi, applied))
        residual = float(np.linalg.norm(applied - value * psi))
        residuals[kind] = residual
        if residual > tol:
            raise SymmetryError(
                f"State is not an eigenvector of {kind} (residual {residual:.3e})",
                residual=residual,
            )
        values[kind] = value

    n = int(round(values["number"].real)) if "number" in values else -1
    tau = values.get("translation", complex(1.0))
    if "translation" in values:
        tau = tau / abs(tau)
    iota: Optional[int] = None
    if "inversion" in values:
        iota = 1 if values["inversion"].real >= 0 else -1
    return SymmetryLabels(n=n, tau=tau, iota=iota, residuals=residuals)


def _restricted(op: SparseOperator, basis: np.ndarray, tol: float) -> Optional[np.ndarray]:
    applied = op.matrix @ basis
    block = basis.conj().T @ applied
    if np.linalg.norm(applied - basis @ block) > tol:
        return None
    return block


def _split_by_value(values: np.ndarray) -> List[List[int]]:
    order = sorted(range(len(values)), key=lambda i: (round(values[i].real, 7), round(values[i].imag, 7)))
    blocks: List[List[int]] = []
    for idx in order:
        if blocks and abs(values[idx] - values[blocks[-1][0]]) < LABEL_TOL:
            blocks[-1].append(idx)
        else:
            blocks.append([idx])
    return blocks


def _diagonalize_block(op: SparseOperator, basis: np.ndarray, kind: str, tol: float):
    block = _restricted(op, basis, tol)
    if block is None:
        return None
    if kind == "translation":
        # restricted unitary is normal, so its complex Schur form is diagonal
        form, vectors = linalg.schur(block, output="complex")
        values = np.diag(form)
    else:
        values, vectors = linalg.eigh(0.5 * (block + block.conj().T))
        values = values.astype(complex)
    return values, basis @ vectors


def resolve_degenerate_group(
    vectors: np.ndarray, M: int, tol: float = 1e-8
) -> ResolvedGroup:
    """Rotate a degenerate eigenspace into simultaneous eigenstates of N, T, I.

    N is diagonalized first, then T within each N block, then I within
    blocks of real T eigenvalue. An operator under which the subspace is not
    invariant is skipped and reported. States come out sorted by
    (N, Re tau, iota).
    """
    basis = np.asarray(vectors, dtype=complex)
    if basis.ndim == 1:
        basis = basis[:, np.newaxis]
    blocks: List[np.ndarray] = [basis]
    applied: List[str] = []
    skipped: List[str] = []

    for kind in SYMMETRY_KINDS:
        op = symmetry_operator(kind, M)
        refined: List[np.ndarray] = []
        usable = True
        for block in blocks:
            if kind == "inversion" and "translation" in applied:
                tau = classify_state(block[:, 0], M, kinds=("translation",), tol=1e-5).tau
                if abs(tau.imag) > LABEL_TOL:
                    refined.append(block)
                    continue
            result = _diagonalize_block(op, block, kind, tol * max(1, block.shape[1]))
            if result is None:
                usable = False
                break
            values, rotated = result
            for members in _split_by_value(values):
                refined.append(rotated[:, members])
        if usable:
            blocks = refined
            applied.append(kind)
        else:
            skipped.append(kind)
            logger.debug(f"Degenerate subspace not invariant under {kind}; skipped")

    columns = np.concatenate(blocks, axis=1)
    labels: List[Optional[SymmetryLabels]] = []
    for j in range(columns.shape[1]):
        try:
            labels.append(classify_state(columns[:, j], M, kinds=tuple(applied)))
        except SymmetryError:
            labels.append(None)

    order = sorted(
        range(columns.shape[1]),
        key=lambda j: labels[j].sort_key() if labels[j] is not None else (np.inf,) * 4,
    )
    return ResolvedGroup(
        vectors=columns[:, order],
        labels=[labels[j] for j in order],
        applied=applied,
        skipped=skipped,
    )


@dataclass(frozen=True)
class CancellationResult:
    """Outcome of the U_i insertion check for one site."""

    site: int
    raw_max: float
    identity_residual: float
    phase_factor: complex

    @property
    def forces_zero(self) -> bool:
        """True when the symmetry phase factor differs from 1."""
        return abs(self.phase_factor - 1.0) > LABEL_TOL


def cancellation_check(
    state0: np.ndarray, state1: np.ndarray, site: int, M: Optional[int] = None
) -> CancellationResult:
    """Check the transition cancellation identity at a 1-based site.

    Inserts U = T^(2 site - M - 1) I, which maps sigma_site onto itself, so
    <1|sigma|0> = <1|U sigma U^-1|0> = u <1|sigma|0> with u fixed by the
    symmetry labels. For opposite tau and equal iota, u = -1 and the element
    must vanish.

    Returns:
        raw_max: max over Pauli axes of |<1|sigma_site|0>|
        identity_residual: max over axes of |<1|sigma|0> - <1|U sigma U^-1|0>|
        phase_factor: u computed from the labels
    """
    state0 = np.asarray(state0, dtype=complex)
    state1 = np.asarray(state1, dtype=complex)
    M = M if M is not None else _spin_count(state0)
    if M % 2:
        raise SpecError(f"Cancellation identity needs an even spin count, got {M}")
    if not 1 <= site <= M:
        raise SpecError(f"Site {site} out of range 1..{M}")

    labels0 = classify_state(state0, M)
    labels1 = classify_state(state1, M)
    if labels0.iota is None or labels1.iota is None:
        raise SymmetryError("Both states need real translation eigenvalues")

    power = (2 * site - M - 1) % M
    translation = symmetry_operator("translation", M).matrix
    u_matrix = symmetry_operator("inversion", M).matrix
    for _ in range(power):
        u_matrix = translation @ u_matrix

    shift = 2 * site - M - 1
    phase = (labels1.tau / labels0.tau) ** shift * labels1.iota * labels0.iota

    raw_max = 0.0
    identity = 0.0
    for axis in PAULI_AXES:
        sigma = pauli_operator(axis, site - 1, M).matrix
        conjugated = u_matrix @ sigma @ u_matrix.conj().T
        direct = complex(np.vdot(state1, sigma @ state0))
        inserted = complex(np.vdot(state1, conjugated @ state0))
        raw_max = max(raw_max, abs(direct))
        identity = max(identity, abs(direct - inserted))
    return CancellationResult(site, raw_max, identity, complex(phase))
