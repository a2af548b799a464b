"""Shared linear-algebra and stochastic substrate.

Energies are frequencies E/h in GHz, rates in Hz, times in seconds. Every
operator used by the spin and circuit models is a :class:`SparseOperator`;
eigenproblems go through :func:`lowest_eigenpairs` so that dense and
iterative paths return the same :class:`Spectrum` shape.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as linalg
import scipy.sparse as sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from ..errors import ConvergenceError, NonHermitianError, NumericalError

logger = logging.getLogger(__name__)

# Operators up to this dimension are diagonalized densely in "auto" mode.
DENSE_LIMIT = 2048

# Fixed seed for the Lanczos start vector; makes degenerate output reproducible.
EIGEN_START_SEED = 20240613

HERMITIAN_TOL = 1e-12
DEGENERACY_REL_TOL = 1e-8


@dataclass(frozen=True)
class SparseOperator:
    """Immutable sparse operator on a tensor-product space."""

    matrix: sparse.csr_matrix
    hermitian: bool = True

    def __post_init__(self) -> None:
        rows, cols = self.matrix.shape
        if self.hermitian and rows != cols:
            raise NumericalError(f"Hermitian operator must be square, got {rows}x{cols}")

    @classmethod
    def from_dense(cls, array: np.ndarray, hermitian: bool = True) -> "SparseOperator":
        return cls(sparse.csr_matrix(array), hermitian)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    def hermiticity_error(self) -> float:
        """Largest entrywise deviation from the conjugate transpose."""
        diff = (self.matrix - self.matrix.conj().T).tocsr()
        if diff.nnz == 0:
            return 0.0
        return float(np.max(np.abs(diff.data)))

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm (max absolute row sum)."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.max(np.asarray(abs(self.matrix).sum(axis=1)).ravel()))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.matrix @ vector

    def expectation(self, bra: np.ndarray, ket: np.ndarray) -> complex:
        """Matrix element <bra|O|ket>."""
        return complex(np.vdot(bra, self.matrix @ ket))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class Spectrum:
    """Lowest eigenpairs of a Hermitian operator, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray
    spectral_width: float = 0.0

    def __len__(self) -> int:
        return int(self.eigenvalues.shape[0])

    def vector(self, index: int) -> np.ndarray:
        return self.eigenvectors[:, index]

    def degenerate_groups(self, rel_tol: float = DEGENERACY_REL_TOL) -> List[List[int]]:
        """Group indices whose eigenvalues differ by less than rel_tol x width.

        Returns:
            Consecutive index groups covering every computed eigenpair.
        """
        width = self.spectral_width
        if width <= 0.0 and len(self) > 1:
            width = float(self.eigenvalues[-1] - self.eigenvalues[0])
        tol = rel_tol * max(width, 1e-300)

        groups: List[List[int]] = []
        for idx, value in enumerate(self.eigenvalues):
            if groups and value - self.eigenvalues[groups[-1][-1]] < tol:
                groups[-1].append(idx)
            else:
                groups.append([idx])
        return groups


class RandomStream:
    """Reproducible random stream addressed by (master_seed, stream_id).

    Built on a numpy ``SeedSequence`` spawn key, so the draws depend only on
    the address and not on the platform or on how work is split across
    threads.
    """

    def __init__(self, master_seed: int, stream_id: int, path: Tuple[int, ...] = ()):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(int(p) for p in path)
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_id,) + self.path
        )
        self._generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, index: int) -> "RandomStream":
        """Independent child stream, e.g. for resampling an invalid draw."""
        return RandomStream(self.master_seed, self.stream_id, self.path + (index,))

    def normal(self, size=None, scale: float = 1.0):
        return self._generator.normal(0.0, scale, size)

    def uniform(self, size=None):
        return self._generator.random(size)

    def complex_normal(self, size) -> np.ndarray:
        """Draws of (N(0,1) + i N(0,1)) / sqrt(2)."""
        re = self._generator.standard_normal(size)
        im = self._generator.standard_normal(size)
        return (re + 1j * im) / np.sqrt(2.0)

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, stream_id={self.stream_id}, path={self.path})"


def random_stream(master_seed: int, stream_id: int) -> RandomStream:
    """Create the random stream for (master_seed, stream_id)."""
    return RandomStream(master_seed, stream_id)


def _check_hermitian(op: SparseOperator) -> None:
    if not op.hermitian:
        raise NonHermitianError("Operator is not flagged Hermitian")
    scale = max(1.0, float(np.max(np.abs(op.matrix.data))) if op.matrix.nnz else 1.0)
    error = op.hermiticity_error()
    if error > HERMITIAN_TOL * scale:
        raise NonHermitianError(
            f"Operator deviates from its conjugate transpose by {error:.3e}"
        )


def _orthonormalize_groups(spectrum: Spectrum) -> None:
    for group in spectrum.degenerate_groups():
        if len(group) < 2:
            continue
        block = spectrum.eigenvectors[:, group]
        q, _ = np.linalg.qr(block)
        spectrum.eigenvectors[:, group] = q


def _residuals(matrix, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    applied = matrix @ vectors
    return np.linalg.norm(applied - vectors * values[np.newaxis, :], axis=0)


def lowest_eigenpairs(
    op: SparseOperator,
    k: int,
    tol: float = 1e-10,
    method: str = "auto",
    sigma: Optional[float] = None,
    maxiter: Optional[int] = None,
) -> Spectrum:
    """Compute the k smallest eigenpairs of a Hermitian operator.

    Args:
        op: Hermitian operator
        k: Number of eigenpairs (1 <= k <= dimension)
        tol: Residual tolerance relative to the operator norm
        method: "auto", "dense", "lanczos" or "shift_invert"
        sigma: Shift for shift-invert mode (defaults to a lower spectral bound)
        maxiter: Iteration budget for the Lanczos solver

    Returns:
        Spectrum with ascending eigenvalues and orthonormal eigenvectors

    Raises:
        NonHermitianError: If the operator is not Hermitian
        ConvergenceError: If the solver misses the tolerance
    """
    _check_hermitian(op)
    dim = op.dimension
    if not 1 <= k <= dim:
        raise NumericalError(f"Requested k={k} eigenpairs of a {dim}-dimensional operator")
    if tol <= 0:
        raise NumericalError("Tolerance must be positive")

    norm = op.norm_bound()
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "lanczos"
    # ARPACK needs k < dim - 1
    if method in ("lanczos", "shift_invert") and k >= dim - 1:
        method = "dense"

    logger.debug(f"Eigensolve dim={dim} k={k} method={method}")
    width = 0.0
    if method == "dense":
        full = op.toarray()
        values, vectors = linalg.eigh(full)
        width = float(values[-1] - values[0])
        values, vectors = values[:k], vectors[:, :k]
    elif method in ("lanczos", "shift_invert"):
        v0 = RandomStream(EIGEN_START_SEED, dim).normal(dim)
        try:
            if method == "lanczos":
                values, vectors = eigsh(
                    op.matrix, k=k, which="SA", tol=tol * 0.1, v0=v0, maxiter=maxiter
                )
            else:
                shift = -norm if sigma is None else sigma
                values, vectors = eigsh(
                    op.matrix, k=k, sigma=shift, which="LM", tol=tol * 0.1, v0=v0,
                    maxiter=maxiter,
                )
        except ArpackNoConvergence as exc:
            best = float("nan")
            if exc.eigenvalues is not None and len(exc.eigenvalues):
                best = float(
                    np.min(_residuals(op.matrix, exc.eigenvalues, exc.eigenvectors))
                )
            raise ConvergenceError(
                f"Lanczos did not converge for k={k} (dim={dim})", best_residual=best
            ) from exc
        try:
            top = eigsh(op.matrix, k=1, which="LA", tol=1e-6, v0=v0,
                        return_eigenvectors=False)
            width = float(top[0] - np.min(values))
        except ArpackNoConvergence:
            width = 2.0 * norm
    else:
        raise NumericalError(f"Unknown eigensolver method: {method}")

    order = np.argsort(values)
    values = np.asarray(values[order], dtype=float)
    vectors = np.asarray(vectors[:, order])
    spectrum = Spectrum(values, vectors, np.zeros(k), spectral_width=width)
    _orthonormalize_groups(spectrum)
    spectrum.residual_norms = _residuals(op.matrix, spectrum.eigenvalues, spectrum.eigenvectors)

    limit = tol * max(norm, 1.0)
    worst = float(np.max(spectrum.residual_norms)) if k else 0.0
    if worst > limit:
        raise ConvergenceError(
            f"Eigen-residual {worst:.3e} exceeds {limit:.3e}", best_residual=worst
        )
    return spectrum


def reduced_density(state: np.ndarray, keep: Sequence[int], local_dims: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state on the subsystems in ``keep``."""
    dims = [int(d) for d in local_dims]
    state = np.asarray(state)
    if int(np.prod(dims)) != state.size:
        raise NumericalError(
            f"Local dimensions {dims} do not match state length {state.size}"
        )
    keep = sorted(int(s) for s in keep)
    if any(s < 0 or s >= len(dims) for s in keep):
        raise NumericalError(f"Subsystem index out of range: {keep}")
    traced = [s for s in range(len(dims)) if s not in keep]

    psi = state.reshape(dims)
    psi = np.transpose(psi, keep + traced)
    d_keep = int(np.prod([dims[s] for s in keep])) if keep else 1
    psi = psi.reshape(d_keep, -1)
    return psi @ psi.conj().T


def single_site_reduced_density(state: np.ndarray, site: int, local_dims: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of one site (0-based index)."""
    return reduced_density(state, [site], local_dims)


def von_neumann_entropy(rho: np.ndarray, tol: float = 1e-10) -> float:
    """Entropy in bits, -sum p log2 p over the eigenvalues of rho."""
    rho = np.asarray(rho)
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > 1e3 * tol:
        raise NumericalError(f"Density matrix trace is {trace}, expected 1")
    probabilities = linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if probabilities.min() < -1e3 * tol:
        raise NumericalError(
            f"Density matrix has negative eigenvalue {probabilities.min():.3e}"
        )
    p = probabilities[probabilities > tol]
    return float(-np.sum(p * np.log2(p)))
