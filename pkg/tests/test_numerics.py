"""Tests for the shared linear-algebra and random-stream substrate."""

import numpy as np
import pytest
import scipy.sparse as sparse

from symprotect.core.numerics import (
    RandomStream,
    SparseOperator,
    lowest_eigenpairs,
    random_stream,
    reduced_density,
    single_site_reduced_density,
    von_neumann_entropy,
)
from symprotect.errors import NonHermitianError, NumericalError


@pytest.fixture
def random_hermitian():
    """A 300-dimensional random sparse Hermitian operator."""
    rng = np.random.default_rng(5)
    a = sparse.random(300, 300, density=0.02, random_state=7) + 1j * sparse.random(
        300, 300, density=0.02, random_state=8
    )
    h = a + a.conj().T + sparse.diags(rng.normal(size=300))
    return SparseOperator(h.tocsr())


def test_dense_and_lanczos_agree(random_hermitian):
    """Iterative and dense paths return the same lowest eigenvalues."""
    dense = lowest_eigenpairs(random_hermitian, 6, method="dense")
    lanczos = lowest_eigenpairs(random_hermitian, 6, method="lanczos")

    np.testing.assert_allclose(lanczos.eigenvalues, dense.eigenvalues, atol=1e-8)
    assert np.all(np.diff(lanczos.eigenvalues) >= 0)


def test_eigenvectors_orthonormal(random_hermitian):
    """Returned eigenvectors are orthonormal with small residuals."""
    spectrum = lowest_eigenpairs(random_hermitian, 5, method="lanczos")
    overlap = spectrum.eigenvectors.conj().T @ spectrum.eigenvectors

    np.testing.assert_allclose(overlap, np.eye(5), atol=1e-9)
    assert np.max(spectrum.residual_norms) < 1e-8


def test_single_eigenpair_of_one_dimensional_operator():
    """k equal to the dimension is allowed."""
    spectrum = lowest_eigenpairs(SparseOperator.from_dense(np.array([[2.5]])), 1)

    assert spectrum.eigenvalues[0] == pytest.approx(2.5)


def test_non_hermitian_rejected():
    """A non-Hermitian input raises NonHermitianError."""
    op = SparseOperator.from_dense(np.array([[0.0, 1.0], [0.0, 0.0]]))

    with pytest.raises(NonHermitianError):
        lowest_eigenpairs(op, 1)


def test_bad_k_rejected():
    """k outside 1..dim is a numerical error."""
    op = SparseOperator.from_dense(np.eye(3))

    with pytest.raises(NumericalError):
        lowest_eigenpairs(op, 4)


def test_degenerate_groups():
    """Exactly degenerate eigenvalues form one group."""
    op = SparseOperator.from_dense(np.diag([0.0, 0.0, 1.0, 2.0]))
    spectrum = lowest_eigenpairs(op, 4)

    assert spectrum.degenerate_groups() == [[0, 1], [2], [3]]


def test_bell_state_entropy():
    """A Bell pair has one bit of entanglement per qubit."""
    bell = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)

    rho = single_site_reduced_density(bell, 0, [2, 2])

    np.testing.assert_allclose(rho, 0.5 * np.eye(2), atol=1e-12)
    assert von_neumann_entropy(rho) == pytest.approx(1.0, abs=1e-12)


def test_product_state_entropy_zero():
    """A product state has no entanglement."""
    state = np.kron([1.0, 0.0], [0.6, 0.8])

    assert von_neumann_entropy(reduced_density(state, [1], [2, 2])) == pytest.approx(0.0, abs=1e-12)


def test_reduced_density_dimension_mismatch():
    """State length must match the local dimensions."""
    with pytest.raises(NumericalError):
        reduced_density(np.ones(5), [0], [2, 2])


def test_random_stream_reproducible():
    """The same address gives the same draws; different addresses differ."""
    a = random_stream(42, 3).normal(8)
    b = RandomStream(42, 3).normal(8)
    c = RandomStream(42, 4).normal(8)

    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_substreams_independent_of_parent_draws():
    """Child streams depend only on their path."""
    parent = RandomStream(1, 2)
    parent.normal(100)
    first = parent.substream(5).normal(4)
    second = RandomStream(1, 2).substream(5).normal(4)

    np.testing.assert_array_equal(first, second)


def test_complex_normal_unit_variance():
    """complex_normal draws have E|z|^2 = 1."""
    z = RandomStream(0, 0).complex_normal(200000)

    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.02)


def test_rectangular_operators_between_sectors():
    """Sector-changing operators may be rectangular; Hermitian ones may not."""
    block = sparse.csr_matrix(np.ones((2, 3)))
    op = SparseOperator(block, hermitian=False)

    assert op.matrix.shape == (2, 3)
    assert op.expectation(np.ones(2), np.ones(3)) == pytest.approx(6.0)
    with pytest.raises(NumericalError):
        SparseOperator(block)
