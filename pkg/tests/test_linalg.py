import math

import numpy as np
import pytest

import linalg
from exceptions import DimensionMismatchError, NonHermitianError, PhysicalityError


def test_tensor_of_identities_is_identity():
    assert np.array_equal(linalg.tensor(linalg.IDENTITY2, linalg.IDENTITY2), linalg.identity(4))


def test_tensor_keeps_system_index_slower():
    assert np.array_equal(linalg.tensor(linalg.KET0, linalg.KET1), np.array([0, 1, 0, 0], dtype=complex))


def test_tensor_operator_on_product_state():
    op = linalg.tensor(linalg.SIGMA_Z, linalg.SIGMA_X)
    out = op @ linalg.tensor(linalg.KET0, linalg.KET0)
    assert np.allclose(out, linalg.tensor(linalg.KET0, linalg.KET1))


def test_tensor_is_associative(rng):
    a, b, c = (linalg.random_hermitian(2, rng) for _ in range(3))
    left = linalg.tensor(linalg.tensor(a, b), c)
    right = linalg.tensor(a, linalg.tensor(b, c))
    assert np.linalg.norm(left - right) == 0


def test_tensor_rejects_mixed_ranks():
    with pytest.raises(DimensionMismatchError):
        linalg.tensor(linalg.KET0, linalg.SIGMA_X)


def test_dagger():
    assert np.array_equal(linalg.dagger(linalg.SIGMA_Y), linalg.SIGMA_Y)
    m = linalg.outer(linalg.KET0, linalg.KET1)
    assert np.array_equal(linalg.dagger(m), linalg.outer(linalg.KET1, linalg.KET0))
    assert np.array_equal(linalg.dagger(linalg.dagger(m)), m)


def test_herm_eig_sigma_z():
    values, vecs = linalg.herm_eig(linalg.SIGMA_Z)
    assert np.allclose(values, [1, -1])
    assert np.allclose(np.abs(vecs[:, 0]), [1, 0])
    assert np.allclose(np.abs(vecs[:, 1]), [0, 1])


def test_herm_eig_identity():
    values, _ = linalg.herm_eig(linalg.identity(5))
    assert np.allclose(values, 1.0)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 8, 16])
def test_herm_eig_reconstruction_and_orthonormality(rng, d):
    m = linalg.random_hermitian(d, rng)
    values, vecs = linalg.herm_eig(m)
    assert np.all(np.diff(values) <= 0)
    assert np.linalg.norm(vecs.conj().T @ vecs - np.eye(d)) < 1e-10
    assert np.linalg.norm(m - (vecs * values) @ vecs.conj().T) < 1e-10
    assert np.allclose(values, np.sort(np.linalg.eigvalsh(m))[::-1], atol=1e-10)


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianError):
        linalg.herm_eig(np.array([[0, 1], [0, 0]]))


def test_herm_func_pauli_exponential():
    out = linalg.herm_func(linalg.SIGMA_Z, lambda lam: complex(math.cos(math.pi / 2 * lam), -math.sin(math.pi / 2 * lam)))
    assert np.allclose(out, np.diag([-1j, 1j]), atol=1e-12)


def test_herm_func_identity_function(rng):
    m = linalg.random_hermitian(4, rng)
    assert np.allclose(linalg.herm_func(m, lambda lam: lam), m, atol=1e-10)


def test_herm_func_projector_exponential_matches_power_series(rng):
    xi = 0.37
    p = linalg.projector(linalg.random_ket(3, rng))
    closed = linalg.identity(3) + (np.exp(-1j * xi) - 1) * p
    series = np.zeros((3, 3), dtype=complex)
    term = linalg.identity(3)
    for k in range(1, 40):
        series += term
        term = term @ (-1j * xi * p) / k
    assert np.linalg.norm(linalg.herm_func(p, lambda lam: np.exp(-1j * xi * lam)) - closed) < 1e-10
    assert np.linalg.norm(series - closed) < 1e-10


def test_herm_func_exponentials_multiply(rng):
    a = linalg.random_hermitian(4, rng)
    ea = linalg.herm_func(a, lambda lam: np.exp(-0.3j * lam))
    eb = linalg.herm_func(a, lambda lam: np.exp(-0.5j * lam))
    eab = linalg.herm_func(a, lambda lam: np.exp(-0.8j * lam))
    assert np.linalg.norm(ea @ eb - eab) < 1e-10


def test_dft_small_sizes():
    assert np.allclose(linalg.dft_matrix(1), [[1]])
    assert np.allclose(linalg.dft_matrix(2), np.array([[1, 1], [1, -1]]) / math.sqrt(2))


def test_dft_unitary_and_zero_row_uniform():
    f = linalg.dft_matrix(64)
    assert np.linalg.norm(f @ f.conj().T - np.eye(64)) < 1e-12
    assert np.allclose(f[0], 1 / 8)


def test_dft_squared_reverses_positions():
    n = 12
    f2 = linalg.dft_matrix(n) @ linalg.dft_matrix(n)
    for x in range(n):
        assert np.allclose(f2 @ linalg.basis_ket(n, x), linalg.basis_ket(n, (-x) % n), atol=1e-12)


def test_dft_rejects_zero_size():
    with pytest.raises(PhysicalityError):
        linalg.dft_matrix(0)


def test_spectral_norm_simple_cases():
    assert linalg.spectral_norm(linalg.SIGMA_X) == pytest.approx(1.0)
    assert linalg.spectral_norm(0.3 * linalg.identity(3)) == pytest.approx(0.3)


def test_spectral_norm_of_constructed_contraction(rng):
    s = np.array([0.9, 0.4, 0.2, 0.05])
    u, v = linalg.random_unitary(4, rng), linalg.random_unitary(4, rng)
    m = (u * s) @ v.conj().T
    assert abs(linalg.spectral_norm(m) - 0.9) < 1e-10


def test_predicates(rng):
    rho = linalg.random_density(3, rng)
    assert linalg.is_hermitian(rho) and linalg.is_psd(rho)
    assert not linalg.is_psd(linalg.SIGMA_Z)
    assert linalg.is_projector(linalg.projector(linalg.KET_PLUS))
    assert not linalg.is_projector(linalg.SIGMA_Z)
    assert linalg.is_unitary(linalg.random_unitary(3, rng))
    assert linalg.is_contraction(linalg.random_contraction(3, rng))
    assert not linalg.is_contraction(2 * linalg.identity(2))


def test_eigenspace_clusters():
    assert linalg.eigenspace_clusters([1.0, 1.0 + 1e-12, 0.0, -1.0]) == [[0, 1], [2], [3]]


def test_ket_validation():
    assert linalg.is_normalized(linalg.ket([3, 4], normalize=True))
    with pytest.raises(PhysicalityError):
        linalg.ket([0, 0], normalize=True)
    with pytest.raises(PhysicalityError):
        linalg.ket([1, float("nan")])
