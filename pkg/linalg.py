"""
Descriptions:
1. Dense complex linear algebra for the measurement simulations (numpy arrays, complex128)
2. Kets are 1-D arrays, Operators are square 2-D arrays
3. Hermitian eigendecomposition uses cyclic Jacobi rotations, so every spectral
   quantity (matrix functions, spectral norms, PSD checks) comes from one solver
4. tensor() keeps the system index slower than the probe index: tensor(system, probe)

Note:
1. The Jacobi sweep is the classic Numerical Recipes scheme, extended to complex
   Hermitian input by removing the phase of a_pq before each real rotation.
"""

import math
from typing import Callable, Sequence

import numpy as np

from exceptions import ConvergenceError, DimensionMismatchError, NonHermitianError, PhysicalityError

HERMITIAN_TOL = 1e-10
CONTRACTION_TOL = 1e-9
NORMALIZED_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


# --------------------------
# Construction helpers
# --------------------------
def ket(amps: Sequence[complex], normalize: bool = False) -> np.ndarray:
    vec = np.array(amps, dtype=complex).reshape(-1)
    if vec.size == 0:
        raise PhysicalityError("ket must have positive dimension", field="ket")
    if not np.all(np.isfinite(vec)):
        raise PhysicalityError("ket amplitudes must be finite", field="ket")
    if normalize:
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise PhysicalityError("cannot normalize the zero vector", field="ket")
        vec = vec / norm
    return vec


def operator(entries) -> np.ndarray:
    mat = np.array(entries, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise DimensionMismatchError(f"operator must be square, got shape {mat.shape}", field="operator")
    if not np.all(np.isfinite(mat)):
        raise PhysicalityError("operator entries must be finite", field="operator")
    return mat


def basis_ket(d: int, i: int) -> np.ndarray:
    vec = np.zeros(d, dtype=complex)
    vec[i] = 1.0
    return vec


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # |a><b|
    return np.outer(a, np.conj(b))


def projector(psi: np.ndarray) -> np.ndarray:
    return outer(psi, psi)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    # <a|b>
    return complex(np.vdot(a, b))


def is_normalized(psi: np.ndarray, tol: float = NORMALIZED_TOL) -> bool:
    return abs(np.vdot(psi, psi).real - 1.0) < tol


# Pauli operators and probe basis states
IDENTITY2 = _frozen(identity(2))
SIGMA_X = _frozen(np.array([[0, 1], [1, 0]], dtype=complex))
SIGMA_Y = _frozen(np.array([[0, -1j], [1j, 0]], dtype=complex))
SIGMA_Z = _frozen(np.array([[1, 0], [0, -1]], dtype=complex))
PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

KET0 = _frozen(basis_ket(2, 0))
KET1 = _frozen(basis_ket(2, 1))
KET_PLUS = _frozen(np.array([1, 1], dtype=complex) / math.sqrt(2))
KET_MINUS = _frozen(np.array([1, -1], dtype=complex) / math.sqrt(2))
KET_PLUS_I = _frozen(np.array([1, 1j], dtype=complex) / math.sqrt(2))
KET_MINUS_I = _frozen(np.array([1, -1j], dtype=complex) / math.sqrt(2))


# --------------------------
# Basic operations
# --------------------------
def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim:
        raise DimensionMismatchError("tensor needs two kets or two operators", field="tensor")
    return np.kron(a, b)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(m)).T


# --------------------------
# Predicates
# --------------------------
def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.linalg.norm(m - dagger(m))) < tol


def is_unitary(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.linalg.norm(dagger(m) @ m - np.eye(m.shape[0]))) < tol


def is_projector(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    if not is_hermitian(m, tol):
        return False
    m = np.asarray(m)
    return float(np.linalg.norm(m @ m - m)) < tol


def is_psd(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    if not is_hermitian(m, tol):
        return False
    if is_projector(m, tol):
        return True
    values, _ = herm_eig(m)
    return bool(values[-1] >= -tol)


def is_contraction(m: np.ndarray, tol: float = CONTRACTION_TOL) -> bool:
    return spectral_norm(m) <= 1.0 + tol


# --------------------------
# Hermitian eigendecomposition (cyclic Jacobi)
# --------------------------
def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def _jacobi_rotation(a: np.ndarray, p: int, q: int) -> np.ndarray | None:
    apq = a[p, q]
    mag = abs(apq)
    if mag == 0.0:
        return None
    phase = apq / mag
    theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    # diag(1, conj(phase)) makes a_pq real, then the real rotation zeroes it
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)


def herm_eig(m: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues (descending) and unitary eigenvector matrix of a Hermitian operator."""
    a = operator(m)
    if not is_hermitian(a):
        raise NonHermitianError("herm_eig needs a Hermitian operator", field="operator")
    a = 0.5 * (a + dagger(a))
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))

    for _ in range(max_sweeps):
        if _off_diagonal_norm(a) < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                rot = _jacobi_rotation(a, p, q)
                if rot is None:
                    continue
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = dagger(rot) @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0
    else:
        if _off_diagonal_norm(a) >= tol * scale:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", field="operator")

    values = np.diag(a).real.copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


def herm_func(m: np.ndarray, f: Callable[[float], complex]) -> np.ndarray:
    """V diag(f(lambda_j)) V^dagger."""
    values, vecs = herm_eig(m)
    fvals = np.array([f(float(lam)) for lam in values], dtype=complex)
    return (vecs * fvals) @ dagger(vecs)


def eigenspace_clusters(values: Sequence[float], tol: float = 1e-9) -> list[list[int]]:
    # values must be sorted (herm_eig order)
    clusters: list[list[int]] = []
    for i, lam in enumerate(values):
        if clusters and abs(values[clusters[-1][-1]] - lam) <= tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def spectral_norm(m: np.ndarray) -> float:
    a = operator(m)
    # diagonal input needs no rotations
    if _off_diagonal_norm(a) == 0.0:
        return float(np.max(np.abs(np.diag(a))))
    if is_unitary(a):
        return 1.0
    if is_projector(a):
        return 1.0 if np.trace(a).real > 0.5 else 0.0
    values, _ = herm_eig(dagger(a) @ a)
    return math.sqrt(max(values[0], 0.0))


# --------------------------
# Fourier transform on an N-point grid
# --------------------------
def dft_matrix(n: int) -> np.ndarray:
    if n < 1:
        raise PhysicalityError("dft_matrix needs n >= 1", field="n")
    idx = np.arange(n)
    # reduce p*x mod n before exponentiating to keep the phases exact
    phase = np.outer(idx, idx) % n
    return np.exp(-2j * np.pi * phase / n) / math.sqrt(n)


# --------------------------
# Seeded random instances
# --------------------------
def random_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=d) + 1j * rng.normal(size=d)
    return vec / np.linalg.norm(vec)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (z + dagger(z))


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    z = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = z @ dagger(z)
    return rho / np.trace(rho).real


def random_contraction(d: int, rng: np.random.Generator) -> np.ndarray:
    s = rng.uniform(0.0, 1.0, size=d)
    return (random_unitary(d, rng) * s) @ dagger(random_unitary(d, rng))
