"""
Dense linear algebra for small Hermitian and unitary matrices.

Everything here works on plain ``numpy`` arrays of complex dtype. Matrices are
validated on entry by :func:`as_hermitian` and :func:`as_unitary`, which raise
``ValueError`` when an invariant is violated.
"""

from typing import List, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

Matrix = np.ndarray


# =============================================================================
# Validation
# =============================================================================

def as_matrix(x) -> Matrix:
    """Return ``x`` as a square complex array, checking shape and finiteness."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _same_dim(x: Matrix, y: Matrix) -> None:
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")


def is_hermitian(x, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(x, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.conj().T)) <= tol * scale)


def as_hermitian(x, traceless: bool = False, tol: float = HERMITIAN_TOL) -> Matrix:
    """Validate a Hermitian (optionally traceless) matrix and return it."""
    m = as_matrix(x)
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian")
    if traceless:
        scale = max(1.0, float(np.max(np.abs(m))))
        if abs(np.trace(m)) > tol * scale * m.shape[0]:
            raise ValueError(f"matrix is not traceless (tr = {np.trace(m):.3e})")
    return m


def as_unitary(x, special: bool = False, tol: float = UNITARY_TOL) -> Matrix:
    """Validate a unitary matrix; with ``special`` also require ``det == 1``."""
    m = as_matrix(x)
    eye = np.eye(m.shape[0])
    if np.max(np.abs(m.conj().T @ m - eye)) > tol:
        raise ValueError("matrix is not unitary")
    if special and abs(np.linalg.det(m) - 1.0) > tol:
        raise ValueError("unitary does not have unit determinant")
    return m


# =============================================================================
# Products and norms
# =============================================================================

def commutator(x, y) -> Matrix:
    """Return ``XY - YX``."""
    x, y = as_matrix(x), as_matrix(y)
    _same_dim(x, y)
    return x @ y - y @ x


def hermitian_commutator(x, y) -> Matrix:
    """Return ``-i[X, Y]``, which is Hermitian whenever X and Y are."""
    return -1j * commutator(x, y)


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt inner product ``tr(X^dagger Y)``."""
    x, y = as_matrix(x), as_matrix(y)
    _same_dim(x, y)
    return complex(np.vdot(x, y))


def hs_norm(x) -> float:
    """Hilbert-Schmidt (Frobenius) norm ``sqrt(tr(X^dagger X))``."""
    return float(np.linalg.norm(as_matrix(x)))


# =============================================================================
# Spectral functions
# =============================================================================

def expm_hermitian(h, t: float) -> Matrix:
    """
    Return ``exp(-i H t)`` for Hermitian ``H``.

    Computed through the eigendecomposition of ``H``, so the result is unitary
    to machine precision.
    """
    h = as_hermitian(h)
    w, q = np.linalg.eigh(h)
    return (q * np.exp(-1j * w * t)) @ q.conj().T


def expm_hermitian_batch(hs: np.ndarray, ts) -> np.ndarray:
    """Vectorized ``exp(-i H_k t_k)`` over a stack of Hermitian matrices."""
    w, q = np.linalg.eigh(hs)
    phases = np.exp(-1j * w * np.asarray(ts, dtype=float)[..., None])
    return np.einsum("...ij,...j,...kj->...ik", q, phases, q.conj())


def principal_angle(z) -> np.ndarray:
    """Argument of ``z`` on the branch (-pi, pi]."""
    a = np.angle(z)
    return np.where(a <= -np.pi, a + 2 * np.pi, a)


def eigenphases(u) -> np.ndarray:
    """
    Eigenphases of a unitary on (-pi, pi], sorted ascending.

    >>> eigenphases(np.eye(2))
    array([0., 0.])
    """
    u = as_unitary(u)
    return np.sort(principal_angle(np.linalg.eigvals(u)))


def spectral_width(h) -> float:
    """Difference between largest and smallest eigenvalue of a Hermitian matrix."""
    w = np.linalg.eigvalsh(as_hermitian(h))
    return float(w[-1] - w[0])


# =============================================================================
# Standard bases
# =============================================================================

def pauli_matrices() -> List[Matrix]:
    """Return ``[sigma_x, sigma_y, sigma_z]``."""
    return [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]


def gell_mann_matrices() -> List[Matrix]:
    """Return ``[lambda_1, ..., lambda_8]`` with ``tr(lambda_a lambda_b) = 2 delta_ab``."""
    mats = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        sym = np.zeros((3, 3), dtype=complex)
        sym[i, j] = sym[j, i] = 1
        anti = np.zeros((3, 3), dtype=complex)
        anti[i, j], anti[j, i] = -1j, 1j
        mats.append((sym, anti))
    (l1, l2), (l4, l5), (l6, l7) = mats
    l3 = np.diag([1, -1, 0]).astype(complex)
    l8 = np.diag([1, 1, -2]).astype(complex) / np.sqrt(3)
    return [l1, l2, l3, l4, l5, l6, l7, l8]


def _check_spin(j: float) -> int:
    twice = 2 * j
    if j <= 0 or abs(twice - round(twice)) > 1e-12:
        raise ValueError(f"spin must be a positive half-integer, got {j}")
    return int(round(twice)) + 1


def spin_matrices(j: float) -> List[Matrix]:
    """
    Spin operators ``[J_x, J_y, J_z]`` in the ``|j, m>`` basis, ``m = j, ..., -j``.

    They satisfy ``[J_x, J_y] = i J_z``.
    """
    dim = _check_spin(j)
    m = j - np.arange(dim)
    jz = np.diag(m).astype(complex)
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    jp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        jp[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    return [jx, jy, jz]


def standard_bases(kind: str, j: Union[float, None] = None) -> List[Matrix]:
    """Look up a named operator basis: ``"pauli"``, ``"gellmann"`` or ``"spin"``."""
    if kind == "pauli":
        return pauli_matrices()
    if kind == "gellmann":
        return gell_mann_matrices()
    if kind == "spin":
        if j is None:
            raise ValueError("spin basis needs j")
        return spin_matrices(j)
    raise ValueError(f"unknown basis kind {kind!r}")


# =============================================================================
# Random matrices (tests and oracles)
# =============================================================================

def random_special_unitary(d: int, rng: np.random.Generator) -> Matrix:
    """Haar-random element of SU(d)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q / np.linalg.det(q) ** (1.0 / d)


def random_traceless_hermitian(d: int, rng: np.random.Generator) -> Matrix:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (z + z.conj().T) / 2
    return h - np.trace(h) / d * np.eye(d)


def random_state(d: int, rng: np.random.Generator, size: Union[int, None] = None) -> np.ndarray:
    """Haar-random pure state(s); with ``size`` the result has shape ``(size, d)``."""
    shape = (d,) if size is None else (size, d)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def stack(mats: Sequence[Matrix]) -> np.ndarray:
    return np.stack([as_matrix(m) for m in mats])
