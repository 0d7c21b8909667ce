"""Dense complex operator algebra on the cavity (x) qubit1 (x) qubit2 space.

Qubit basis ordering is ``(|e>, |g>)`` so that ``sigma_z = diag(1, -1)``
and ``sigma_+ = |e><g|``.  The global factor ordering is cavity first,
then the charger-coupled qubit, then the battery qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

EXCITED = np.array([1, 0], dtype=complex)
GROUND = np.array([0, 1], dtype=complex)

CAVITY, QUBIT1, QUBIT2 = 0, 1, 2


class DimensionError(ValueError):
    """Operand shapes do not fit the requested operation."""


@dataclass(frozen=True)
class CompositeSpace:
    """Factor bookkeeping for ``cavity (x) qubit1 (x) qubit2``."""

    n_cavity: int

    def __post_init__(self):
        if int(self.n_cavity) != self.n_cavity or self.n_cavity < 1:
            raise ValueError(f"n_cavity must be a positive integer, got {self.n_cavity!r}")

    @property
    def factor_dims(self) -> tuple[int, int, int]:
        return (self.n_cavity, 2, 2)

    @property
    def total_dim(self) -> int:
        return self.n_cavity * 4

    def basis_index(self, n: int, q1: int, q2: int) -> int:
        """Flat index of ``|n> (x) |q1> (x) |q2>`` (qubit index 0 = excited)."""
        return (n * 2 + q1) * 2 + q2


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def _as_square(m) -> np.ndarray:
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(_as_matrix(a), _as_matrix(b))


def kron_all(*ops) -> np.ndarray:
    return reduce(kron, ops)


def destroy(n: int) -> np.ndarray:
    """Truncated annihilation operator on ``n`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def embed(op, slot: int, space: CompositeSpace) -> np.ndarray:
    """Tensor ``op`` into factor ``slot`` with identities elsewhere."""
    op = _as_square(op)
    dims = space.factor_dims
    if not 0 <= slot < len(dims):
        raise DimensionError(f"slot {slot} out of range for {len(dims)} factors")
    if op.shape[0] != dims[slot]:
        raise DimensionError(
            f"operator of dimension {op.shape[0]} does not fit factor {slot} of dimension {dims[slot]}"
        )
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[slot] = op
    return kron_all(*factors)


def partial_trace_cavity(rho, space: CompositeSpace) -> np.ndarray:
    """Trace out the cavity factor, leaving the 4x4 two-qubit matrix."""
    rho = _as_square(rho)
    if rho.shape[0] != space.total_dim:
        raise DimensionError(f"rho has dimension {rho.shape[0]}, space expects {space.total_dim}")
    r = rho.reshape(space.n_cavity, 4, space.n_cavity, 4)
    return np.einsum("iaib->ab", r)


def expm(m) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    return scipy.linalg.expm(_as_square(m))


def eigvals_general(m) -> np.ndarray:
    """All eigenvalues of a general square matrix, unordered.

    Raises ``numpy.linalg.LinAlgError`` if the QR iteration fails to converge.
    """
    return np.linalg.eigvals(_as_square(m))


def hermitian_defect(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def symmetrize(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def eigvals_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix in ascending order."""
    m = _as_square(m)
    defect = hermitian_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian: max|m - m^H| = {defect:.3e} > {tol:.1e}")
    return np.linalg.eigvalsh(symmetrize(m))
