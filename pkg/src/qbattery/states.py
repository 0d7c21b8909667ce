"""State and trajectory containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import CompositeSpace, eigvals_hermitian, hermitian_defect, symmetrize

TRACE_TOL = 1e-8
HERMITIAN_STATE_TOL = 1e-8
POSITIVITY_TOL = 1e-7


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    space: CompositeSpace

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)  # own copy; frozen below
        if m.shape != (self.space.total_dim, self.space.total_dim):
            raise InvalidStateError(
                f"matrix shape {m.shape} does not match space dimension {self.space.total_dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace_error(self) -> float:
        return abs(complex(np.trace(self.matrix)) - 1.0)

    @property
    def hermitian_defect(self) -> float:
        return hermitian_defect(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(eigvals_hermitian(symmetrize(self.matrix))[0])

    def expect(self, op) -> float:
        """Real part of ``Tr(rho op)``; ``op`` is assumed Hermitian."""
        return float(np.real(np.einsum("ij,ji->", self.matrix, op)))

    def validate(self) -> "DensityMatrix":
        if self.trace_error > TRACE_TOL:
            raise InvalidStateError(f"|Tr rho - 1| = {self.trace_error:.3e}")
        if self.hermitian_defect > HERMITIAN_STATE_TOL:
            raise InvalidStateError(f"max|rho - rho^H| = {self.hermitian_defect:.3e}")
        lo = self.min_eigenvalue()
        if lo < -POSITIVITY_TOL:
            raise InvalidStateError(f"minimum eigenvalue {lo:.3e} below {-POSITIVITY_TOL:.0e}")
        return self


@dataclass
class Trajectory:
    """Per-time records on an ascending grid starting at zero.

    ``records`` holds whatever the propagation was asked to keep: full
    :class:`DensityMatrix` objects, or the output of an observer callable.
    ``lam`` is the charger coupling used to report the scaled time axis.
    """

    times: np.ndarray
    records: list
    lam: float = 1.0
    n_steps: int = 0
    n_rhs: int = 0
    trace_error: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_eigenvalue: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hermitian_defect: np.ndarray = field(default_factory=lambda: np.zeros(0))
    steps_to_point: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def scaled_times(self) -> np.ndarray:
        return self.lam * np.asarray(self.times)

    def __len__(self):
        return len(self.times)
