"""Hot-loop kernel selection.

The compiled extension is used when it imports; otherwise the numpy/scipy
fallback.  Setting ``QBATTERY_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _pykernels

BACKENDS = {"python": _pykernels.sandwich_rhs}

try:
    from . import _kernels
except ImportError:  # pragma: no cover - exercised only without a build
    _kernels = None
else:
    BACKENDS["compiled"] = _kernels.sandwich_rhs

if os.environ.get("QBATTERY_PURE_PYTHON", "") not in ("", "0") or _kernels is None:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "compiled"


def get_backend(name: str | None = None):
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}; available: {sorted(BACKENDS)}") from None


@dataclass(frozen=True)
class PhasedOperator:
    """Sparse operator whose entry ``(j, k)`` carries a phase ``exp(i freq_jk t)``."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    freq: np.ndarray

    @classmethod
    def from_dense(cls, m, diag_energies=None, tol: float = 0.0) -> "PhasedOperator":
        """Build from a dense matrix.

        With ``diag_energies`` = ``e``, entry ``(j, k)`` rotates at ``e[j] - e[k]``.
        """
        csr = sp.csr_matrix(np.where(np.abs(m) > tol, m, 0))
        csr.eliminate_zeros()
        csr.sort_indices()
        indptr = csr.indptr.astype(np.int64)
        indices = csr.indices.astype(np.int64)
        if diag_energies is None:
            freq = np.zeros(len(indices))
        else:
            e = np.asarray(diag_energies, dtype=float)
            rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
            freq = e[rows] - e[indices]
        return cls(indptr, indices, csr.data.astype(np.complex128), freq)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def at(self, t: float) -> tuple:
        if np.any(self.freq):
            vals = self.data * np.exp(1j * self.freq * t)
        else:
            vals = self.data
        return (self.indptr, self.indices, np.ascontiguousarray(vals))

    def to_dense(self, t: float = 0.0) -> np.ndarray:
        indptr, indices, vals = self.at(t)
        n = len(indptr) - 1
        return sp.csr_matrix((vals, indices, indptr), shape=(n, n)).toarray()
