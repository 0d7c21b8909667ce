"""Pure numpy/scipy fallback for the compiled sandwich kernel."""

import numpy as np
import scipy.sparse as sp


def _csr(op, n):
    indptr, indices, vals = op
    return sp.csr_matrix((vals, indices, indptr), shape=(len(indptr) - 1, n))


def sandwich_rhs(a_op, jumps, y):
    """Return ``A Y + Y A^H + sum_J J Y J^H`` for phased CSR operators."""
    y = np.asarray(y, dtype=np.complex128)
    n = y.shape[0]
    a = _csr(a_op, n)
    # Y A^H computed as (conj(A) Y^T)^T
    out = a @ y + (a.conj() @ y.T).T
    for op in jumps:
        j = _csr(op, n)
        t = j @ y
        out += (j.conj() @ t.T).T
    return out
