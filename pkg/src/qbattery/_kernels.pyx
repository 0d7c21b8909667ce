# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sandwich right-hand side on phase-modulated CSR operators.

Each operator is stored as ``(indptr, indices, vals)`` where ``vals`` already
carries the time-dependent phase.  ``Y`` and ``out`` are C-contiguous dense
complex matrices.
"""

import numpy as np
cimport numpy as cnp

cdef extern from "complex.h" nogil:
    double complex conj(double complex z)


cdef void _left(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices, const double complex[::1] vals,
                const double complex[:, ::1] y, double complex[:, ::1] out) noexcept nogil:
    # out[i, :] += sum_k vals[k] * y[indices[k], :]
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    cdef Py_ssize_t i, k, c, row
    cdef double complex v
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            v = vals[k]
            row = indices[k]
            for c in range(m):
                out[i, c] += v * y[row, c]


cdef void _right_adjoint(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices, const double complex[::1] vals,
                         const double complex[:, ::1] y, double complex[:, ::1] out) noexcept nogil:
    # out += y @ A^H, i.e. out[r, j] += sum_{k in row j} conj(vals[k]) * y[r, indices[k]]
    cdef Py_ssize_t n = y.shape[0], nrows = indptr.shape[0] - 1
    cdef Py_ssize_t r, j, k
    cdef double complex acc
    for r in range(n):
        for j in range(nrows):
            acc = 0
            for k in range(indptr[j], indptr[j + 1]):
                acc = acc + conj(vals[k]) * y[r, indices[k]]
            out[r, j] += acc


def sandwich_rhs(tuple a_op, list jumps, cnp.ndarray y_arr):
    """Return ``A Y + Y A^H + sum_J J Y J^H`` for phased CSR operators.

    ``a_op`` and each entry of ``jumps`` are ``(indptr, indices, vals)``.
    """
    cdef const double complex[:, ::1] y = np.ascontiguousarray(y_arr, dtype=np.complex128)
    cdef Py_ssize_t n = y.shape[0]
    out_arr = np.zeros((n, y.shape[1]), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[:, ::1] tmp
    cdef const cnp.int64_t[::1] ip
    cdef const cnp.int64_t[::1] ix
    cdef const double complex[::1] v

    ip, ix, v = a_op
    with nogil:
        _left(ip, ix, v, y, out)
        _right_adjoint(ip, ix, v, y, out)
    if jumps:
        tmp_arr = np.empty_like(out_arr)
        tmp = tmp_arr
        for op in jumps:
            ip, ix, v = op
            tmp[:, :] = 0
            with nogil:
                _left(ip, ix, v, y, tmp)
                _right_adjoint(ip, ix, v, tmp, out)
    return out_arr
