# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled block-operator kernels.

``phi`` is a stack of sensing matrices of shape ``(q, m, p*p)``. With
``q == 1`` one matrix serves every patch, otherwise patch ``j`` uses
``phi[j]``. Kernels read and write the image in place instead of
materializing a patch array. Summation order is fixed (row-major over the
patch pixels), so results are reproducible run to run.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def block_forward(const double[:, ::1] x, Py_ssize_t p, const double[:, :, ::1] phi,
                  const cnp.int64_t[::1] idx):
    cdef Py_ssize_t m = phi.shape[1]
    cdef Py_ssize_t k = idx.shape[0]
    cdef Py_ssize_t cols = x.shape[1] // p
    cdef bint shared = phi.shape[0] == 1
    cdef Py_ssize_t t, i, a, b, r0, c0, q
    cdef cnp.int64_t j
    cdef double s
    out = np.empty((k, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for t in range(k):
            j = idx[t]
            q = 0 if shared else j
            r0 = (j // cols) * p
            c0 = (j % cols) * p
            for i in range(m):
                s = 0.0
                for a in range(p):
                    for b in range(p):
                        s = s + phi[q, i, a * p + b] * x[r0 + a, c0 + b]
                o[t, i] = s
    return out


def block_adjoint_add(const double[:, ::1] v, Py_ssize_t p, const double[:, :, ::1] phi,
                      const cnp.int64_t[::1] idx, double[:, ::1] out):
    cdef Py_ssize_t m = phi.shape[1]
    cdef Py_ssize_t k = idx.shape[0]
    cdef Py_ssize_t cols = out.shape[1] // p
    cdef bint shared = phi.shape[0] == 1
    cdef Py_ssize_t t, i, a, b, r0, c0, q
    cdef cnp.int64_t j
    cdef double s
    with nogil:
        for t in range(k):
            j = idx[t]
            q = 0 if shared else j
            r0 = (j // cols) * p
            c0 = (j % cols) * p
            for a in range(p):
                for b in range(p):
                    s = 0.0
                    for i in range(m):
                        s = s + phi[q, i, a * p + b] * v[t, i]
                    out[r0 + a, c0 + b] += s


def data_term_grad(const double[:, ::1] x, Py_ssize_t p, const double[:, :, ::1] phi,
                   const cnp.int64_t[::1] idx, const double[:, ::1] y, double[:, ::1] grad):
    """Accumulate phi_j^T (phi_j x_j - y_j) into ``grad``; return 0.5 * sum ||phi_j x_j - y_j||^2."""
    cdef Py_ssize_t m = phi.shape[1]
    cdef Py_ssize_t k = idx.shape[0]
    cdef Py_ssize_t cols = x.shape[1] // p
    cdef bint shared = phi.shape[0] == 1
    cdef Py_ssize_t t, i, a, b, r0, c0, q
    cdef cnp.int64_t j
    cdef double s, total = 0.0
    res_buf = np.empty(m, dtype=np.float64)
    cdef double[::1] res = res_buf
    with nogil:
        for t in range(k):
            j = idx[t]
            q = 0 if shared else j
            r0 = (j // cols) * p
            c0 = (j % cols) * p
            for i in range(m):
                s = 0.0
                for a in range(p):
                    for b in range(p):
                        s = s + phi[q, i, a * p + b] * x[r0 + a, c0 + b]
                s = s - y[t, i]
                res[i] = s
                total = total + s * s
            for a in range(p):
                for b in range(p):
                    s = 0.0
                    for i in range(m):
                        s = s + phi[q, i, a * p + b] * res[i]
                    grad[r0 + a, c0 + b] += s
    return 0.5 * total
