# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot numeric kernels.

Matrix products go through the same BLAS NumPy links against (via
scipy.linalg.cython_blas); the win over the NumPy backend comes from the
fused element-wise loops, which skip Python dispatch and temporary
allocations. Interface and semantics mirror `_kernels_np`.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, pow, sqrt
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND = "cython"

cdef char TRANS_N = b'N'
cdef char TRANS_T = b'T'
cdef double ONE = 1.0
cdef double ZERO = 0.0


cdef void _gemm(char ta, char tb, int m, int n, int k,
                double* a, int lda, double* b, int ldb,
                double* c, int ldc) noexcept nogil:
    dgemm(&ta, &tb, &m, &n, &k, &ONE, a, &lda, b, &ldb, &ZERO, c, &ldc)


def affine(double[:, ::1] x, double[:, ::1] w, double[::1] b):
    """z = x @ w.T + b for x (n, fin), w (fout, fin), b (fout,)."""
    cdef Py_ssize_t n = x.shape[0], fin = x.shape[1], fout = w.shape[0]
    out_arr = np.empty((n, fout), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    if n > 0:
        with nogil:
            # out^T (fout x n, col-major) = w @ x^T; the row-major buffers
            # already hold w^T and x^T in column-major terms.
            _gemm(TRANS_T, TRANS_N, <int>fout, <int>n, <int>fin,
                  &w[0, 0], <int>fin, &x[0, 0], <int>fin, &out[0, 0], <int>fout)
            for i in range(n):
                for j in range(fout):
                    out[i, j] += b[j]
    return out_arr


def relu(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], m = z.shape[1]
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(m):
                out[i, j] = z[i, j] if z[i, j] > 0.0 else 0.0
    return out_arr


def relu_backward_inplace(dz_arr, double[:, ::1] z):
    """Zero the gradient wherever the unit was inactive (z <= 0)."""
    cdef double[:, ::1] dz = dz_arr
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(dz.shape[0]):
            for j in range(dz.shape[1]):
                if z[i, j] <= 0.0:
                    dz[i, j] = 0.0
    return dz_arr


def softmax(double[:, ::1] z):
    """Row-wise softmax, stabilized by subtracting each row's max logit."""
    cdef Py_ssize_t n = z.shape[0], m = z.shape[1]
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double mx, total
    with nogil:
        for i in range(n):
            mx = z[i, 0]
            for j in range(1, m):
                if z[i, j] > mx:
                    mx = z[i, j]
            total = 0.0
            for j in range(m):
                out[i, j] = exp(z[i, j] - mx)
                total += out[i, j]
            for j in range(m):
                out[i, j] /= total
    return out_arr


def affine_grads(double[:, ::1] delta, double[:, ::1] a_prev, double[:, ::1] w,
                 bint need_da=True):
    """Gradients of an affine layer given the upstream delta (n, fout)."""
    cdef Py_ssize_t n = delta.shape[0], fout = delta.shape[1], fin = a_prev.shape[1]
    gw_arr = np.empty((fout, fin), dtype=np.float64)
    gb_arr = np.zeros(fout, dtype=np.float64)
    da_arr = np.empty((n, fin), dtype=np.float64) if need_da else None
    cdef double[:, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef double[:, ::1] da
    cdef Py_ssize_t i, j
    if n == 0:
        gw_arr[:] = 0.0
        if need_da:
            return gw_arr, gb_arr, da_arr
        return gw_arr, gb_arr, None
    with nogil:
        # gw^T (fin x fout, col-major) = a_prev^T @ delta
        _gemm(TRANS_N, TRANS_T, <int>fin, <int>fout, <int>n,
              &a_prev[0, 0], <int>fin, &delta[0, 0], <int>fout, &gw[0, 0], <int>fin)
        for i in range(n):
            for j in range(fout):
                gb[j] += delta[i, j]
    if need_da:
        da = da_arr
        with nogil:
            # da^T (fin x n, col-major) = w^T @ delta^T
            _gemm(TRANS_N, TRANS_N, <int>fin, <int>n, <int>fout,
                  &w[0, 0], <int>fin, &delta[0, 0], <int>fout, &da[0, 0], <int>fin)
        return gw_arr, gb_arr, da_arr
    return gw_arr, gb_arr, None


def adam_update_inplace(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                        double lr, double beta1, double beta2, double eps, int t):
    """One bias-corrected Adam update, in place on p, m, v. t is 1-based."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, t)
    cdef double bc2 = 1.0 - pow(beta2, t)
    with nogil:
        for i in range(n):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
            p[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
