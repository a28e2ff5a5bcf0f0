# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fiber kernels.

Same signatures and results as :mod:`ergodia._pykernels`; see that module
for the meaning of the arguments.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def fiber_sum(values, index, Py_ssize_t n_out):
    cdef cnp.ndarray arr = np.ascontiguousarray(values, dtype=np.complex128)
    cdef bint flat = arr.ndim == 1
    if flat:
        arr = arr.reshape(-1, 1)
    cdef const double complex[:, ::1] v = arr
    cdef const cnp.intp_t[::1] idx = np.ascontiguousarray(index, dtype=np.intp)
    cdef Py_ssize_t n = v.shape[0], k = v.shape[1], j, c
    if idx.shape[0] != n:
        raise ValueError("index length does not match values")
    out_arr = np.zeros((n_out, k), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef cnp.intp_t t
    for j in range(n):
        t = idx[j]
        if t < 0 or t >= n_out:
            raise IndexError("fiber index out of range")
        for c in range(k):
            out[t, c] = out[t, c] + v[j, c]
    if flat:
        return out_arr[:, 0]
    return out_arr


def fiber_gram_schmidt(gens, weights, index, Py_ssize_t n_out, double drop_tol=1e-12):
    cdef double complex[:, ::1] q = np.array(gens, dtype=np.complex128, order="C", copy=True)
    cdef const double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const cnp.intp_t[::1] idx = np.ascontiguousarray(index, dtype=np.intp)
    cdef Py_ssize_t L = q.shape[0], n = q.shape[1]
    cdef Py_ssize_t i, j, p, w, sweep
    ranks_arr = np.zeros(n_out, dtype=np.intp)
    cdef cnp.intp_t[::1] ranks = ranks_arr
    cdef double complex[::1] coef = np.zeros(n_out, dtype=np.complex128)
    cdef double[::1] orig = np.zeros(n_out, dtype=np.float64)
    cdef double[::1] res = np.zeros(n_out, dtype=np.float64)
    cdef double complex z
    for p in range(n):
        if idx[p] < 0 or idx[p] >= n_out:
            raise IndexError("fiber index out of range")
    for i in range(L):
        for w in range(n_out):
            orig[w] = 0.0
            res[w] = 0.0
        for p in range(n):
            z = q[i, p]
            orig[idx[p]] += (z.real * z.real + z.imag * z.imag) * wt[p]
        # two classical passes keep the basis orthogonal to working precision
        for sweep in range(2):
            for j in range(i):
                for w in range(n_out):
                    coef[w] = 0.0
                for p in range(n):
                    coef[idx[p]] = coef[idx[p]] + q[i, p] * q[j, p].conjugate() * wt[p]
                for p in range(n):
                    q[i, p] = q[i, p] - coef[idx[p]] * q[j, p]
        for p in range(n):
            z = q[i, p]
            res[idx[p]] += (z.real * z.real + z.imag * z.imag) * wt[p]
        for w in range(n_out):
            orig[w] = sqrt(orig[w])
            res[w] = sqrt(res[w])
            if res[w] > drop_tol * orig[w] and res[w] > 0.0:
                ranks[w] += 1
            else:
                res[w] = 0.0
        for p in range(n):
            w = idx[p]
            if res[w] == 0.0:
                q[i, p] = 0.0
            else:
                q[i, p] = q[i, p] / res[w]
    return np.asarray(q), ranks_arr
