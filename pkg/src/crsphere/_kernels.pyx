# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel: monomial design matrix times coefficient columns.

Same contract as ``_kernels_np.eval_poly``. Every monomial factors as
``(z1^a1 z2^a2) * conj(z1^b1 z2^b2)``, and the number of distinct exponent
pairs is tiny compared to the number of monomials (45 vs 495 at degree 8),
so each point first fills a pair table and the design entry costs one
complex multiply and two L1 gathers instead of three multiplies and four
table reads. Blocks of the design matrix then hit one complex GEMM each.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

IMPLEMENTATION = "cython"

cdef enum:
    BLOCK = 2048
    MAXPOW = 64
    MAXPAIRS = 4096


def eval_poly(z1, z2, exponents, coeff_columns):
    """Evaluate monomial-coefficient columns at points; returns (n, k) complex."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w1 = np.ascontiguousarray(z1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w2 = np.ascontiguousarray(z2, dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] exps = np.ascontiguousarray(exponents, dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] cc = np.ascontiguousarray(coeff_columns, dtype=np.complex128)

    cdef Py_ssize_t n = w1.shape[0]
    cdef Py_ssize_t m = exps.shape[0]
    cdef Py_ssize_t k = cc.shape[1]
    if cc.shape[0] != m:
        raise ValueError("coefficient rows do not match exponent rows")

    # Index the distinct (e1, e2) power pairs appearing on either side.
    pair_index = {}
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hol_idx = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] anti_idx = np.empty(m, dtype=np.int64)
    cdef Py_ssize_t j
    for j in range(m):
        key = (exps[j, 0], exps[j, 1])
        if key not in pair_index:
            pair_index[key] = len(pair_index)
        hol_idx[j] = pair_index[key]
        key = (exps[j, 2], exps[j, 3])
        if key not in pair_index:
            pair_index[key] = len(pair_index)
        anti_idx[j] = pair_index[key]
    cdef Py_ssize_t npairs = len(pair_index)
    if npairs > MAXPAIRS:
        raise ValueError("distinct power-pair count exceeds compiled table size")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pair_e1 = np.empty(npairs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pair_e2 = np.empty(npairs, dtype=np.int64)
    for key, idx in pair_index.items():
        pair_e1[idx] = key[0]
        pair_e2[idx] = key[1]

    cdef Py_ssize_t maxd = 0
    cdef Py_ssize_t d
    for j in range(m):
        for d in range(4):
            if exps[j, d] > maxd:
                maxd = exps[j, d]
    if maxd >= MAXPOW:
        raise ValueError("monomial degree exceeds compiled power-table size")

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((n, k), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] design = np.empty((BLOCK, m), dtype=np.complex128)

    cdef Py_ssize_t start, stop, bs, i, t
    cdef double complex p1[MAXPOW]
    cdef double complex p2[MAXPOW]
    cdef double complex tab[MAXPAIRS]
    cdef double complex zv1, zv2
    cdef double complex alpha = 1.0, beta = 0.0
    cdef int bm, bn, bk, lda, ldb, ldc

    for start in range(0, n, BLOCK):
        stop = min(start + BLOCK, n)
        bs = stop - start
        for i in range(bs):
            zv1 = w1[start + i]
            zv2 = w2[start + i]
            p1[0] = 1.0
            p2[0] = 1.0
            for d in range(1, maxd + 1):
                p1[d] = p1[d - 1] * zv1
                p2[d] = p2[d - 1] * zv2
            for t in range(npairs):
                tab[t] = p1[pair_e1[t]] * p2[pair_e2[t]]
            for j in range(m):
                design[i, j] = tab[hol_idx[j]] * tab[anti_idx[j]].conjugate()
        # Row-major arrays seen column-major: out[start:stop].T = cc.T @ design.T
        bm = <int> k; bn = <int> bs; bk = <int> m
        lda = <int> k; ldb = <int> m; ldc = <int> k
        zgemm("N", "N", &bm, &bn, &bk, &alpha,
              &cc[0, 0], &lda, &design[0, 0], &ldb, &beta,
              &out[start, 0], &ldc)
    return out
