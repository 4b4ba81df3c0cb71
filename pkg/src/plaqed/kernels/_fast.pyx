# Compiled kernel backend.  Mirrors plaqed.kernels._pure; see that module
# for the semantics.  Branch ordering within expand_terms differs from the
# pure backend and must not be relied upon.

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

KIND_ID = 0
KIND_TRANS = 1
KIND_HB = 2
KIND_DP = 3
KIND_PP = 4

cdef int _KIND_ID = 0
cdef int _KIND_TRANS = 1
cdef int _KIND_HB = 2
cdef int _KIND_DP = 3
cdef int _KIND_PP = 4


cdef inline uint64_t _translate_one(uint64_t c, int64_t* perm, int n) nogil:
    cdef uint64_t out = 0
    cdef int s
    for s in range(n):
        if (c >> s) & 1ULL:
            out |= (<uint64_t>1) << perm[s]
    return out


cdef inline uint64_t _swap_one(uint64_t c, int i, int j) nogil:
    cdef uint64_t bi = (c >> i) & 1ULL
    cdef uint64_t bj = (c >> j) & 1ULL
    if bi == bj:
        return c
    return c ^ (((<uint64_t>1) << i) | ((<uint64_t>1) << j))


def translate_configs(configs, perm):
    """Apply a site permutation to bit words (see _pure.translate_configs)."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] cfg = np.ascontiguousarray(configs, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] p = np.ascontiguousarray(perm, dtype=np.int64)
    cdef Py_ssize_t m = cfg.shape[0]
    cdef int n = p.shape[0]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(m, dtype=np.uint64)
    cdef Py_ssize_t q
    for q in range(m):
        out[q] = _translate_one(cfg[q], &p[0], n)
    return out


def orbit_minimize(configs, perms):
    """Minimum over permutation rows and the first row achieving it."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] cfg = np.ascontiguousarray(configs, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] pm = np.ascontiguousarray(perms, dtype=np.int64)
    cdef Py_ssize_t m = cfg.shape[0]
    cdef int n_t = pm.shape[0]
    cdef int n = pm.shape[1]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] best = np.empty(m, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] t_idx = np.zeros(m, dtype=np.int64)
    cdef Py_ssize_t q
    cdef int t
    cdef uint64_t c, cand, b
    for q in range(m):
        c = cfg[q]
        b = _translate_one(c, &pm[0, 0], n)
        t_idx[q] = 0
        for t in range(1, n_t):
            cand = _translate_one(c, &pm[t, 0], n)
            if cand < b:
                b = cand
                t_idx[q] = t
        best[q] = b
    return best, t_idx


def expand_terms(configs, kinds, sites, coefs):
    """Matrix-element branches for every (config, term) pair
    (see _pure.expand_terms)."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] cfg = np.ascontiguousarray(configs, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kd = np.ascontiguousarray(kinds, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] st = np.ascontiguousarray(sites, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cf = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t m = cfg.shape[0]
    cdef Py_ssize_t g, q
    cdef int kind
    cdef Py_ssize_t cap = 0
    for g in range(kd.shape[0]):
        kind = <int>kd[g]
        if kind == _KIND_ID or kind == _KIND_TRANS:
            cap += m
        elif kind == _KIND_HB:
            cap += 2 * m
        elif kind == _KIND_DP:
            cap += 4 * m
        elif kind == _KIND_PP:
            cap += 9 * m
        else:
            raise ValueError(f"unknown term kind {kind}")

    cdef cnp.ndarray[cnp.int64_t, ndim=1] src = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] dst = np.empty(cap, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] amp = np.empty(cap, dtype=np.float64)
    cdef Py_ssize_t w = 0
    cdef uint64_t c, d1, d2, bdst
    cdef double coef, f1
    cdef int i, j, k, l, pa, pb
    cdef int a_i[3]
    cdef int a_j[3]
    cdef int b_i[3]
    cdef int b_j[3]

    for g in range(kd.shape[0]):
        kind = <int>kd[g]
        coef = cf[g]
        if kind == _KIND_ID:
            for q in range(m):
                src[w] = q; dst[w] = cfg[q]; amp[w] = coef; w += 1
        elif kind == _KIND_TRANS:
            i = <int>st[g, 0]; j = <int>st[g, 1]
            for q in range(m):
                src[w] = q; dst[w] = _swap_one(cfg[q], i, j); amp[w] = coef; w += 1
        elif kind == _KIND_HB:
            i = <int>st[g, 0]; j = <int>st[g, 1]
            for q in range(m):
                c = cfg[q]
                d1 = _swap_one(c, i, j)
                if d1 == c:
                    src[w] = q; dst[w] = c; amp[w] = 0.25 * coef; w += 1
                else:
                    src[w] = q; dst[w] = c; amp[w] = -0.25 * coef; w += 1
                    src[w] = q; dst[w] = d1; amp[w] = 0.5 * coef; w += 1
        elif kind == _KIND_DP:
            i = <int>st[g, 0]; j = <int>st[g, 1]
            k = <int>st[g, 2]; l = <int>st[g, 3]
            for q in range(m):
                c = cfg[q]
                # branch 1: diagonal part of (S_k.S_l)
                d1 = _swap_one(c, k, l)
                f1 = (-0.25 if d1 != c else 0.25) * coef
                d2 = _swap_one(c, i, j)
                if d2 == c:
                    src[w] = q; dst[w] = c; amp[w] = 0.25 * f1; w += 1
                else:
                    src[w] = q; dst[w] = c; amp[w] = -0.25 * f1; w += 1
                    src[w] = q; dst[w] = d2; amp[w] = 0.5 * f1; w += 1
                # branch 2: off-diagonal part of (S_k.S_l)
                if d1 != c:
                    d2 = _swap_one(d1, i, j)
                    if d2 == d1:
                        src[w] = q; dst[w] = d1; amp[w] = 0.25 * 0.5 * coef; w += 1
                    else:
                        src[w] = q; dst[w] = d1; amp[w] = -0.25 * 0.5 * coef; w += 1
                        src[w] = q; dst[w] = d2; amp[w] = 0.5 * 0.5 * coef; w += 1
        elif kind == _KIND_PP:
            a_i[0] = <int>st[g, 0]; a_j[0] = <int>st[g, 1]
            a_i[1] = <int>st[g, 0]; a_j[1] = <int>st[g, 2]
            a_i[2] = <int>st[g, 1]; a_j[2] = <int>st[g, 2]
            b_i[0] = <int>st[g, 3]; b_j[0] = <int>st[g, 4]
            b_i[1] = <int>st[g, 3]; b_j[1] = <int>st[g, 5]
            b_i[2] = <int>st[g, 4]; b_j[2] = <int>st[g, 5]
            for q in range(m):
                c = cfg[q]
                for pa in range(3):
                    for pb in range(3):
                        bdst = _swap_one(c, b_i[pb], b_j[pb])
                        src[w] = q
                        dst[w] = _swap_one(bdst, a_i[pa], a_j[pa])
                        amp[w] = coef
                        w += 1
    return src[:w].copy(), dst[:w].copy(), amp[:w].copy()


def popcount_configs(n_sites, n_up):
    """All n_sites-bit words with n_up set bits, ascending (Gosper)."""
    if n_up < 0 or n_up > n_sites:
        return np.empty(0, dtype=np.uint64)
    cdef int n = n_sites
    cdef int k = n_up
    from math import comb
    cdef Py_ssize_t total = comb(n, k)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(total, dtype=np.uint64)
    if k == 0:
        out[0] = 0
        return out
    cdef uint64_t c = ((<uint64_t>1) << k) - 1
    cdef uint64_t u, v
    cdef Py_ssize_t q
    for q in range(total):
        out[q] = c
        u = c & (~c + 1)
        v = c + u
        c = v | (((c ^ v) >> 2) / u)
    return out


def popcount_reps_stream(n_sites, n_up, perms, chunk_bits=24):
    """Orbit representatives among fixed-popcount words, ascending.

    Streaming Gosper enumeration; a word is kept iff no translation maps
    it to a smaller word.
    """
    cdef cnp.ndarray[cnp.int64_t, ndim=2] pm = np.ascontiguousarray(perms, dtype=np.int64)
    cdef int n_t = pm.shape[0]
    cdef int n = pm.shape[1]
    cdef int k = n_up
    if k < 0 or k > n_sites:
        return np.empty(0, dtype=np.uint64)
    if k == 0:
        return np.zeros(1, dtype=np.uint64)
    from math import comb
    cdef uint64_t c = ((<uint64_t>1) << k) - 1
    cdef uint64_t u, v, cand
    cdef Py_ssize_t total = comb(n_sites, k)
    cdef Py_ssize_t q
    cdef int t
    cdef bint is_rep
    cdef Py_ssize_t buf_cap = 1 << 16
    cdef Py_ssize_t w = 0
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] buf = np.empty(buf_cap, dtype=np.uint64)
    chunks = []
    for q in range(total):
        is_rep = True
        for t in range(n_t):
            cand = _translate_one(c, &pm[t, 0], n)
            if cand < c:
                is_rep = False
                break
        if is_rep:
            if w == buf_cap:
                chunks.append(buf)
                buf = np.empty(buf_cap, dtype=np.uint64)
                w = 0
            buf[w] = c
            w += 1
        u = c & (~c + 1)
        v = c + u
        c = v | (((c ^ v) >> 2) / u)
    chunks.append(buf[:w].copy())
    return np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
