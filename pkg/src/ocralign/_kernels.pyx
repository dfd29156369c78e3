# Compiled inner loops.  Every function here has a line-for-line twin in
# _fallback.py; tests/test_kernels.py checks that both agree.
from libc.math cimport log
from libc.stdlib cimport malloc, free

import numpy as np

cdef enum:
    OP_MATCH = 0
    OP_SUB = 1
    OP_DEL = 2
    OP_INS = 3


def edit_ops(const int[:] a, const int[:] b):
    """Unit-cost Levenshtein transcript of ``a`` -> ``b`` as op codes.

    Backtrace preference on ties: match > substitute > delete > insert.
    """
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t w = m + 1
    cdef Py_ssize_t i, j, k
    cdef int best, x
    cdef int *d = <int *> malloc((n + 1) * w * sizeof(int))
    if d == NULL:
        raise MemoryError()
    out = np.empty(n + m, dtype=np.int8)
    cdef signed char[:] ops = out
    try:
        for j in range(w):
            d[j] = <int> j
        for i in range(1, n + 1):
            d[i * w] = <int> i
            for j in range(1, w):
                best = d[(i - 1) * w + j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
                x = d[(i - 1) * w + j] + 1
                if x < best:
                    best = x
                x = d[i * w + j - 1] + 1
                if x < best:
                    best = x
                d[i * w + j] = best
        i = n
        j = m
        k = 0
        while i > 0 or j > 0:
            x = d[i * w + j]
            if i > 0 and j > 0 and a[i - 1] == b[j - 1] and x == d[(i - 1) * w + j - 1]:
                ops[k] = OP_MATCH
                i -= 1
                j -= 1
            elif i > 0 and j > 0 and x == d[(i - 1) * w + j - 1] + 1:
                ops[k] = OP_SUB
                i -= 1
                j -= 1
            elif i > 0 and x == d[(i - 1) * w + j] + 1:
                ops[k] = OP_DEL
                i -= 1
            else:
                ops[k] = OP_INS
                j -= 1
            k += 1
    finally:
        free(d)
    return out[:k][::-1].copy()


def edit_distance(const int[:] a, const int[:] b):
    """Two-row unit-cost Levenshtein distance."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t i, j
    cdef int best, x
    cdef int *prev = <int *> malloc((m + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((m + 1) * sizeof(int))
    cdef int *tmp
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    try:
        for j in range(m + 1):
            prev[j] = <int> j
        for i in range(1, n + 1):
            cur[0] = <int> i
            for j in range(1, m + 1):
                best = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
                x = prev[j] + 1
                if x < best:
                    best = x
                x = cur[j - 1] + 1
                if x < best:
                    best = x
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[m]
    finally:
        free(prev)
        free(cur)


def estep(const double[:] t, const double[:] prior, const long long[:] t_idx,
          const long long[:] col_ptr, double[:] post):
    """Fill ``post`` with alignment posteriors; return the log-likelihood.

    Entries of one target position are contiguous: column ``c`` spans
    ``col_ptr[c]:col_ptr[c + 1]``.
    """
    cdef Py_ssize_t ncol = col_ptr.shape[0] - 1
    cdef Py_ssize_t c, e
    cdef double z, v, ll = 0.0
    for c in range(ncol):
        z = 0.0
        for e in range(col_ptr[c], col_ptr[c + 1]):
            v = t[t_idx[e]] * prior[e]
            post[e] = v
            z += v
        if z > 0.0:
            ll += log(z)
            for e in range(col_ptr[c], col_ptr[c + 1]):
                post[e] /= z
    return ll


cdef inline Py_ssize_t _pick(const double[:] cum, Py_ssize_t lo, Py_ssize_t hi, double r):
    cdef Py_ssize_t e
    for e in range(lo, hi):
        if r < cum[e]:
            return e
    return -1


def noise_line(const int[:] codes, const int[:] ctx, const double[:] u,
               const long long[:] sub_ptr, const double[:] sub_cum, const int[:] sub_out,
               const long long[:] ins_ptr, const double[:] ins_cum, const int[:] ins_out,
               int begin):
    """Sample one noisy line; returns output code points as an int32 array.

    ``u`` holds ``2 * n + 1`` uniforms: the begin-slot insertion draw, then
    per clean character its substitution draw and its insertion draw.
    """
    cdef Py_ssize_t n = codes.shape[0]
    out = np.empty(2 * n + 1, dtype=np.int32)
    cdef int[:] o = out
    cdef Py_ssize_t i, e, k = 0
    cdef int c
    e = _pick(ins_cum, ins_ptr[begin], ins_ptr[begin + 1], u[0])
    if e >= 0:
        o[k] = ins_out[e]
        k += 1
    for i in range(n):
        c = ctx[i]
        if c < 0:
            o[k] = codes[i]
            k += 1
            continue
        e = _pick(sub_cum, sub_ptr[c], sub_ptr[c + 1], u[1 + 2 * i])
        if e < 0:
            o[k] = codes[i]
            k += 1
        elif sub_out[e] >= 0:
            o[k] = sub_out[e]
            k += 1
        e = _pick(ins_cum, ins_ptr[c], ins_ptr[c + 1], u[2 + 2 * i])
        if e >= 0:
            o[k] = ins_out[e]
            k += 1
    return out[:k].copy()
