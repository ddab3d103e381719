# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled subset-lattice kernels.

Every routine mirrors :mod:`bnexact._pykernels` operation for operation, so
both backends produce bit-identical tables. Sums over submasks run in
ascending submask order with Neumaier compensation; threads only split
independent entries, never a single sum.
"""

import numpy as np
from cython.parallel cimport prange, parallel
from libc.stdlib cimport malloc, free
from libc.math cimport fabs

ctypedef unsigned long long u64

cdef extern from *:
    """
    static inline int bn_ctz(unsigned long long x) { return __builtin_ctzll(x); }
    static inline int bn_popcount(unsigned long long x) { return __builtin_popcountll(x); }
    """
    int bn_ctz(u64 x) noexcept nogil
    int bn_popcount(u64 x) noexcept nogil


cdef inline u64 del_bit(u64 x, int j) noexcept nogil:
    cdef u64 low = ((<u64>1) << j) - 1
    return (x & low) | ((x >> (j + 1)) << j)


cdef inline u64 ins_bit(u64 x, int j) noexcept nogil:
    cdef u64 low = ((<u64>1) << j) - 1
    return (x & low) | ((x & ~low) << 1)


def subset_sum_(double[::1] a):
    """In place: a[S] <- sum of a over subsets of S."""
    cdef Py_ssize_t size = a.shape[0], i, step = 1
    with nogil:
        while step < size:
            for i in range(size):
                if i & step:
                    a[i] += a[i ^ step]
            step <<= 1


def superset_sum_(double[::1] a):
    """In place: a[S] <- sum of a over supersets of S."""
    cdef Py_ssize_t size = a.shape[0], i, step = 1
    with nogil:
        while step < size:
            for i in range(size):
                if not (i & step):
                    a[i] += a[i | step]
            step <<= 1


cdef double rr_entry(u64 S, u64 full, const double* A, u64 half,
                     const double* RR, double* buf, double* a) noexcept nogil:
    cdef u64 comp = full ^ S, rest = S, T = 0, t, top
    cdef int b = 0, j
    cdef double s = 0.0, c = 0.0, term, tot
    while rest:
        j = bn_ctz(rest)
        a[b] = A[j * half + del_bit(comp, j)]
        rest &= rest - 1
        b += 1
    top = (<u64>1) << b
    buf[0] = 1.0
    t = 1
    while t < top:
        T = (T - S) & S
        buf[t] = a[bn_ctz(t)] * buf[t & (t - 1)]
        term = RR[S ^ T] * buf[t]
        if not (bn_popcount(t) & 1):
            term = -term
        tot = s + term
        if fabs(s) >= fabs(term):
            c += (s - tot) + term
        else:
            c += (term - tot) + s
        s = tot
        t += 1
    return s + c


cdef double h_entry(u64 S, const double* A, u64 half, const double* H) noexcept nogil:
    cdef u64 T = 0, R, tt
    cdef int j
    cdef double s = 0.0, c = 0.0, prod, term, tot
    while True:
        T = (T - S) & S
        if T == 0:
            break
        R = S ^ T
        prod = 1.0
        tt = T
        while tt:
            j = bn_ctz(tt)
            prod = prod * A[j * half + del_bit(R, j)]
            tt &= tt - 1
        term = H[R] * prod
        if not (bn_popcount(T) & 1):
            term = -term
        tot = s + term
        if fabs(s) >= fabs(term):
            c += (s - tot) + term
        else:
            c += (term - tot) + s
        s = tot
    return s + c


cdef double h_entry_wide(u64 S, const double* W, int n, const double* H) noexcept nogil:
    # same sum as h_entry, reading A_j(R) from W[R * n + j]
    cdef u64 T = 0, R, tt
    cdef const double* row
    cdef double s = 0.0, c = 0.0, prod, term, tot
    while True:
        T = (T - S) & S
        if T == 0:
            break
        R = S ^ T
        row = W + R * n
        prod = 1.0
        tt = T
        while tt:
            prod = prod * row[bn_ctz(tt)]
            tt &= tt - 1
        term = H[R] * prod
        if not (bn_popcount(T) & 1):
            term = -term
        tot = s + term
        if fabs(s) >= fabs(term):
            c += (s - tot) + term
        else:
            c += (term - tot) + s
        s = tot
    return s + c


cdef double k_entry(u64 U, u64 W, const double* A, u64 half,
                    const double* RR, double* buf, double* a) noexcept nogil:
    cdef u64 rest = W, T = 0, t, top
    cdef int b = 0, j
    cdef double s = 0.0, c = 0.0, term, tot
    while rest:
        j = bn_ctz(rest)
        a[b] = A[j * half + del_bit(U, j)]
        rest &= rest - 1
        b += 1
    top = (<u64>1) << b
    buf[0] = 1.0
    s = RR[W] * buf[0]
    t = 1
    while t < top:
        T = (T - W) & W
        buf[t] = a[bn_ctz(t)] * buf[t & (t - 1)]
        term = RR[W ^ T] * buf[t]
        if bn_popcount(t) & 1:
            term = -term
        tot = s + term
        if fabs(s) >= fabs(term):
            c += (s - tot) + term
        else:
            c += (term - tot) + s
        s = tot
        t += 1
    return s + c


def rr_table(const double[:, ::1] A, int n, const u64[::1] order, const Py_ssize_t[::1] starts, int threads=1):
    cdef u64 full = ((<u64>1) << n) - 1
    cdef u64 half = (<u64>1) << (n - 1) if n > 0 else 1
    cdef double[::1] RR = np.zeros((<u64>1) << n)
    cdef double* rr = &RR[0]
    cdef const double* ap = &A[0, 0]
    cdef double* buf
    cdef Py_ssize_t idx, lo, hi
    cdef int layer
    rr[0] = 1.0
    for layer in range(1, n + 1):
        lo = starts[layer]
        hi = starts[layer + 1]
        with nogil, parallel(num_threads=threads):
            buf = <double*> malloc((((<u64>1) << layer) + 64) * sizeof(double))
            for idx in prange(lo, hi, schedule="static"):
                rr[order[idx]] = rr_entry(order[idx], full, ap, half, rr,
                                          buf, buf + ((<u64>1) << layer))
            free(buf)
    return np.asarray(RR)


def h_table(const double[:, ::1] A, int n, const u64[::1] order, const Py_ssize_t[::1] starts,
            int threads=1, bint wide=True):
    """H by popcount layers; ``wide`` reads factors from an interleaved copy of A."""
    cdef u64 half = (<u64>1) << (n - 1) if n > 0 else 1
    cdef u64 size = (<u64>1) << n
    cdef double[::1] H = np.zeros(size)
    cdef double* hp = &H[0]
    cdef const double* ap = &A[0, 0]
    cdef double* W = NULL
    cdef u64 R
    cdef Py_ssize_t idx, lo, hi
    cdef int layer, j
    hp[0] = 1.0
    if n == 0:
        return np.asarray(H)
    if wide:
        W = <double*> malloc(size * n * sizeof(double))
    if W != NULL:
        with nogil:
            for R in range(size):
                for j in range(n):
                    W[R * n + j] = 0.0 if (R >> j) & 1 else ap[j * half + del_bit(R, j)]
    try:
        for layer in range(1, n + 1):
            lo = starts[layer]
            hi = starts[layer + 1]
            with nogil:
                if W != NULL:
                    for idx in prange(lo, hi, schedule="static", num_threads=threads):
                        hp[order[idx]] = h_entry_wide(order[idx], W, n, hp)
                else:
                    for idx in prange(lo, hi, schedule="static", num_threads=threads):
                        hp[order[idx]] = h_entry(order[idx], ap, half, hp)
    finally:
        free(W)
    return np.asarray(H)


def k_table(int v, const double[:, ::1] A, const double[::1] RR, int n, int threads=1):
    """K_v over subsets of V - {v}, indexed with bit v deleted."""
    cdef u64 half = (<u64>1) << (n - 1)
    cdef u64 rest_v = (((<u64>1) << n) - 1) ^ ((<u64>1) << v)
    cdef double[::1] K = np.zeros(half)
    cdef double* kp = &K[0]
    cdef const double* ap = &A[0, 0]
    cdef const double* rr = &RR[0]
    cdef double* buf
    cdef Py_ssize_t u
    cdef u64 U
    with nogil, parallel(num_threads=threads):
        buf = <double*> malloc((half + 64) * sizeof(double))
        for u in prange(<Py_ssize_t> half, schedule="dynamic", chunksize=64):
            U = ins_bit(<u64> u, v)
            kp[u] = k_entry(U, rest_v & ~U, ap, half, rr, buf, buf + half)
        free(buf)
    return np.asarray(K)
