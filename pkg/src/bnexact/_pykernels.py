"""Pure-Python subset-lattice kernels.

Used when the compiled extension is unavailable. The loops repeat the
compiled kernels' floating-point operations in the same order, so results
agree bit for bit; ``threads`` is accepted and ignored.
"""

from __future__ import annotations

import numpy as np


def _ctz(x: int) -> int:
    return (x & -x).bit_length() - 1


def _del_bit(x: int, j: int) -> int:
    low = (1 << j) - 1
    return (x & low) | ((x >> (j + 1)) << j)


def _ins_bit(x: int, j: int) -> int:
    low = (1 << j) - 1
    return (x & low) | ((x & ~low) << 1)


def _nsum(terms) -> float:
    s = 0.0
    c = 0.0
    for x in terms:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


def subset_sum_(a: np.ndarray) -> None:
    size = a.shape[0]
    step = 1
    while step < size:
        view = a.reshape(-1, 2, step)
        view[:, 1, :] += view[:, 0, :]
        step <<= 1


def superset_sum_(a: np.ndarray) -> None:
    size = a.shape[0]
    step = 1
    while step < size:
        view = a.reshape(-1, 2, step)
        view[:, 0, :] += view[:, 1, :]
        step <<= 1


def _rr_terms(S, comp, A, RR):
    a = []
    rest = S
    while rest:
        j = _ctz(rest)
        a.append(A[j][_del_bit(comp, j)])
        rest &= rest - 1
    buf = [1.0] * (1 << len(a))
    T = 0
    for t in range(1, len(buf)):
        T = (T - S) & S
        buf[t] = a[_ctz(t)] * buf[t & (t - 1)]
        term = RR[S ^ T] * buf[t]
        yield term if bin(t).count("1") & 1 else -term


def rr_table(A, n, order=None, starts=None, threads=1):
    full = (1 << n) - 1
    Al = A.tolist()
    RR = [0.0] * (1 << n)
    RR[0] = 1.0
    for S in range(1, 1 << n):
        RR[S] = _nsum(_rr_terms(S, full ^ S, Al, RR))
    return np.array(RR)


def _h_terms(S, A, H):
    T = 0
    while True:
        T = (T - S) & S
        if T == 0:
            return
        R = S ^ T
        prod = 1.0
        tt = T
        while tt:
            j = _ctz(tt)
            prod = prod * A[j][_del_bit(R, j)]
            tt &= tt - 1
        term = H[R] * prod
        yield term if bin(T).count("1") & 1 else -term


def h_table(A, n, order=None, starts=None, threads=1, wide=True):
    Al = A.tolist()
    H = [0.0] * (1 << n)
    H[0] = 1.0
    for S in range(1, 1 << n):
        H[S] = _nsum(_h_terms(S, Al, H))
    return np.array(H)


def _k_terms(U, W, A, RR):
    a = []
    rest = W
    while rest:
        j = _ctz(rest)
        a.append(A[j][_del_bit(U, j)])
        rest &= rest - 1
    buf = [1.0] * (1 << len(a))
    yield RR[W] * buf[0]
    T = 0
    for t in range(1, len(buf)):
        T = (T - W) & W
        buf[t] = a[_ctz(t)] * buf[t & (t - 1)]
        term = RR[W ^ T] * buf[t]
        yield -term if bin(t).count("1") & 1 else term


def k_table(v, A, RR, n, threads=1):
    half = 1 << (n - 1)
    rest_v = ((1 << n) - 1) ^ (1 << v)
    Al = A.tolist()
    RRl = RR.tolist()
    K = [0.0] * half
    for u in range(half):
        U = _ins_bit(u, v)
        K[u] = _nsum(_k_terms(U, rest_v & ~U, Al, RRl))
    return np.array(K)
