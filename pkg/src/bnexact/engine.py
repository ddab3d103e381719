"""Exact feature and edge posteriors by dynamic programming over subsets.

Tables (all masks are full-width unless noted):

``A[i, s]``
    Sum of node i's family weights over parent sets inside ``s``. The
    second index is compressed: bit i deleted from the mask.
``RR[S]``
    Weighted sum over DAGs in which every node outside ``S`` is a root;
    built by inclusion-exclusion over the nodes of ``S`` with no parent
    in ``S``.
``H[S]``
    Weighted sum over DAGs on ``S`` alone; built by inclusion-exclusion
    over sinks.
``K_v[u]``
    Per-sink correction term, ``u`` compressed over ``V - {v}``.

``RR[V]`` and ``H[V]`` are two independent routes to the same number,
P(f, D) up to the recorded log shifts, and every run compares them.
"""

from __future__ import annotations

import logging
import math
import os
import struct
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .errors import CapExceeded, NumericalBreakdown
from .model import Bfunction, FeatureSpec, assemble_B
from .scoring import LocalScoreTable

log = logging.getLogger(__name__)

MAX_N = 25
BREAKDOWN_GAP = 1e-6
TABLE_IDS = {"RR": 0, "H": 1}


def del_bit(x, j: int):
    """Delete bit ``j`` from ``x`` (scalar or int array), shifting higher bits down."""
    low = (1 << j) - 1
    return (x & low) | ((x >> (j + 1)) << j)


def ins_bit(x, j: int):
    """Inverse of :func:`del_bit`: open a zero at bit ``j``."""
    low = (1 << j) - 1
    return (x & low) | ((x & ~low) << 1)


@lru_cache(maxsize=8)
def popcount_layers(n: int):
    """All masks of ``n`` bits grouped by popcount, and the group offsets."""
    masks = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        pc += (masks >> b) & 1
    order = np.argsort(pc, kind="stable").astype(np.uint64)
    starts = np.zeros(n + 2, dtype=np.intp)
    starts[1:] = np.cumsum(np.bincount(pc, minlength=n + 1))
    order.setflags(write=False)
    starts.setflags(write=False)
    return order, starts


def memory_estimate(n: int, threads: int = 1) -> int:
    """Rough peak bytes for an all-edges run."""
    half = 1 << max(n - 1, 0)
    floats = n * half + 2 * (1 << n) + 4 * half + threads * ((1 << n) + half)
    ints = (1 << n) * 16 + half * 8
    return 8 * floats + ints


def physical_memory() -> int | None:
    try:
        return os.sysconf("SC_PHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def wide_h_fits(n: int, threads: int = 1) -> bool:
    """Whether the interleaved copy of A used by the H kernel (n * 2^n doubles) fits too."""
    have = physical_memory()
    return have is None or memory_estimate(n, threads) + 8 * n * (1 << n) <= have


def check_size(n: int, threads: int = 1) -> None:
    if n > MAX_N:
        raise CapExceeded(f"n={n} exceeds the supported maximum of {MAX_N} variables")
    need = memory_estimate(n, threads)
    have = physical_memory()
    if have is None:
        return
    if need > have:
        raise CapExceeded(f"n={n} needs about {need / 2**30:.1f} GiB, machine has {have / 2**30:.1f} GiB")


def upward_mobius(node: int, parents: np.ndarray, values: np.ndarray, n: int, backend=None) -> np.ndarray:
    """A_node over every subset of V - {node} (compressed indexing)."""
    kern = kernels.get(backend)
    a = np.zeros(1 << (n - 1))
    if len(parents):
        np.add.at(a, del_bit(np.asarray(parents, dtype=np.int64), node), values)
    kern.subset_sum_(a)
    return a


def compute_A(B: Bfunction, backend=None) -> np.ndarray:
    return np.stack([upward_mobius(i, B.parents[i], B.values[i], B.n, backend)
                     for i in range(B.n)])


def compute_RR(A: np.ndarray, threads: int = 1, backend=None) -> np.ndarray:
    n = A.shape[0]
    order, starts = popcount_layers(n)
    return kernels.get(backend).rr_table(np.ascontiguousarray(A), n, order, starts, threads)


def compute_H(A: np.ndarray, threads: int = 1, backend=None) -> np.ndarray:
    n = A.shape[0]
    order, starts = popcount_layers(n)
    return kernels.get(backend).h_table(np.ascontiguousarray(A), n, order, starts, threads,
                                        wide_h_fits(n, threads))


def compute_K(v: int, RR: np.ndarray, A: np.ndarray, threads: int = 1, backend=None) -> np.ndarray:
    n = A.shape[0]
    return kernels.get(backend).k_table(v, np.ascontiguousarray(A), RR, n, threads)


def sink_masks(v: int, n: int) -> np.ndarray:
    """Full-width masks of all subsets of V - {v}, in compressed order."""
    return ins_bit(np.arange(1 << (n - 1), dtype=np.int64), v)


def compute_Gamma(v: int, H: np.ndarray, K: np.ndarray, parents=None, backend=None) -> np.ndarray:
    """Superset sums of H*K_v over subsets of V - {v}.

    Runs the full downward transform; with ``parents`` given, returns only
    the entries at those (full-width) parent masks.
    """
    n = int(H.shape[0]).bit_length() - 1
    g = H[sink_masks(v, n)] * K
    kernels.get(backend).superset_sum_(g)
    if parents is None:
        return g
    return g[del_bit(np.asarray(parents, dtype=np.int64), v)]


def relative_gap(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def _check_evidence(rr: float, h: float) -> float:
    if not math.isfinite(rr) or rr <= 0.0:
        raise NumericalBreakdown(f"RR(V)={rr!r} is not a positive finite number")
    gap = relative_gap(rr, h)
    if not gap <= BREAKDOWN_GAP:
        raise NumericalBreakdown(
            f"RR(V)={rr!r} and H(V)={h!r} disagree (relative gap {gap:.3g})")
    return gap


def dump_table(path, table: np.ndarray, n: int, k: int, table_id: str) -> None:
    """Header of three little-endian uint32 (n, k, table id), then float64 values."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<III", n, k, TABLE_IDS[table_id]))
        fh.write(np.asarray(table, dtype="<f8").tobytes())


def read_table_dump(path):
    with open(path, "rb") as fh:
        n, k, tid = struct.unpack("<III", fh.read(12))
        values = np.frombuffer(fh.read(), dtype="<f8")
    return n, k, tid, values


@dataclass
class PosteriorMatrix:
    edges: np.ndarray
    log_evidence: float
    rr: float
    h: float
    rr_h_relative_gap: float
    sink_gaps: np.ndarray = field(repr=False)  # per v, sum A_v*H*K_v against RR(V)
    gamma_gaps: np.ndarray = field(repr=False)  # per v, sum B_v*Gamma_v against RR(V)
    timings: dict = field(default_factory=dict)


def all_edge_posteriors(B: Bfunction, threads: int = 1, backend=None,
                        dump_prefix=None) -> PosteriorMatrix:
    """Posterior of every directed edge u -> v in one pass.

    ``B`` must be assembled with the constant feature.
    """
    n = B.n
    check_size(n, threads)
    t0 = time.perf_counter()
    A = compute_A(B, backend)
    t1 = time.perf_counter()
    RR = compute_RR(A, threads, backend)
    t2 = time.perf_counter()
    H = compute_H(A, threads, backend)
    t3 = time.perf_counter()
    full = (1 << n) - 1
    rr, h = float(RR[full]), float(H[full])
    gap = _check_evidence(rr, h)
    if dump_prefix is not None:
        dump_table(f"{dump_prefix}.rr.bin", RR, n, B.k, "RR")
        dump_table(f"{dump_prefix}.h.bin", H, n, B.k, "H")

    joint = np.zeros((n, n))
    sink_gaps = np.zeros(n)
    gamma_gaps = np.zeros(n)
    for v in range(n):
        K = compute_K(v, RR, A, threads, backend)
        g = H[sink_masks(v, n)] * K
        sink_gaps[v] = relative_gap(math.fsum((A[v] * g).tolist()), rr)
        kernels.get(backend).superset_sum_(g)
        parents = B.parents[v]
        w = B.values[v] * g[del_bit(parents, v)]
        gamma_gaps[v] = relative_gap(math.fsum(w.tolist()), rr)
        for u in range(n):
            if u != v:
                joint[u, v] = math.fsum(w[(parents >> u) & 1 == 1].tolist())
        del K, g
    t4 = time.perf_counter()
    worst = float(max(sink_gaps.max(initial=0.0), gamma_gaps.max(initial=0.0)))
    if worst > BREAKDOWN_GAP:
        raise NumericalBreakdown(f"per-sink decomposition off by relative {worst:.3g}")
    log.debug("A %.3fs RR %.3fs H %.3fs sinks %.3fs", t1 - t0, t2 - t1, t3 - t2, t4 - t3)
    return PosteriorMatrix(
        edges=joint / rr,
        log_evidence=math.log(rr) + B.log_offset(),
        rr=rr, h=h, rr_h_relative_gap=gap,
        sink_gaps=sink_gaps, gamma_gaps=gamma_gaps,
        timings={"A": t1 - t0, "RR": t2 - t1, "H": t3 - t2, "sinks": t4 - t3, "total": t4 - t0},
    )


@dataclass
class FeatureResult:
    posterior: float
    log_joint: float  # log P(f, D)
    log_evidence: float
    rr_h_relative_gap: float


def joint_RR(B: Bfunction, threads: int = 1, backend=None, verify: bool = True):
    """(RR(V), H(V) or None) for an assembled B."""
    check_size(B.n, threads)
    A = compute_A(B, backend)
    full = (1 << B.n) - 1
    rr = float(compute_RR(A, threads, backend)[full])
    h = float(compute_H(A, threads, backend)[full]) if verify else None
    return rr, h


def feature_joint(feature: FeatureSpec, scores: Sequence[LocalScoreTable], prior: str = "uniform",
                  k: int | None = None, threads: int = 1, backend=None,
                  verify: bool = True) -> FeatureResult:
    base = assemble_B(scores, prior, None, k)
    rr1, h1 = joint_RR(base, threads, backend, verify)
    gap = _check_evidence(rr1, h1) if verify else 0.0
    if feature.is_constant:
        rrf = rr1
    else:
        feat = assemble_B(scores, prior, feature, base.k, shifts=base.shifts)
        rrf, hf = joint_RR(feat, threads, backend, verify)
        if verify and rrf > 0.0:
            fgap = relative_gap(rrf, hf)
            if fgap > BREAKDOWN_GAP:
                raise NumericalBreakdown(f"feature run: RR and H disagree by relative {fgap:.3g}")
            gap = max(gap, fgap)
    offset = base.log_offset()
    return FeatureResult(
        posterior=rrf / rr1,
        log_joint=(math.log(rrf) if rrf > 0 else -math.inf) + offset,
        log_evidence=math.log(rr1) + offset,
        rr_h_relative_gap=gap,
    )


def feature_posterior(feature: FeatureSpec, scores: Sequence[LocalScoreTable], prior: str = "uniform",
                      k: int | None = None, threads: int = 1, backend=None,
                      verify: bool = True) -> float:
    """P(f | D) through a single root-side recursion per feature."""
    return feature_joint(feature, scores, prior, k, threads, backend, verify).posterior


def log_evidence(scores: Sequence[LocalScoreTable], prior: str = "uniform", k: int | None = None,
                 threads: int = 1, backend=None) -> tuple[float, float]:
    """(log P(D), RR/H relative gap). The uniform prior is left unnormalised."""
    B = assemble_B(scores, prior, None, k)
    rr, h = joint_RR(B, threads, backend, verify=True)
    gap = _check_evidence(rr, h)
    return math.log(rr) + B.log_offset(), gap
