"""Brute-force ground truth by enumerating every DAG.

Graphs are generated as per-node parent-set assignments, node by node,
discarding partial assignments that already contain a directed cycle
(checked with a vectorised Kahn peel). Nothing here shares code with the
dynamic programme in :mod:`bnexact.engine`.
"""

from __future__ import annotations

import math
from itertools import combinations
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .errors import CapExceeded, ConfigError
from .model import FeatureSpec

MAX_N = 6
CHUNK = 1 << 18


def robinson(n: int) -> int:
    """Number of labelled DAGs on ``n`` nodes (Robinson's recurrence)."""
    a = [1]
    for size in range(1, n + 1):
        a.append(sum((-1) ** (j + 1) * comb(size, j) * 2 ** (j * (size - j)) * a[size - j]
                     for j in range(1, size + 1)))
    return a[n]


def _parent_choices(n: int, node: int, k: int) -> np.ndarray:
    others = [j for j in range(n) if j != node]
    out = [sum(1 << j for j in c) for size in range(k + 1) for c in combinations(others, size)]
    return np.array(out, dtype=np.int64)


def _acyclic(parents: np.ndarray) -> np.ndarray:
    """Row-wise acyclicity test for a (graphs, n) array of parent masks."""
    count, n = parents.shape
    remaining = np.full(count, (1 << n) - 1, dtype=np.int64)
    for _ in range(n):
        removable = np.zeros(count, dtype=np.int64)
        for j in range(n):
            free = ((parents[:, j] & remaining) == 0) & ((remaining >> j) & 1 == 1)
            removable |= free.astype(np.int64) << j
        if not removable.any():
            break
        remaining &= ~removable
    return remaining == 0


def enumerate_dags(n: int, k: int | None = None) -> Iterator[np.ndarray]:
    """Yield chunks of DAGs as (count, n) int64 arrays of parent masks."""
    if n > MAX_N:
        raise CapExceeded(f"DAG enumeration is capped at n={MAX_N}, got n={n}")
    if n < 1:
        raise ConfigError("need at least one node")
    k = n - 1 if k is None else min(k, n - 1)
    choices = [_parent_choices(n, i, k) for i in range(n)]

    def extend(prefix: np.ndarray, node: int) -> Iterator[np.ndarray]:
        # prefix: (c, n) with nodes >= node still parentless
        opts = choices[node]
        step = max(1, CHUNK // len(opts))
        for lo in range(0, len(prefix), step):
            block = np.repeat(prefix[lo:lo + step], len(opts), axis=0)
            block[:, node] = np.tile(opts, min(step, len(prefix) - lo))
            block = block[_acyclic(block)]
            if node == n - 1:
                if len(block):
                    yield block
            else:
                yield from extend(block, node + 1)

    yield from extend(np.zeros((1, n), dtype=np.int64), 0)


def count_dags(n: int, k: int | None = None) -> int:
    """Exact DAG count; enumerates for n <= 6, else Robinson (unbounded only)."""
    if n <= MAX_N:
        return sum(len(chunk) for chunk in enumerate_dags(n, k))
    if k is None or k >= n - 1:
        if n > 8:
            raise CapExceeded(f"count_dags is capped at n=8, got n={n}")
        return robinson(n)
    raise CapExceeded(f"bounded DAG counts are only enumerated up to n={MAX_N}")


def _family_lookup(n, weights_by_node):
    """Dense per-node arrays over all 2^n masks; -inf marks disallowed families."""
    out = []
    for i in range(n):
        arr = np.full(1 << n, -np.inf)
        for mask, w in weights_by_node[i].items():
            arr[mask] = w
        out.append(arr)
    return out


def _prior_log(kind: str, n: int, mask: int) -> float:
    kind = kind.replace("-", "_")
    if kind == "uniform":
        return 0.0
    if kind == "order_modular":
        return -math.log(comb(n - 1, bin(mask).count("1")))
    raise ConfigError(f"unknown prior {kind!r}")


class _Accumulator:
    """Chunked log-sum-exp: each chunk reduced against its own max, then merged."""

    def __init__(self):
        self.parts = []  # (chunk max, per-chunk scaled sums)

    def add(self, logw: np.ndarray, indicators: np.ndarray | None = None):
        if not len(logw):
            return
        top = float(logw.max())
        scaled = np.exp(logw - top)
        sums = [math.fsum(scaled.tolist())]
        if indicators is not None:
            sums.extend(math.fsum(scaled[col].tolist()) for col in indicators)
        self.parts.append((top, sums))

    def totals(self, width: int):
        """(global max, list of summed exp(logw - max))."""
        if not self.parts:
            return -math.inf, [0.0] * width
        top = max(p[0] for p in self.parts)
        cols = []
        for c in range(width):
            cols.append(math.fsum(s[c] * math.exp(m - top) for m, s in self.parts))
        return top, cols


def _log_weights(chunk, lookups):
    lw = np.zeros(len(chunk))
    for i, table in enumerate(lookups):
        lw += table[chunk[:, i]]
    return lw


def _node_log_weights(scores, prior, n):
    out = []
    for t in scores:
        out.append({int(p): float(s) + _prior_log(prior, n, int(p))
                    for p, s in zip(t.parents, t.log_scores)})
    return out


def _prepare(scores, prior, k):
    n = len(scores)
    if n > MAX_N:
        raise CapExceeded(f"oracle is capped at n={MAX_N}, got n={n}")
    k = scores[0].max_indegree if k is None else k
    lookups = _family_lookup(n, _node_log_weights(scores, prior, n))
    return n, k, lookups


def oracle_posterior_tables(scores: Sequence, feature: FeatureSpec, prior: str = "uniform",
                            k: int | None = None) -> float:
    """P(f | D) by direct summation over every DAG within indegree ``k``."""
    n, k, lookups = _prepare(scores, prior, k)
    acc = _Accumulator()
    for chunk in enumerate_dags(n, k):
        holds = np.ones(len(chunk), dtype=bool)
        for i in range(n):
            r, f = feature.required[i], feature.forbidden[i]
            holds &= ((chunk[:, i] & r) == r) & ((chunk[:, i] & f) == 0)
        acc.add(_log_weights(chunk, lookups), [holds])
    _, (total, hit) = acc.totals(2)
    return hit / total


def oracle_edges_tables(scores: Sequence, prior: str = "uniform", k: int | None = None):
    """(n x n edge posterior matrix, log evidence) by enumeration."""
    n, k, lookups = _prepare(scores, prior, k)
    acc = _Accumulator()
    pairs = [(u, v) for v in range(n) for u in range(n) if u != v]
    for chunk in enumerate_dags(n, k):
        cols = [(chunk[:, v] >> u) & 1 == 1 for u, v in pairs]
        acc.add(_log_weights(chunk, lookups), cols)
    top, sums = acc.totals(1 + len(pairs))
    edges = np.zeros((n, n))
    for (u, v), s in zip(pairs, sums[1:]):
        edges[u, v] = s / sums[0]
    return edges, top + math.log(sums[0])


def oracle_posterior(ds, feature: FeatureSpec, prior: str = "uniform", k: int | None = None) -> float:
    from .scoring import build_score_tables

    if ds.n > MAX_N:
        raise CapExceeded(f"oracle is capped at n={MAX_N}, got n={ds.n}")
    k = ds.n - 1 if k is None else k
    return oracle_posterior_tables(build_score_tables(ds, k), feature, prior, k)
