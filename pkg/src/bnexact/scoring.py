"""BDe local scores in the natural-log domain.

Hyperparameters follow the uniform Dirichlet split: every cell of node i's
conditional table under a parent set with q configurations gets
``alpha_ijk = 1 / (r_i * q)``, so ``alpha_ij = 1 / q``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
from scipy.special import gammaln

from .dataset import Dataset, _parents_list, observed_counts
from .errors import ConfigError, SchemaError


def bde_log_score(ds: Dataset, node: int, parents) -> float:
    plist = _parents_list(ds, node, parents)
    q, nij, nijk = observed_counts(ds, node, plist)
    if nij.size == 0:
        return 0.0
    r = ds.arities[node]
    a_ij = 1.0 / q
    a_ijk = 1.0 / (r * q)
    s = gammaln(a_ij) * nij.size - gammaln(a_ij + nij).sum()
    s += gammaln(a_ijk + nijk).sum() - gammaln(a_ijk) * nijk.size
    return float(s)


def family_masks(n: int, node: int, k: int) -> np.ndarray:
    """Parent-set bitmasks of ``node`` with at most ``k`` members.

    Ordered by popcount, then by numeric mask value.
    """
    others = [j for j in range(n) if j != node]
    out = []
    for c in range(min(k, n - 1) + 1):
        out.extend(sorted(sum(1 << j for j in combo) for combo in combinations(others, c)))
    return np.array(out, dtype=np.int64)


def family_count(n: int, k: int) -> int:
    return sum(comb(n - 1, c) for c in range(min(k, n - 1) + 1))


@dataclass(frozen=True)
class LocalScoreTable:
    node: int
    max_indegree: int
    parents: np.ndarray  # int64 full-width masks
    log_scores: np.ndarray

    def __len__(self):
        return len(self.parents)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.parents.tolist(), self.log_scores.tolist()))


def check_indegree(n: int, k: int) -> int:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or not 0 <= k <= n - 1:
        raise ConfigError(f"max indegree must lie in [0, {n - 1}], got {k!r}")
    return int(k)


def build_score_tables(ds: Dataset, k: int) -> list[LocalScoreTable]:
    k = check_indegree(ds.n, k)
    tables = []
    for i in range(ds.n):
        masks = family_masks(ds.n, i, k)
        scores = np.array([bde_log_score(ds, i, int(pm)) for pm in masks])
        tables.append(LocalScoreTable(i, k, masks, scores))
    return tables


def tables_from_arrays(n: int, k: int, log_scores) -> list[LocalScoreTable]:
    """Tables over the standard family order from per-node score arrays.

    Handy for feeding synthetic log weights to the engine and the oracle.
    """
    tables = []
    for i in range(n):
        masks = family_masks(n, i, k)
        vals = np.asarray(log_scores[i], dtype=float)
        if vals.shape != masks.shape:
            raise SchemaError(f"node {i}: expected {masks.size} scores, got {vals.size}")
        tables.append(LocalScoreTable(i, k, masks, vals))
    return tables


def save_score_cache(path, tables: list[LocalScoreTable], ds: Dataset) -> None:
    doc = {
        "n": ds.n,
        "k": tables[0].max_indegree if tables else 0,
        "dataset_fingerprint": ds.fingerprint(),
        "tables": [
            {
                "node": t.node,
                "entries": [{"parents": int(p), "log_score": float(s)}
                            for p, s in zip(t.parents, t.log_scores)],
            }
            for t in tables
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_score_cache(path, ds: Dataset, k: int) -> list[LocalScoreTable] | None:
    """Return cached tables if they match ``ds`` and ``k``, else None."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError):
        return None
    if doc.get("n") != ds.n or doc.get("k") != k or doc.get("dataset_fingerprint") != ds.fingerprint():
        return None
    tables = []
    for t in sorted(doc["tables"], key=lambda t: t["node"]):
        masks = np.array([e["parents"] for e in t["entries"]], dtype=np.int64)
        vals = np.array([e["log_score"] for e in t["entries"]], dtype=float)
        tables.append(LocalScoreTable(int(t["node"]), k, masks, vals))
    return tables
