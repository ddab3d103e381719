"""Structure priors, modular features, and the per-node weight functions.

The weight of a family is ``B_i(P) = f_i(P) * Q_i(P) * score_i(P)``. Scores
live in the log domain; each node's weights are shifted by their maximum
before exponentiating so every stored value is in [0, 1]. The shifts are
kept so the evidence can be put back together exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb, log
from typing import Sequence

import numpy as np

from .errors import InfeasibleFeatureUnderBound, InvalidFeature, SchemaError
from .scoring import LocalScoreTable

PRIORS = ("uniform", "order_modular")


def normalize_prior(kind: str) -> str:
    kind = kind.replace("-", "_")
    if kind not in PRIORS:
        raise SchemaError(f"unknown prior {kind!r}; choose from {PRIORS}")
    return kind


def prior_log_weights(kind: str, n: int, parents: np.ndarray) -> np.ndarray:
    """log Q_i for each parent mask in ``parents``."""
    kind = normalize_prior(kind)
    if kind == "uniform":
        return np.zeros(len(parents))
    sizes = [int(p).bit_count() for p in parents]
    return np.array([-log(comb(n - 1, s)) for s in sizes])


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class FeatureSpec:
    """Conjunction of per-node required / forbidden parent constraints."""

    required: tuple[int, ...]
    forbidden: tuple[int, ...]

    def __post_init__(self):
        req = tuple(int(x) for x in self.required)
        forb = tuple(int(x) for x in self.forbidden)
        if len(req) != len(forb):
            raise InvalidFeature("required and forbidden must cover the same nodes")
        n = len(req)
        for i, (r, f) in enumerate(zip(req, forb)):
            if r < 0 or f < 0 or (r | f) >> n:
                raise InvalidFeature(f"node {i}: mask refers to nodes beyond n={n}")
            if (r | f) >> i & 1:
                raise InvalidFeature(f"node {i} cannot constrain itself as a parent")
            if r & f:
                raise InvalidFeature(f"node {i}: a parent is both required and forbidden")
        object.__setattr__(self, "required", req)
        object.__setattr__(self, "forbidden", forb)

    @property
    def n(self) -> int:
        return len(self.required)

    @classmethod
    def constant(cls, n: int) -> "FeatureSpec":
        return cls((0,) * n, (0,) * n)

    @property
    def is_constant(self) -> bool:
        return not any(self.required) and not any(self.forbidden)

    def __and__(self, other: "FeatureSpec") -> "FeatureSpec":
        if self.n != other.n:
            raise InvalidFeature("features over different node counts")
        return FeatureSpec(
            tuple(a | b for a, b in zip(self.required, other.required)),
            tuple(a | b for a, b in zip(self.forbidden, other.forbidden)),
        )

    def holds(self, node: int, parents: int) -> bool:
        r = self.required[node]
        return parents & r == r and not parents & self.forbidden[node]

    def indicator(self, node: int, parents: np.ndarray) -> np.ndarray:
        r = self.required[node]
        return ((parents & r) == r) & ((parents & self.forbidden[node]) == 0)

    def max_required(self) -> int:
        return max((_popcount(r) for r in self.required), default=0)


def edge_feature(u: int, v: int, n: int) -> FeatureSpec:
    if u == v:
        raise InvalidFeature(f"self-loop {u} -> {v}")
    if not (0 <= u < n and 0 <= v < n):
        raise InvalidFeature(f"edge {u} -> {v} out of range for n={n}")
    req = [0] * n
    req[v] = 1 << u
    return FeatureSpec(tuple(req), (0,) * n)


def features_from_edges(n: int, required=(), forbidden=()) -> FeatureSpec:
    req = [0] * n
    forb = [0] * n
    for u, v in required:
        if u == v:
            raise InvalidFeature(f"self-loop {u} -> {v}")
        req[v] |= 1 << u
    for u, v in forbidden:
        if u == v:
            raise InvalidFeature(f"self-loop {u} -> {v}")
        forb[v] |= 1 << u
    return FeatureSpec(tuple(req), tuple(forb))


def load_feature(path, variable_names: Sequence[str]) -> FeatureSpec:
    """Read ``{"required_edges": [[U, V], ...], "forbidden_edges": [...]}``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return feature_from_doc(doc, variable_names)


def feature_from_doc(doc, variable_names: Sequence[str]) -> FeatureSpec:
    if not isinstance(doc, dict) or not set(doc) <= {"required_edges", "forbidden_edges"}:
        raise SchemaError("feature file must hold required_edges / forbidden_edges lists")
    index = {name: i for i, name in enumerate(variable_names)}

    def edges(key):
        out = []
        for pair in doc.get(key, []):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise SchemaError(f"{key}: each edge must be a [parent, child] pair")
            try:
                out.append((index[pair[0]], index[pair[1]]))
            except KeyError as exc:
                raise SchemaError(f"{key}: unknown variable {exc.args[0]!r}") from None
        return out

    return features_from_edges(len(variable_names), edges("required_edges"),
                               edges("forbidden_edges"))


@dataclass(frozen=True)
class Bfunction:
    """Shifted linear-domain family weights, one sparse table per node.

    ``parents[i]`` holds full-width parent masks (bit i never set) and
    ``values[i]`` the matching weights. ``shifts[i]`` is the log amount
    subtracted before exponentiating.
    """

    n: int
    k: int
    parents: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]
    shifts: np.ndarray

    @classmethod
    def from_tables(cls, n: int, k: int, tables: dict, shifts=None) -> "Bfunction":
        """Low-level constructor from ``{node: {parent_mask: value}}``.

        Families missing from a node's dict get weight 0.
        """
        parents, values = [], []
        for i in range(n):
            items = sorted(tables.get(i, {}).items(), key=lambda kv: (_popcount(kv[0]), kv[0]))
            for p, val in items:
                if p >> i & 1 or p >> n or _popcount(p) > k:
                    raise InvalidFeature(f"node {i}: parent mask {p:#x} is not a valid family")
                if not val >= 0:
                    raise InvalidFeature(f"node {i}: weights must be nonnegative")
            parents.append(np.array([p for p, _ in items], dtype=np.int64))
            values.append(np.array([v for _, v in items], dtype=float))
        if shifts is None:
            shifts = np.zeros(n)
        return cls(n, k, tuple(parents), tuple(values), np.asarray(shifts, dtype=float))

    def log_offset(self) -> float:
        return float(np.sum(self.shifts))


def log_weights(scores: Sequence[LocalScoreTable], prior: str) -> list[np.ndarray]:
    n = len(scores)
    return [t.log_scores + prior_log_weights(prior, n, t.parents) for t in scores]


def assemble_B(scores: Sequence[LocalScoreTable], prior: str = "uniform",
               feature: FeatureSpec | None = None, k: int | None = None,
               shifts=None) -> Bfunction:
    """Combine scores, prior and feature into shifted linear weights.

    ``shifts`` overrides the per-node max-shift; pass the constant-feature
    shifts when the result will be divided by a constant-feature run.
    """
    n = len(scores)
    if k is None:
        k = scores[0].max_indegree
    for t in scores:
        if t.max_indegree < k:
            raise SchemaError(f"score table for node {t.node} only covers indegree {t.max_indegree}")
    if feature is None:
        feature = FeatureSpec.constant(n)
    if feature.n != n:
        raise InvalidFeature(f"feature covers {feature.n} nodes, data has {n}")
    if feature.max_required() > k:
        raise InfeasibleFeatureUnderBound(
            f"feature requires {feature.max_required()} parents of one node but k={k}")
    lw = log_weights(scores, prior)
    keep = [np.array([int(p).bit_count() <= k for p in t.parents], dtype=bool) for t in scores]
    if shifts is None:
        shifts = np.array([float(np.max(w[kp])) for w, kp in zip(lw, keep)])
    shifts = np.asarray(shifts, dtype=float)
    parents, values = [], []
    for i, t in enumerate(scores):
        pm = t.parents[keep[i]]
        vals = np.exp(lw[i][keep[i]] - shifts[i])
        vals[~feature.indicator(i, pm)] = 0.0
        parents.append(pm)
        values.append(vals)
    return Bfunction(n, k, tuple(parents), tuple(values), shifts)
