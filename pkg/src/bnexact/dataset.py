"""Complete discrete datasets and family sufficient statistics.

Input is a plain comma-separated file with a header row. Each column is
treated as categorical; codes are assigned in order of first appearance,
so the encoding is a deterministic function of the input bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CompleteDataViolation, InvalidFamily, SchemaError


@dataclass(frozen=True)
class Dataset:
    """Immutable categorical data matrix.

    ``data`` has shape ``(m, n)`` and holds integer codes, column ``i``
    taking values in ``range(arities[i])``. ``categories[i]`` maps a code
    back to the original label (labels for declared-but-unobserved
    categories are absent).
    """

    variable_names: tuple[str, ...]
    arities: tuple[int, ...]
    data: np.ndarray
    categories: tuple[tuple[str, ...], ...] = field(default=(), compare=False)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.int64)
        if data.ndim != 2:
            raise SchemaError("data must be a 2-D array")
        n = len(self.variable_names)
        if n < 1:
            raise SchemaError("a dataset needs at least one variable")
        if data.shape[1] != n and not (data.shape[0] == 0 and data.size == 0):
            raise SchemaError(f"data has {data.shape[1]} columns, expected {n}")
        if data.shape[0] == 0:
            data = data.reshape(0, n)
        if len(self.arities) != n:
            raise SchemaError("one arity per variable is required")
        if len(set(self.variable_names)) != n:
            raise SchemaError("duplicate variable names")
        for i, r in enumerate(self.arities):
            if r < 1:
                raise SchemaError(f"arity of {self.variable_names[i]!r} must be >= 1")
            if data.shape[0] and (data[:, i].min() < 0 or data[:, i].max() >= r):
                raise CompleteDataViolation(
                    f"column {self.variable_names[i]!r} has codes outside [0, {r})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "arities", tuple(int(r) for r in self.arities))
        object.__setattr__(self, "variable_names", tuple(self.variable_names))

    @property
    def n(self) -> int:
        return len(self.variable_names)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> np.ndarray:
        return self.data

    def index(self, name: str) -> int:
        try:
            return self.variable_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown variable {name!r}") from None

    def canonical_bytes(self) -> bytes:
        """Re-serialised CSV of the encoded data (header, arities, codes)."""
        lines = [",".join(self.variable_names), ",".join(map(str, self.arities))]
        lines.extend(",".join(map(str, row)) for row in self.data.tolist())
        return ("\n".join(lines) + "\n").encode("utf-8")

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()

    @classmethod
    def from_codes(cls, data, arities=None, names=None) -> "Dataset":
        """Build a dataset from an integer array; arities default to max+1."""
        data = np.asarray(data, dtype=np.int64)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        n = data.shape[1]
        if names is None:
            names = [f"X{i}" for i in range(n)]
        if arities is None:
            arities = [int(data[:, i].max()) + 1 if len(data) else 1 for i in range(n)]
        return cls(tuple(names), tuple(arities), data)


@dataclass(frozen=True)
class FamilyCounts:
    node: int
    parent_set: int
    q: int
    counts: np.ndarray  # (q, r_node)

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def _split(line: str, lineno: int) -> list[str]:
    if '"' in line:
        raise SchemaError(f"line {lineno}: quoted fields are not supported")
    return [cell.strip() for cell in line.split(",")]


def load_dataset(source, declared_arities: Mapping[str, int] | None = None) -> Dataset:
    """Parse CSV text (a string, a path, or a text stream) into a Dataset.

    ``declared_arities`` maps a variable name to its domain size, which may
    exceed the number of distinct values seen in the data.
    """
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()

    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise SchemaError("missing header row")
    header = _split(lines[0], 1)
    if any(not name for name in header):
        raise SchemaError("empty variable name in header")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise SchemaError(f"duplicate header names: {dupes}")
    n = len(header)

    lookups: list[dict[str, int]] = [{} for _ in range(n)]
    codes = np.empty((len(lines) - 1, n), dtype=np.int64)
    for r, line in enumerate(lines[1:]):
        lineno = r + 2
        cells = _split(line, lineno)
        if len(cells) < n:
            raise CompleteDataViolation(f"line {lineno}: expected {n} fields, got {len(cells)}")
        if len(cells) > n:
            raise SchemaError(f"line {lineno}: expected {n} fields, got {len(cells)}")
        for i, cell in enumerate(cells):
            if not cell:
                raise CompleteDataViolation(
                    f"line {lineno}: blank value for {header[i]!r}")
            codes[r, i] = lookups[i].setdefault(cell, len(lookups[i]))

    declared = dict(declared_arities or {})
    unknown = set(declared) - set(header)
    if unknown:
        raise SchemaError(f"arities declared for unknown variables: {sorted(unknown)}")
    arities = []
    for i, name in enumerate(header):
        observed = max(len(lookups[i]), 1)
        r = declared.get(name, observed)
        if not isinstance(r, int) or r < observed:
            raise SchemaError(
                f"declared arity {r!r} for {name!r} is below the {observed} observed categories")
        arities.append(r)
    cats = tuple(tuple(lk) for lk in lookups)
    return Dataset(tuple(header), tuple(arities), codes, cats)


def load_arities(path) -> dict[str, int]:
    """Read a sidecar ``{"arities": {name: int}}`` JSON file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or not isinstance(doc.get("arities"), dict):
        raise SchemaError("arity sidecar must look like {\"arities\": {\"name\": int}}")
    return doc["arities"]


def _parents_list(ds: Dataset, node: int, parents) -> list[int]:
    if isinstance(parents, (int, np.integer)):
        plist = [j for j in range(ds.n) if (int(parents) >> j) & 1]
        if int(parents) >> ds.n:
            raise InvalidFamily(f"parent mask {parents:#x} has bits beyond n={ds.n}")
    else:
        plist = sorted(set(int(p) for p in parents))
    if not 0 <= node < ds.n:
        raise InvalidFamily(f"node {node} out of range")
    if node in plist:
        raise InvalidFamily(f"node {node} cannot be its own parent")
    if plist and (plist[0] < 0 or plist[-1] >= ds.n):
        raise InvalidFamily("parent index out of range")
    return plist


def config_index(ds: Dataset, parents: Sequence[int]) -> np.ndarray:
    """Mixed-radix parent configuration code of every row.

    Parents are taken in ascending index order with the lowest index as the
    most significant digit (numpy C order).
    """
    idx = np.zeros(ds.m, dtype=np.int64)
    for p in parents:
        idx = idx * ds.arities[p] + ds.data[:, p]
    return idx


def family_counts(ds: Dataset, node: int, parents) -> FamilyCounts:
    """Dense ``q x r`` table of N_ijk for ``node`` given ``parents``.

    ``parents`` is either a bitmask or an iterable of indices.
    """
    plist = _parents_list(ds, node, parents)
    q = 1
    for p in plist:
        q *= ds.arities[p]
    r = ds.arities[node]
    cfg = config_index(ds, plist)
    flat = np.bincount(cfg * r + ds.data[:, node], minlength=q * r)
    mask = sum(1 << p for p in plist)
    return FamilyCounts(node, mask, q, flat.reshape(q, r))


def observed_counts(ds: Dataset, node: int, plist: Iterable[int]):
    """Nonzero N_ij and N_ijk only, plus q.

    Avoids materialising the dense table when q is large; unobserved
    configurations contribute nothing to a Dirichlet marginal likelihood.
    """
    plist = list(plist)
    q = 1
    for p in plist:
        q *= ds.arities[p]
    r = ds.arities[node]
    if ds.m == 0:
        return q, np.zeros(0, np.int64), np.zeros(0, np.int64)
    if q * r <= max(4 * ds.m, 1 << 16):
        cfg = config_index(ds, plist)
        nijk = np.bincount(cfg * r + ds.data[:, node], minlength=q * r)
        nij = nijk.reshape(q, r).sum(axis=1)
    else:
        cols = plist + [node]
        _, nijk = np.unique(ds.data[:, cols], axis=0, return_counts=True)
        if plist:
            _, nij = np.unique(ds.data[:, plist], axis=0, return_counts=True)
        else:
            nij = np.array([ds.m])
    return q, nij[nij > 0], nijk[nijk > 0]
