"""Discrete observational datasets: CSV ingestion and contingency counts.

Values are 0-based category indices. Missing values are rejected at load
time; arities are inferred as (max observed + 1), clamped to at least 2,
unless a JSON schema sidecar declares them explicitly. A sidecar makes
arities reproducible across subsamples where rare categories may vanish.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MISSING_TOKENS = {"", "na", "n/a", "nan", "?", "null", "none"}

DEFAULT_CONFIG_CEILING = 10_000_000


class DataError(Exception):
    """Base class for dataset loading and counting errors."""


class EmptyFileError(DataError):
    pass


class RaggedRowsError(DataError):
    pass


class NonIntegerCellError(DataError):
    pass


class MissingValueError(DataError):
    pass


class ArityError(DataError):
    """Cell value outside the declared arity, or arity < 2 declared."""


class ConfigurationOverflowError(DataError):
    """Parent configuration space exceeds the addressable ceiling."""


@dataclass(frozen=True)
class Dataset:
    names: tuple[str, ...]
    arities: tuple[int, ...]
    rows: np.ndarray  # shape (n_rows, n_vars), dtype int64

    def __post_init__(self):
        if len(self.names) < 2:
            raise DataError("a dataset needs at least 2 variables")
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.names):
            raise DataError("rows shape does not match variable count")
        if self.rows.shape[0] < 1:
            raise DataError("a dataset needs at least 1 row")
        for k, r in enumerate(self.arities):
            if r < 2:
                raise ArityError(f"variable {self.names[k]!r} has arity {r} < 2")
            col = self.rows[:, k]
            if col.min() < 0 or col.max() >= r:
                raise ArityError(
                    f"variable {self.names[k]!r} has values outside [0, {r})"
                )
        self.rows.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown variable {name!r}") from None


def dataset_from_rows(
    rows, names: Sequence[str] | None = None, arities: Sequence[int] | None = None
) -> Dataset:
    """Build a Dataset from an array-like of category indices."""
    arr = np.asarray(rows, dtype=np.int64)
    if arr.ndim != 2:
        raise DataError("rows must be 2-dimensional")
    if arr.shape[0] < 1:
        raise DataError("a dataset needs at least 1 row")
    n_vars = arr.shape[1]
    if names is None:
        names = tuple(f"x{k}" for k in range(n_vars))
    if arities is None:
        arities = tuple(max(2, int(arr[:, k].max()) + 1) for k in range(n_vars))
    return Dataset(tuple(names), tuple(int(r) for r in arities), arr)


def load_csv(path, header: bool = True, schema=None) -> Dataset:
    """Load a rectangular CSV of non-negative integer category indices.

    ``schema`` may be a path to a JSON sidecar {"arities": {"name": 2, ...}}
    or an equivalent dict; declared arities override inference.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        raw = [row for row in csv.reader(fh)]
    raw = [row for row in raw if any(cell.strip() for cell in row)]
    if not raw:
        raise EmptyFileError(f"{path}: no data rows")

    if header:
        names = tuple(cell.strip() for cell in raw[0])
        body = raw[1:]
    else:
        names = tuple(f"x{k}" for k in range(len(raw[0])))
        body = raw
    if not body:
        raise EmptyFileError(f"{path}: header only, no data rows")

    width = len(names)
    parsed = np.empty((len(body), width), dtype=np.int64)
    for r, row in enumerate(body):
        if len(row) != width:
            raise RaggedRowsError(
                f"{path}: row {r + 1} has {len(row)} cells, expected {width}"
            )
        for c, cell in enumerate(row):
            text = cell.strip()
            if text.lower() in MISSING_TOKENS:
                raise MissingValueError(
                    f"{path}: missing value at row {r + 1}, column {names[c]!r}"
                )
            try:
                val = int(text)
            except ValueError:
                raise NonIntegerCellError(
                    f"{path}: non-integer cell {cell!r} at row {r + 1}, "
                    f"column {names[c]!r}"
                ) from None
            if val < 0:
                raise NonIntegerCellError(
                    f"{path}: negative value {val} at row {r + 1}"
                )
            parsed[r, c] = val

    declared = _load_schema(schema, names) if schema is not None else {}
    arities = []
    for k, name in enumerate(names):
        if name in declared:
            arities.append(declared[name])
        else:
            arities.append(max(2, int(parsed[:, k].max()) + 1))
    return Dataset(names, tuple(arities), parsed)


def _load_schema(schema, names) -> dict[str, int]:
    if isinstance(schema, (str, bytes)) or hasattr(schema, "__fspath__"):
        with open(schema, "r", encoding="utf-8") as fh:
            schema = json.load(fh)
    table = schema.get("arities", schema)
    declared = {}
    for name, r in table.items():
        if name not in names:
            raise DataError(f"schema declares unknown variable {name!r}")
        if int(r) < 2:
            raise ArityError(f"schema declares arity {r} < 2 for {name!r}")
        declared[name] = int(r)
    return declared


def counts(
    dataset: Dataset,
    child: int,
    parent_set: Iterable[int],
    ceiling: int = DEFAULT_CONFIG_CEILING,
) -> np.ndarray:
    """Contingency counts N[j, k] over (parent configuration j, child state k).

    Parent configurations are enumerated in mixed-radix order over the
    sorted parent indices (the smallest index is the most significant
    digit). With an empty parent set the result is the 1 x r marginal
    histogram of the child column.
    """
    parents = sorted(parent_set)
    if child in parents:
        raise DataError(f"child {child} cannot be its own parent")
    for p in parents + [child]:
        if not 0 <= p < dataset.n_vars:
            raise DataError(f"variable index {p} out of range")
    r = dataset.arities[child]
    q = math.prod(dataset.arities[p] for p in parents)
    if q * r > ceiling:
        raise ConfigurationOverflowError(
            f"{q} parent configurations x {r} child states exceeds ceiling {ceiling}"
        )
    idx = np.zeros(dataset.n_rows, dtype=np.int64)
    for p in parents:
        idx = idx * dataset.arities[p] + dataset.rows[:, p]
    flat = idx * r + dataset.rows[:, child]
    return np.bincount(flat, minlength=q * r).reshape(q, r)
