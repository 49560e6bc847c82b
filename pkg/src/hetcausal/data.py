"""Binary analysis dataset: an immutable 0/1 matrix with named columns."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

OUTCOME = "Y"


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    columns: tuple[str, ...]
    values: np.ndarray
    outcome: str = OUTCOME
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        cols = tuple(self.columns)
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[1] != len(cols):
            raise DataError(f"shape {values.shape} does not match {len(cols)} columns")
        if len(set(cols)) != len(cols):
            raise DataError("duplicate column names")
        if values.size and not np.isin(values, (0, 1)).all():
            raise DataError("dataset cells must be 0 or 1")
        values = np.ascontiguousarray(values, dtype=np.uint8)
        values.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(cols)})

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def has_outcome(self) -> bool:
        return self.outcome in self._index

    @property
    def features(self) -> list[str]:
        return [c for c in self.columns if c != self.outcome]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown column {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def select(self, names: Sequence[str]) -> np.ndarray:
        return self.values[:, [self.index(n) for n in names]]

    def take_rows(self, rows: np.ndarray) -> BinaryDataset:
        return BinaryDataset(self.columns, self.values[rows], self.outcome)

    def with_columns(self, names: Sequence[str]) -> BinaryDataset:
        return BinaryDataset(tuple(names), self.select(names), self.outcome)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(self.values.tolist())

    @classmethod
    def from_csv(cls, path: str | Path, outcome: str = OUTCOME) -> BinaryDataset:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DataError(f"{path}: empty file")
        header, body = rows[0], rows[1:]
        try:
            values = np.array([[int(v) for v in r] for r in body], dtype=np.int64)
        except ValueError as exc:
            raise DataError(f"{path}: non-integer cell ({exc})") from None
        if not body:
            values = np.zeros((0, len(header)), dtype=np.int64)
        return cls(tuple(header), values, outcome)

    @classmethod
    def from_columns(cls, data: dict[str, Iterable[int]], outcome: str = OUTCOME) -> BinaryDataset:
        names = list(data)
        return cls(tuple(names), np.column_stack([np.asarray(list(data[n])) for n in names]), outcome)


class ColumnCache:
    """Column-major copies of the data, so strata codes are built from contiguous rows.

    Codes of up to 8 bits are built in uint8, which is faster than int64.
    """

    def __init__(self, values: np.ndarray):
        self.small = np.ascontiguousarray(values.T, dtype=np.uint8)
        self._wide: np.ndarray | None = None

    def pick(self, bits: int) -> np.ndarray:
        """Columns in a dtype wide enough for codes of ``bits`` bits."""
        if bits <= 8:
            return self.small
        if self._wide is None:
            self._wide = self.small.astype(np.int64)
        return self._wide
