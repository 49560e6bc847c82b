"""Contingency tables and chi-square / G-square conditional independence tests."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from scipy.special import chdtrc

from .data import BinaryDataset, ColumnCache, DataError

TestKind = Literal["chi_square", "g_square"]

# a table needs at least this many rows per degree of freedom to be tested
MIN_ROWS_PER_DOF = 5


@dataclass(frozen=True)
class ContingencyTable:
    x_levels: int
    y_levels: int
    strata: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    @property
    def total(self) -> int:
        return int(sum(m.sum() for _, m in self.strata))


@dataclass(frozen=True)
class CITestResult:
    statistic: float
    dof: int
    p_value: float
    independent: bool
    degenerate: bool = False


def _check_args(data: BinaryDataset, x: str, y: str, cond: Iterable[str]) -> list[str]:
    cond = sorted(cond)
    if x == y or x in cond or y in cond:
        raise DataError(f"overlapping variables in test {x} _|_ {y} | {cond}")
    for name in (x, y, *cond):
        data.index(name)
    return cond


def _strata_counts(columns: ColumnCache, xi: int, yi: int, ci: list[int]) -> np.ndarray:
    """(2**|cond|, 2, 2) count array."""
    k = len(ci)
    cols = columns.pick(k + 2)
    key = (cols[xi] << 1) | cols[yi]
    for i, c in enumerate(ci):
        key |= cols[c] << (i + 2)
    return np.bincount(key, minlength=4 << k).reshape(1 << k, 2, 2)


def contingency_counts(data: BinaryDataset, x: str, y: str, cond: Iterable[str] = ()) -> ContingencyTable:
    cond = _check_args(data, x, y, cond)
    counts = _strata_counts(ColumnCache(data.values), data.index(x), data.index(y), [data.index(c) for c in cond])
    strata = []
    for code in np.flatnonzero(counts.sum(axis=(1, 2))):
        assignment = tuple((int(code) >> i) & 1 for i in range(len(cond)))
        strata.append((assignment, counts[code]))
    return ContingencyTable(2, 2, tuple(strata))


def _pearson_2x2(counts: np.ndarray) -> tuple[float, int]:
    # per stratum n(ad - bc)^2 / (r0 r1 c0 c1); strata with a zero marginal add nothing
    c = counts.astype(np.float64)
    a, b, cc, d = c[:, 0, 0], c[:, 0, 1], c[:, 1, 0], c[:, 1, 1]
    den = (a + b) * (cc + d) * (a + cc) * (b + d)
    ok = den > 0
    if not ok.any():
        return 0.0, 0
    a, b, cc, d, den = a[ok], b[ok], cc[ok], d[ok], den[ok]
    stat = float(((a + b + cc + d) * (a * d - b * cc) ** 2 / den).sum())
    return stat, int(ok.sum())


def _statistic(counts: np.ndarray, kind: TestKind) -> tuple[float, int]:
    if kind == "chi_square" and counts.shape[1:] == (2, 2):
        return _pearson_2x2(counts)
    counts = counts.astype(np.float64)
    n = counts.sum(axis=(1, 2))
    rows = counts.sum(axis=2)
    cols = counts.sum(axis=1)
    keep = n > 0
    counts, n, rows, cols = counts[keep], n[keep], rows[keep], cols[keep]
    dof = int(((np.count_nonzero(rows, axis=1) - 1) * (np.count_nonzero(cols, axis=1) - 1)).sum())
    expected = rows[:, :, None] * cols[:, None, :] / n[:, None, None]
    mask = expected > 0
    obs, exp = counts[mask], expected[mask]
    if kind == "chi_square":
        stat = float(((obs - exp) ** 2 / exp).sum())
    elif kind == "g_square":
        pos = obs > 0
        stat = float(2.0 * (obs[pos] * np.log(obs[pos] / exp[pos])).sum())
    else:
        raise ValueError(f"unknown test kind {kind!r}")
    return max(stat, 0.0), dof


def _test_from_counts(counts: np.ndarray, kind: TestKind, alpha: float) -> CITestResult:
    stat, dof = _statistic(counts, kind)
    if dof == 0 or counts.sum() < MIN_ROWS_PER_DOF * dof:
        return CITestResult(stat, dof, 1.0, True, degenerate=True)
    p = 1.0 if stat == 0 else float(min(1.0, max(0.0, chdtrc(dof, stat))))
    return CITestResult(stat, dof, p, p >= alpha)


def ci_test(
    data: BinaryDataset,
    x: str,
    y: str,
    cond: Iterable[str] = (),
    kind: TestKind = "chi_square",
    alpha: float = 0.05,
) -> CITestResult:
    """Test x _|_ y | cond; the result does not depend on the order of x and y."""
    return _ci_test_cols(data, ColumnCache(data.values), x, y, cond, kind, alpha)


def _ci_test_cols(data, cols, x, y, cond, kind, alpha) -> CITestResult:
    cond = _check_args(data, x, y, cond)
    if y < x:
        x, y = y, x
    counts = _strata_counts(cols, data.index(x), data.index(y), [data.index(c) for c in cond])
    return _test_from_counts(counts, kind, alpha)


class CITester:
    """Memoized CI tests over one dataset.

    The cache is a pure memo: concurrent fills may compute a value twice but
    always store the same value.
    """

    def __init__(self, data: BinaryDataset, kind: TestKind = "chi_square", alpha: float = 0.05):
        self.data = data
        self.kind = kind
        self.alpha = alpha
        self._cache: dict[tuple[str, str, frozenset[str]], CITestResult] = {}
        self._lock = threading.Lock()
        self._cols = ColumnCache(data.values)
        self.n_tests = 0

    def __call__(self, x: str, y: str, cond: Iterable[str] = ()) -> CITestResult:
        if y < x:
            x, y = y, x
        cond = frozenset(cond)
        key = (x, y, cond)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = _ci_test_cols(self.data, self._cols, x, y, cond, self.kind, self.alpha)
        with self._lock:
            self._cache.setdefault(key, res)
            self.n_tests += 1
        return res

    def pvalue(self, x: str, y: str, cond: Iterable[str] = ()) -> float:
        return self(x, y, cond).p_value
