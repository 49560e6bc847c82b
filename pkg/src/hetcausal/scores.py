"""Decomposable BIC and BDeu scores for binary Bayesian networks."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from scipy.special import gammaln

from .data import BinaryDataset, ColumnCache, DataError
from .graph import GraphError, MixedGraph

ARITY = 2


@dataclass(frozen=True)
class ScoreConfig:
    kind: Literal["bic", "bdeu"] = "bic"
    ess: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bic", "bdeu"):
            raise ValueError(f"unknown score {self.kind!r}")
        if self.ess <= 0:
            raise ValueError("ess must be positive")


BIC = ScoreConfig("bic")
BDEU = ScoreConfig("bdeu", 1.0)


def _family_counts(columns: ColumnCache, child: int, parents: list[int]) -> np.ndarray:
    """Counts shaped (observed parent configs, 2)."""
    cols = columns.pick(len(parents) + 1)
    key = cols[child].copy()
    for i, p in enumerate(parents):
        key |= cols[p] << (i + 1)
    counts = np.bincount(key, minlength=2 << len(parents)).reshape(-1, 2)
    return counts[counts.sum(axis=1) > 0]


def _score_counts(counts: np.ndarray, n_parents: int, n_rows: int, cfg: ScoreConfig) -> float:
    q = float(2**n_parents)
    if cfg.kind == "bic":
        nj = counts.sum(axis=1, keepdims=True)
        pos = counts > 0
        ll = float((counts[pos] * np.log(counts[pos] / np.broadcast_to(nj, counts.shape)[pos])).sum())
        return ll - 0.5 * q * (ARITY - 1) * math.log(n_rows)
    a_jk = cfg.ess / (ARITY * q)
    a_j = cfg.ess / q
    nj = counts.sum(axis=1)
    return float(
        (gammaln(a_j) - gammaln(a_j + nj)).sum() + (gammaln(a_jk + counts) - gammaln(a_jk)).sum()
    )


def local_score(data: BinaryDataset, child: str, parents: Iterable[str], cfg: ScoreConfig = BIC) -> float:
    return _local_score(data, ColumnCache(data.values), child, parents, cfg)


def _local_score(data: BinaryDataset, columns: ColumnCache, child: str, parents: Iterable[str], cfg: ScoreConfig) -> float:
    parents = sorted(parents)
    if child in parents:
        raise DataError(f"{child} cannot be its own parent")
    if data.n_rows == 0:
        raise DataError("cannot score an empty dataset")
    counts = _family_counts(columns, data.index(child), [data.index(p) for p in parents])
    return _score_counts(counts, len(parents), data.n_rows, cfg)


class Scorer:
    """Local-score memo keyed by (child, sorted parent set); a pure memo under concurrency."""

    def __init__(self, data: BinaryDataset, cfg: ScoreConfig = BIC):
        if data.n_rows == 0:
            raise DataError("cannot score an empty dataset")
        self.data = data
        self.cfg = cfg
        self._cache: dict[tuple[str, frozenset[str]], float] = {}
        self._lock = threading.Lock()
        self._cols = ColumnCache(data.values)

    def __call__(self, child: str, parents: Iterable[str]) -> float:
        parents = frozenset(parents)
        key = (child, parents)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        val = _local_score(self.data, self._cols, child, parents, self.cfg)
        with self._lock:
            self._cache.setdefault(key, val)
        return val

    def __len__(self) -> int:
        return len(self._cache)


def graph_score(
    data: BinaryDataset, g: MixedGraph, cfg: ScoreConfig = BIC, scorer: Scorer | None = None
) -> float:
    if g.undirected:
        raise GraphError("graph_score needs a DAG, found undirected edges")
    if scorer is None:
        scorer = Scorer(data, cfg)
    parents: dict[str, set[str]] = {v: set() for v in g.nodes}
    for a, b in g.directed:
        parents[b].add(a)
    return sum(scorer(v, parents[v]) for v in g.nodes)
