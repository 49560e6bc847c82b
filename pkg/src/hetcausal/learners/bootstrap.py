from __future__ import annotations

from collections import Counter
from typing import Callable

import numpy as np

from ..data import BinaryDataset
from ..graph import MixedGraph
from .common import LearnerParams, StructuralConstraints

Learner = Callable[[BinaryDataset, StructuralConstraints, LearnerParams], MixedGraph]


def aggregate_graphs(nodes: tuple[str, ...], graphs: list[MixedGraph]) -> MixedGraph:
    """Majority adjacency, then majority direction among the runs holding the edge.

    Both thresholds are strict (> 0.5): an exact split stays undirected.
    """
    runs = len(graphs)
    adjacency: Counter = Counter()
    direction: Counter = Counter()
    for g in graphs:
        for a, b in g.directed:
            adjacency[frozenset((a, b))] += 1
            direction[(a, b)] += 1
        for e in g.undirected:
            adjacency[e] += 1
    directed, undirected = set(), set()
    for e, count in adjacency.items():
        if count * 2 <= runs:
            continue
        a, b = sorted(e)
        if direction[(a, b)] * 2 > count:
            directed.add((a, b))
        elif direction[(b, a)] * 2 > count:
            directed.add((b, a))
        else:
            undirected.add(e)
    return MixedGraph(nodes, frozenset(directed), frozenset(undirected))


def bootstrap_aggregate(
    data: BinaryDataset,
    base: Learner,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
) -> MixedGraph:
    if params.bootstrap_runs < 1:
        raise ValueError("bootstrap_runs must be >= 1")
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    children = np.random.SeedSequence(params.seed).spawn(params.bootstrap_runs)
    graphs = []
    for ss in children:
        rows = np.random.default_rng(ss).integers(0, data.n_rows, size=data.n_rows)
        graphs.append(base(data.take_rows(rows), constraints, params))
    return aggregate_graphs(data.columns, graphs)
