from __future__ import annotations

import numpy as np

from ..data import BinaryDataset
from ..graph import MixedGraph
from .common import LearnerParams, StructuralConstraints


def noisy_baseline(
    data: BinaryDataset,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
) -> MixedGraph:
    """Deliberately weak learner: thresholded |correlation| skeleton, random orientation.

    Edges follow a seeded random topological order in which nodes that may
    not parent anything (the outcome, by default) come last.
    """
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    cols = list(data.columns)
    x = data.values.astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(x, rowvar=False) if x.shape[0] > 1 else np.zeros((len(cols), len(cols)))
    corr = np.nan_to_num(np.atleast_2d(corr))

    rng = np.random.default_rng(params.seed)
    n_forbidden = {c: sum(1 for a, _ in constraints.forbidden if a == c) for c in cols}
    perm = [cols[i] for i in rng.permutation(len(cols))]
    # nodes with more forbidden out-edges sink toward the end
    order = sorted(perm, key=lambda c: n_forbidden[c])
    rank = {c: i for i, c in enumerate(order)}
    directed = set()
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            if abs(corr[i, j]) <= params.noisy_threshold:
                continue
            a, b = cols[i], cols[j]
            if rank[a] > rank[b]:
                a, b = b, a
            if not constraints.allows(a, b):
                if not constraints.allows(b, a):
                    continue
                a, b = b, a
            directed.add((a, b))
    # flipping a forbidden edge may close a cycle; fall back to dropping it
    g = MixedGraph(data.columns, frozenset(directed))
    if not g.is_dag:
        directed = {(a, b) for a, b in directed if rank[a] < rank[b]}
        g = MixedGraph(data.columns, frozenset(directed))
    return g
