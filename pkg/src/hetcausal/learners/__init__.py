"""Discrete causal structure learners and the learner registry."""

from __future__ import annotations

from typing import Callable

from ..data import BinaryDataset
from ..graph import MixedGraph
from .bootstrap import aggregate_graphs, bootstrap_aggregate
from .common import LearnerParams, StructuralConstraints, enforce_constraints
from .ges import ges
from .hillclimb import hill_climb, mmhc, mmpc
from .noisy import noisy_baseline
from .pc import pc_stable

LEARNERS: dict[str, Callable[..., MixedGraph]] = {
    "pc": pc_stable,
    "hc": hill_climb,
    "mmhc": mmhc,
    "ges": ges,
    "noisy": noisy_baseline,
}
ALIASES = {"noisy_baseline": "noisy", "fges": "ges", "pc_stable": "pc", "hill_climb": "hc"}
# learners the ensemble wraps in bootstrap aggregation
BOOTSTRAPPED = frozenset({"hc", "mmhc"})


def canonical_name(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in LEARNERS:
        raise ValueError(f"unknown learner {name!r}; choose from {sorted(LEARNERS)}")
    return name


def run_learner(
    name: str,
    data: BinaryDataset,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
) -> MixedGraph:
    """Run one learner; hc and mmhc are bootstrapped when bootstrap_runs > 1."""
    name = canonical_name(name)
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    fn = LEARNERS[name]
    if name in BOOTSTRAPPED and params.bootstrap_runs > 1:
        return bootstrap_aggregate(data, fn, constraints, params)
    return fn(data, constraints, params)


__all__ = [
    "LEARNERS",
    "LearnerParams",
    "StructuralConstraints",
    "aggregate_graphs",
    "bootstrap_aggregate",
    "canonical_name",
    "enforce_constraints",
    "ges",
    "hill_climb",
    "mmhc",
    "mmpc",
    "noisy_baseline",
    "pc_stable",
    "run_learner",
]
