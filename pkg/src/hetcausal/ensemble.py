"""Learner ensembles: orientation of residual undirected edges and cause support."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .data import BinaryDataset, DataError
from .events import EventLog
from .graph import MixedGraph, PDAG, enumerate_consistent_extensions, relatives, write_edgelist
from .learners import LearnerParams, StructuralConstraints, canonical_name, run_learner

NO_DATA_SUPPORT = 0.5


def orientation_support_detail(log: EventLog, j: str, k: str) -> tuple[float, int]:
    """(support for j -> k, number of units holding both events)."""
    vocab = set(log.event_vocabulary)
    for e in (j, k):
        if e not in vocab:
            raise DataError(f"unknown event {e!r}")
    eligible = before = 0
    for unit in log.units:
        tj, tk = unit.first_time(j), unit.first_time(k)
        if tj is None or tk is None:
            continue
        eligible += 1
        before += tj < tk
    if eligible == 0:
        return NO_DATA_SUPPORT, 0
    return before / eligible, eligible


def orientation_support(log: EventLog, j: str, k: str) -> float:
    """Fraction of units with both events whose first j precedes their first k."""
    return orientation_support_detail(log, j, k)[0]


@dataclass
class OrientationSupportTable:
    entries: dict[tuple[str, str], float] = field(default_factory=dict)
    eligible_unit_counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def __call__(self, parent: str, child: str) -> float:
        return self.entries.get((parent, child), NO_DATA_SUPPORT)

    @classmethod
    def from_log(cls, log: EventLog, names: Iterable[str] | None = None) -> OrientationSupportTable:
        events = set(log.event_vocabulary)
        names = [n for n in (names if names is not None else log.feature_events) if n in events]
        firsts = [{e: u.first_time(e) for e in names} for u in log.units]
        table = cls()
        for j in names:
            for k in names:
                if j == k:
                    continue
                both = [(f[j], f[k]) for f in firsts if f[j] is not None and f[k] is not None]
                table.eligible_unit_counts[(j, k)] = len(both)
                if both:
                    table.entries[(j, k)] = sum(a < b for a, b in both) / len(both)
                else:
                    table.entries[(j, k)] = NO_DATA_SUPPORT
        return table


def orient_pdag(g: MixedGraph, s_o) -> MixedGraph:
    """Greedy orientation of undirected edges by descending orientation support.

    A proposal is skipped when the edge is already directed, when the child has
    a parent not adjacent to the proposed parent, or when committing it (plus
    Meek closure) would close a cycle or create an unshielded collider.
    """
    p = PDAG.from_graph(g)
    if not p.is_acyclic():
        raise ValueError("orient_pdag needs an acyclic directed part")
    base_colliders = p.unshielded_colliders()
    proposals = []
    for a, b in p.undirected_edges():
        proposals.append((a, b, s_o(a, b)))
        proposals.append((b, a, s_o(b, a)))
    proposals.sort(key=lambda t: (-t[2], t[0], t[1]))
    for j, k, _ in proposals:
        if k not in p.und[j]:
            continue
        if any(q != j and not p.adjacent(q, j) for q in p.pa[k]):
            continue
        trial = p.copy()
        trial.orient(j, k)
        if trial.has_directed_path(k, j):
            continue
        trial.meek_closure()
        if not trial.is_acyclic() or not trial.unshielded_colliders() <= base_colliders:
            continue
        p = trial
    return p.to_graph()


def orient_pdag_exhaustive(g: MixedGraph, s_o, budget: int = 12) -> MixedGraph:
    """Consistent extension with maximum summed support over the newly oriented edges."""
    extensions = enumerate_consistent_extensions(g, budget)
    if not extensions:
        return g

    def key(ext: MixedGraph):
        added = sorted(ext.directed - g.directed)
        return (-sum(s_o(a, b) for a, b in added), added)

    return min(extensions, key=key)


@dataclass
class EnsembleResult:
    graphs: list[MixedGraph]
    algorithm_names: list[str]
    cause_tuples: frozenset[tuple[str, int]]
    variables: list[str]
    outcome: str
    raw_graphs: list[MixedGraph] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.graphs)

    def causes_in(self, k: int) -> set[str]:
        return {v for v, g in self.cause_tuples if g == k}

    def presence(self, variable: str) -> list[bool]:
        return [(variable, k) in self.cause_tuples for k in range(self.k)]


def build_result(
    graphs: Sequence[MixedGraph],
    names: Sequence[str],
    outcome: str,
    raw_graphs: Sequence[MixedGraph] | None = None,
) -> EnsembleResult:
    if not graphs:
        raise ValueError("an ensemble needs at least one graph")
    tuples = set()
    for k, g in enumerate(graphs):
        for v in relatives(g, outcome, "ancestors"):
            tuples.add((v, k))
    variables = [v for v in graphs[0].nodes if v != outcome]
    return EnsembleResult(
        list(graphs), list(names), frozenset(tuples), variables, outcome, list(raw_graphs or graphs)
    )


def _run_one(name, data, constraints, params, s_o):
    raw = run_learner(name, data, constraints, params)
    final = orient_pdag(raw, s_o) if s_o is not None and raw.undirected else raw
    return raw, final


def run_ensemble(
    data: BinaryDataset,
    log: EventLog | None = None,
    learners: Sequence[str] = ("pc", "hc", "mmhc", "ges", "noisy"),
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
    s_o: OrientationSupportTable | None = None,
    n_jobs: int = 1,
) -> EnsembleResult:
    if not learners:
        raise ValueError("an ensemble needs at least one learner")
    if not data.has_outcome:
        raise DataError(f"outcome column {data.outcome!r} missing")
    names = [canonical_name(n) for n in learners]
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    if s_o is None and log is not None:
        s_o = OrientationSupportTable.from_log(log, data.columns)
    if n_jobs == 1:
        outs = [_run_one(n, data, constraints, params, s_o) for n in names]
    else:
        from joblib import Parallel, delayed

        outs = Parallel(n_jobs=n_jobs)(
            delayed(_run_one)(n, data, constraints, params, s_o) for n in names
        )
    raw = [r for r, _ in outs]
    final = [f for _, f in outs]
    return build_result(final, names, data.outcome, raw)


def cause_support(result: EnsembleResult) -> dict[str, float]:
    counts = {v: 0 for v in result.variables}
    for v, _ in result.cause_tuples:
        counts[v] = counts.get(v, 0) + 1
    return {v: c / result.k for v, c in counts.items()}


def ensemble_report(result: EnsembleResult) -> dict:
    support = cause_support(result)
    return {
        "outcome": result.outcome,
        "algorithms": result.algorithm_names,
        "variables": {
            v: {"cause_support": support[v], "per_graph_presence": result.presence(v)}
            for v in result.variables
        },
    }


def graph_filename(k: int, name: str) -> str:
    return f"graph_{k}_{name}.txt"


def write_ensemble(result: EnsembleResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, (g, name) in enumerate(zip(result.graphs, result.algorithm_names)):
        write_edgelist(g, out / graph_filename(k, name))
    (out / "ensemble.json").write_text(json.dumps(ensemble_report(result), indent=1) + "\n")


def read_ensemble(out_dir: str | Path) -> EnsembleResult:
    from .graph import read_edgelist

    out = Path(out_dir)
    report = json.loads((out / "ensemble.json").read_text())
    names = report["algorithms"]
    graphs = [read_edgelist(out / graph_filename(k, n)) for k, n in enumerate(names)]
    return build_result(graphs, names, report["outcome"])
