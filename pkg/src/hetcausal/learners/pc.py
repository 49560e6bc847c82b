"""PC-stable with max-p collider discovery."""

from __future__ import annotations

import logging
from itertools import combinations

from ..citest import CITester
from ..data import BinaryDataset, DataError
from ..graph import MixedGraph, PDAG
from .common import LearnerParams, StructuralConstraints, enforce_constraints

log = logging.getLogger(__name__)


def pc_skeleton(
    data: BinaryDataset,
    tester: CITester,
    max_cond_size: int,
    required: frozenset = frozenset(),
) -> tuple[dict[str, set[str]], dict[frozenset[str], tuple[str, ...]]]:
    """Order-independent adjacency search.  Returns (adjacency, separating sets)."""
    nodes = list(data.columns)
    adj = {v: set(nodes) - {v} for v in nodes}
    keep = {frozenset(e) for e in required}
    sepsets: dict[frozenset[str], tuple[str, ...]] = {}
    for depth in range(max_cond_size + 1):
        snapshot = {v: frozenset(adj[v]) for v in nodes}
        testable = False
        for x in nodes:
            for y in sorted(snapshot[x]):
                if y not in adj[x] or frozenset((x, y)) in keep:
                    continue
                others = sorted(snapshot[x] - {y})
                if len(others) < depth:
                    continue
                testable = True
                for cond in combinations(others, depth):
                    if tester(x, y, cond).independent:
                        adj[x].discard(y)
                        adj[y].discard(x)
                        sepsets[frozenset((x, y))] = cond
                        break
        if not testable:
            break
    return adj, sepsets


def _max_p_sepset(tester: CITester, x: str, y: str, adj: dict[str, set[str]], max_cond: int):
    best_p, best = -1.0, ()
    for pool in (sorted(adj[x] - {y}), sorted(adj[y] - {x})):
        for k in range(min(max_cond, len(pool)) + 1):
            for cond in combinations(pool, k):
                p = tester.pvalue(x, y, cond)
                if p > best_p:
                    best_p, best = p, cond
    return best


def orient_colliders(
    nodes: list[str], adj: dict[str, set[str]], tester: CITester, max_cond: int
) -> PDAG:
    """Orient unshielded colliders; a pair oriented both ways is kept as a conflict edge."""
    proposals: set[tuple[str, str]] = set()
    sepsets: dict[tuple[str, str], tuple] = {}
    for z in nodes:
        nb = sorted(adj[z])
        for i, x in enumerate(nb):
            for y in nb[i + 1:]:
                if y in adj[x]:
                    continue
                if (x, y) not in sepsets:
                    sepsets[x, y] = _max_p_sepset(tester, x, y, adj, max_cond)
                if z not in sepsets[x, y]:
                    proposals.add((x, z))
                    proposals.add((y, z))
    p = PDAG(nodes)
    for a in nodes:
        for b in adj[a]:
            if a >= b:
                continue
            fwd, back = (a, b) in proposals, (b, a) in proposals
            if fwd and back:
                p.add_conflict(a, b)
            elif fwd:
                p.add_directed(a, b)
            elif back:
                p.add_directed(b, a)
            else:
                p.add_undirected(a, b)
    return p


def pc_stable(
    data: BinaryDataset,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
    tester: CITester | None = None,
) -> MixedGraph:
    if len(data.columns) < 2:
        raise DataError("pc_stable needs at least two columns")
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    if tester is None:
        tester = CITester(data, params.test_kind, params.alpha)
    adj, _ = pc_skeleton(data, tester, params.max_cond_size, constraints.required)
    # forbidden in both directions means nonadjacent
    for a, b in constraints.forbidden:
        if (b, a) in constraints.forbidden and a in adj and b in adj[a]:
            adj[a].discard(b)
            adj[b].discard(a)
    p = orient_colliders(list(data.columns), adj, tester, params.max_cond_size)
    if not p.is_acyclic():
        # overlapping collider proposals can close a directed cycle; undirect it
        log.debug("collider orientation produced a cycle; relaxing to conflicts")
        _break_cycles(p)
    enforce_constraints(p, constraints)
    return p.to_graph()


def _break_cycles(p: PDAG) -> None:
    while not p.is_acyclic():
        for a in sorted(p.nodes):
            hit = next((b for b in sorted(p.ch[a]) if p.has_directed_path(b, a)), None)
            if hit is not None:
                p.remove_edge(a, hit)
                p.add_conflict(a, hit)
                break
