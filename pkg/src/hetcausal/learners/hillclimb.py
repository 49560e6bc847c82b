"""Greedy hill climbing, MMPC and the hybrid MMHC."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable

from ..citest import CITester
from ..data import BinaryDataset, DataError
from ..graph import MixedGraph
from ..scores import Scorer
from .common import LearnerParams, StructuralConstraints

MIN_IMPROVEMENT = 1e-8


def _descendants(children: dict[str, set[str]], node: str) -> set[str]:
    out, stack = set(), [node]
    while stack:
        for w in children[stack.pop()]:
            if w not in out:
                out.add(w)
                stack.append(w)
    return out


def hill_climb_search(
    data: BinaryDataset,
    constraints: StructuralConstraints,
    scorer: Scorer,
    candidates: dict[str, set[str]] | None = None,
    max_iter: int = 10_000,
) -> MixedGraph:
    """Best-improvement add/delete/reverse search from the empty graph.

    ``candidates[b]`` restricts the possible parents of b; ties in move score
    go to the lexicographically smallest (child, parent).
    """
    nodes = sorted(data.columns)
    parents: dict[str, set[str]] = {v: set() for v in nodes}
    children: dict[str, set[str]] = {v: set() for v in nodes}
    for a, b in sorted(constraints.required):
        parents[b].add(a)
        children[a].add(b)
    local = {v: scorer(v, parents[v]) for v in nodes}

    def allowed_parent(a: str, b: str) -> bool:
        if not constraints.allows(a, b):
            return False
        return candidates is None or a in candidates.get(b, ())

    for _ in range(max_iter):
        desc = {v: _descendants(children, v) for v in nodes}
        best = None  # (delta, child, parent, kind)
        for b in nodes:
            pa_b = parents[b]
            for a in nodes:
                if a == b:
                    continue
                if a in pa_b:
                    if (a, b) in constraints.required:
                        continue
                    delta = scorer(b, pa_b - {a}) - local[b]
                    cand = (delta, b, a, "delete")
                    if best is None or _better(cand, best):
                        best = cand
                    # reverse a -> b into b -> a; cyclic iff a still reaches b
                    if allowed_parent(b, a):
                        children[a].discard(b)
                        cyclic = b in _descendants(children, a)
                        children[a].add(b)
                        if not cyclic:
                            delta = (
                                scorer(b, pa_b - {a}) - local[b]
                                + scorer(a, parents[a] | {b}) - local[a]
                            )
                            cand = (delta, a, b, "reverse")
                            if _better(cand, best):
                                best = cand
                elif b not in parents[a] and allowed_parent(a, b) and a not in desc[b]:
                    delta = scorer(b, pa_b | {a}) - local[b]
                    cand = (delta, b, a, "add")
                    if best is None or _better(cand, best):
                        best = cand
        if best is None or best[0] <= MIN_IMPROVEMENT:
            break
        _, child, parent, kind = best
        if kind == "add":
            parents[child].add(parent)
            children[parent].add(child)
        elif kind == "delete":
            parents[child].discard(parent)
            children[parent].discard(child)
        else:  # reverse: old edge child -> parent becomes parent -> child
            parents[parent].discard(child)
            children[child].discard(parent)
            parents[child].add(parent)
            children[parent].add(child)
            local[parent] = scorer(parent, parents[parent])
        local[child] = scorer(child, parents[child])
    directed = frozenset((a, b) for b in nodes for a in parents[b])
    return MixedGraph(tuple(data.columns), directed)


_KIND_ORDER = {"add": 0, "delete": 1, "reverse": 2}


def _better(cand, best) -> bool:
    if best is None:
        return True
    if cand[0] != best[0]:
        return cand[0] > best[0]
    return (cand[1], cand[2], _KIND_ORDER[cand[3]]) < (best[1], best[2], _KIND_ORDER[best[3]])


def hill_climb(
    data: BinaryDataset,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
    scorer: Scorer | None = None,
) -> MixedGraph:
    if len(data.columns) < 2:
        raise DataError("hill_climb needs at least two columns")
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    return hill_climb_search(data, constraints, scorer or Scorer(data, params.score_cfg))


def _mmpc_target(target: str, others: Iterable[str], tester: CITester, alpha: float, max_cond: int) -> set[str]:
    # max p-value over tested subsets == 1 - (min association)
    maxp = {x: tester.pvalue(x, target) for x in others}
    cpc: list[str] = []
    cand = sorted(maxp)
    while True:
        cand = [x for x in cand if maxp[x] < alpha]
        if not cand:
            break
        pick = min(cand, key=lambda x: (maxp[x], x))
        cand.remove(pick)
        cpc.append(pick)
        for x in cand:
            for k in range(0, min(max_cond, len(cpc)) ):
                for rest in combinations(cpc[:-1], k):
                    maxp[x] = max(maxp[x], tester.pvalue(x, target, rest + (pick,)))
                    if maxp[x] >= alpha:
                        break
                if maxp[x] >= alpha:
                    break
    for x in list(cpc):
        pool = [v for v in cpc if v != x]
        drop = False
        for k in range(min(max_cond, len(pool)) + 1):
            if any(tester(x, target, s).independent for s in combinations(pool, k)):
                drop = True
                break
        if drop:
            cpc.remove(x)
    return set(cpc)


def mmpc(
    data: BinaryDataset,
    params: LearnerParams = LearnerParams(),
    tester: CITester | None = None,
) -> dict[str, set[str]]:
    """Candidate parents-and-children per node, symmetrized by intersection."""
    if tester is None:
        tester = CITester(data, params.test_kind, params.alpha)
    nodes = list(data.columns)
    raw = {
        t: _mmpc_target(t, [v for v in nodes if v != t], tester, params.alpha, params.max_cond_size)
        for t in nodes
    }
    return {t: {x for x in raw[t] if t in raw[x]} for t in nodes}


def mmhc(
    data: BinaryDataset,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
    scorer: Scorer | None = None,
    tester: CITester | None = None,
) -> MixedGraph:
    if len(data.columns) < 2:
        raise DataError("mmhc needs at least two columns")
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    pc = mmpc(data, params, tester)
    return hill_climb_search(data, constraints, scorer or Scorer(data, params.score_cfg), candidates=pc)
