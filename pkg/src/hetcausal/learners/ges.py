"""Greedy equivalence search over CPDAGs with Insert / Delete operators."""

from __future__ import annotations

from itertools import combinations

from ..data import BinaryDataset, DataError
from ..graph import MixedGraph, PDAG, GraphError
from ..scores import Scorer
from .common import LearnerParams, StructuralConstraints

MIN_IMPROVEMENT = 1e-8


def pdag_to_dag(p: PDAG) -> PDAG:
    """Consistent DAG extension of a PDAG (Dor and Tarsi)."""
    work = p.copy()
    out = p.copy()
    remaining = set(work.nodes)
    while remaining:
        for x in sorted(remaining):
            if work.ch[x]:
                continue
            nb = work.und[x]
            adj = work.adj(x)
            if all(adj - {y} <= work.adj(y) for y in nb):
                for y in sorted(nb):
                    out.orient(y, x)
                for y in list(work.adj(x)):
                    work.remove_edge(x, y)
                remaining.discard(x)
                break
        else:
            raise GraphError("PDAG admits no consistent extension")
    return out


def cpdag_of(dag: PDAG) -> PDAG:
    colliders = dag.unshielded_colliders()
    keep = {(a, c) for a, c, _ in colliders} | {(b, c) for _, c, b in colliders}
    out = PDAG(dag.nodes)
    for b in dag.nodes:
        for a in dag.pa[b]:
            if (a, b) in keep:
                out.add_directed(a, b)
            else:
                out.add_undirected(a, b)
    out.meek_closure()
    return out


def _is_clique(p: PDAG, nodes) -> bool:
    nodes = list(nodes)
    return all(p.adjacent(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:])


def _blocked(p: PDAG, src: str, dst: str, blockers: set[str]) -> bool:
    """True iff every semi-directed path src ~> dst passes through ``blockers``."""
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        for w in p.ch[v] | p.und[v]:
            if w == dst:
                return False
            if w in seen or w in blockers:
                continue
            seen.add(w)
            stack.append(w)
    return True


def _admits(p: PDAG, constraints: StructuralConstraints) -> bool:
    """Does the class contain a DAG respecting the forbidden edges?"""
    q = p.copy()
    base = q.unshielded_colliders()
    for a, b in sorted(constraints.forbidden):
        if a in q.und and b in q.und[a]:
            if not constraints.allows(b, a):
                return False
            q.orient(b, a)
    q.meek_closure()
    if not q.is_acyclic() or not q.unshielded_colliders() <= base:
        return False
    return not any(b in q.ch[a] for a, b in constraints.forbidden if a in q.ch)


def _clique_extensions(p: PDAG, base: set[str], pool: list[str]):
    """Subsets T of pool such that base | T is a clique (base assumed a clique)."""

    def rec(i: int, chosen: list[str]):
        yield tuple(chosen)
        for j in range(i, len(pool)):
            t = pool[j]
            if all(p.adjacent(t, c) for c in chosen) and all(p.adjacent(t, c) for c in base):
                chosen.append(t)
                yield from rec(j + 1, chosen)
                chosen.pop()

    yield from rec(0, [])


def _forward_ops(p: PDAG, scorer: Scorer, constraints: StructuralConstraints, rejected: set):
    for y in sorted(p.nodes):
        pa_y = p.pa[y]
        for x in sorted(p.nodes):
            if x == y or p.adjacent(x, y) or not constraints.allows(x, y):
                continue
            na = p.und[y] & p.adj(x)
            if not _is_clique(p, na):
                continue
            pool = sorted(t for t in p.und[y] - p.adj(x) if constraints.allows(t, y))
            for t_set in _clique_extensions(p, na, pool):
                key = ("insert", x, y, t_set)
                if key in rejected:
                    continue
                cond = na | set(t_set)
                if not _blocked(p, y, x, cond):
                    continue
                base = cond | pa_y
                delta = scorer(y, base | {x}) - scorer(y, base)
                yield delta, key


def _backward_ops(p: PDAG, scorer: Scorer, constraints: StructuralConstraints, rejected: set):
    for y in sorted(p.nodes):
        pa_y = p.pa[y]
        for x in sorted(pa_y | p.und[y]):
            if (x, y) in constraints.required or (y, x) in constraints.required:
                continue
            na = sorted(p.und[y] & p.adj(x))
            for k in range(len(na) + 1):
                for h in combinations(na, k):
                    key = ("delete", x, y, h)
                    if key in rejected:
                        continue
                    rest = set(na) - set(h)
                    if not _is_clique(p, rest):
                        continue
                    delta = scorer(y, rest | (pa_y - {x})) - scorer(y, rest | pa_y | {x})
                    yield delta, key


def _apply(p: PDAG, key) -> PDAG:
    q = p.copy()
    kind, x, y, s = key
    if kind == "insert":
        q.orient(x, y)
        for t in s:
            q.orient(t, y)
    else:
        q.remove_edge(x, y)
        for h in s:
            q.orient(y, h)
            if h in q.und[x]:
                q.orient(x, h)
    return cpdag_of(pdag_to_dag(q))


def _phase(p: PDAG, ops, scorer, constraints) -> PDAG:
    rejected: set = set()
    while True:
        best = None
        for delta, key in ops(p, scorer, constraints, rejected):
            if delta <= MIN_IMPROVEMENT:
                continue
            if best is None or delta > best[0] or (delta == best[0] and key < best[1]):
                best = (delta, key)
        if best is None:
            return p
        nxt = _apply(p, best[1])
        if not _admits(nxt, constraints):
            rejected.add(best[1])
            continue
        p = nxt
        rejected.clear()


def ges(
    data: BinaryDataset,
    constraints: StructuralConstraints | None = None,
    params: LearnerParams = LearnerParams(),
    scorer: Scorer | None = None,
) -> MixedGraph:
    if len(data.columns) < 2:
        raise DataError("ges needs at least two columns")
    if constraints is None:
        constraints = StructuralConstraints.for_dataset(data)
    scorer = scorer or Scorer(data, params.ges_score_cfg)
    p = PDAG(data.columns)
    for a, b in sorted(constraints.required):
        p.add_directed(a, b)
    p = _phase(p, _forward_ops, scorer, constraints)
    p = _phase(p, _backward_ops, scorer, constraints)
    # orient the class member that respects the knowledge (e.g. outcome as a sink)
    for a, b in sorted(constraints.forbidden):
        if a in p.und and b in p.und[a] and constraints.allows(b, a):
            p.orient(b, a)
    p.meek_closure()
    return p.to_graph()
