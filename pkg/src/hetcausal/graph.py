"""Mixed graphs (directed + undirected edges), Meek closure and extension enumeration.

A ``MixedGraph`` is an immutable value.  Undirected edges that came from an
orientation conflict carry a conflict flag: they stay adjacent but are never
oriented and never count as a directed path step.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Literal, NamedTuple

Edge = tuple[str, str]


class GraphError(ValueError):
    pass


def _pair(a: str, b: str) -> frozenset[str]:
    return frozenset((a, b))


@dataclass(frozen=True)
class MixedGraph:
    nodes: tuple[str, ...]
    directed: frozenset[Edge] = frozenset()
    undirected: frozenset[frozenset[str]] = frozenset()
    conflicts: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        directed = frozenset(tuple(e) for e in self.directed)
        undirected = frozenset(frozenset(e) for e in self.undirected)
        conflicts = frozenset(frozenset(e) for e in self.conflicts)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected | conflicts)
        object.__setattr__(self, "conflicts", conflicts)
        names = set(self.nodes)
        if len(names) != len(self.nodes):
            raise GraphError("duplicate node names")
        seen: set[frozenset[str]] = set()
        for a, b in directed:
            if a == b:
                raise GraphError(f"self-loop on {a}")
            if a not in names or b not in names:
                raise GraphError(f"edge {a}->{b} references an unknown node")
            p = _pair(a, b)
            if p in seen:
                raise GraphError(f"more than one edge between {a} and {b}")
            seen.add(p)
        for p in self.undirected:
            if len(p) != 2:
                raise GraphError("undirected edge must join two distinct nodes")
            if not p <= names:
                raise GraphError(f"edge {sorted(p)} references an unknown node")
            if p in seen:
                raise GraphError(f"more than one edge between {sorted(p)}")
            seen.add(p)

    # construction helpers
    @classmethod
    def from_edges(
        cls,
        nodes: Iterable[str],
        directed: Iterable[Edge] = (),
        undirected: Iterable[Edge] = (),
        conflicts: Iterable[Edge] = (),
    ) -> MixedGraph:
        return cls(
            tuple(nodes),
            frozenset(directed),
            frozenset(_pair(a, b) for a, b in undirected),
            frozenset(_pair(a, b) for a, b in conflicts),
        )

    @property
    def is_dag(self) -> bool:
        return not self.undirected and is_acyclic(self)

    def undirected_pairs(self) -> list[Edge]:
        return sorted(tuple(sorted(p)) for p in self.undirected)

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.directed or (b, a) in self.directed or _pair(a, b) in self.undirected

    def parents(self, node: str) -> set[str]:
        return {a for a, b in self.directed if b == node}

    def children(self, node: str) -> set[str]:
        return {b for a, b in self.directed if a == node}

    def neighbors(self, node: str) -> set[str]:
        out = set()
        for p in self.undirected:
            if node in p:
                out |= p - {node}
        return out

    def skeleton(self) -> frozenset[frozenset[str]]:
        return frozenset(_pair(a, b) for a, b in self.directed) | self.undirected

    def with_edges(self, directed=None, undirected=None, conflicts=None) -> MixedGraph:
        return MixedGraph(
            self.nodes,
            self.directed if directed is None else frozenset(directed),
            (self.undirected - self.conflicts) if undirected is None else frozenset(undirected),
            self.conflicts if conflicts is None else frozenset(conflicts),
        )


class PDAG:
    """Mutable adjacency view used by the learners and the orientation routines."""

    def __init__(self, nodes: Iterable[str]):
        self.nodes = list(nodes)
        self.pa: dict[str, set[str]] = {v: set() for v in self.nodes}
        self.ch: dict[str, set[str]] = {v: set() for v in self.nodes}
        self.und: dict[str, set[str]] = {v: set() for v in self.nodes}
        self.conf: dict[str, set[str]] = {v: set() for v in self.nodes}

    @classmethod
    def from_graph(cls, g: MixedGraph) -> PDAG:
        p = cls(g.nodes)
        for a, b in g.directed:
            p.add_directed(a, b)
        for e in g.undirected:
            a, b = sorted(e)
            if e in g.conflicts:
                p.add_conflict(a, b)
            else:
                p.add_undirected(a, b)
        return p

    def copy(self) -> PDAG:
        p = PDAG(self.nodes)
        for d_src, d_dst in ((self.pa, p.pa), (self.ch, p.ch), (self.und, p.und), (self.conf, p.conf)):
            for k, v in d_src.items():
                d_dst[k] = set(v)
        return p

    def to_graph(self) -> MixedGraph:
        directed = {(a, b) for b in self.nodes for a in self.pa[b]}
        und = {_pair(a, b) for a in self.nodes for b in self.und[a]}
        conf = {_pair(a, b) for a in self.nodes for b in self.conf[a]}
        return MixedGraph(tuple(self.nodes), frozenset(directed), frozenset(und), frozenset(conf))

    def adj(self, a: str) -> set[str]:
        return self.pa[a] | self.ch[a] | self.und[a] | self.conf[a]

    def adjacent(self, a: str, b: str) -> bool:
        return b in self.pa[a] or b in self.ch[a] or b in self.und[a] or b in self.conf[a]

    def add_directed(self, a: str, b: str) -> None:
        self.ch[a].add(b)
        self.pa[b].add(a)

    def add_undirected(self, a: str, b: str) -> None:
        self.und[a].add(b)
        self.und[b].add(a)

    def add_conflict(self, a: str, b: str) -> None:
        self.conf[a].add(b)
        self.conf[b].add(a)

    def remove_edge(self, a: str, b: str) -> None:
        for d in (self.und, self.conf):
            d[a].discard(b)
            d[b].discard(a)
        self.ch[a].discard(b)
        self.pa[b].discard(a)
        self.ch[b].discard(a)
        self.pa[a].discard(b)

    def orient(self, a: str, b: str) -> None:
        """Turn whatever edge joins a and b into a -> b."""
        self.remove_edge(a, b)
        self.add_directed(a, b)

    def undirected_edges(self) -> list[Edge]:
        return sorted((a, b) for a in self.nodes for b in self.und[a] if a < b)

    def has_directed_path(self, src: str, dst: str) -> bool:
        stack, seen = [src], {src}
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            for w in self.ch[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    def is_acyclic(self) -> bool:
        indeg = {v: len(self.pa[v]) for v in self.nodes}
        queue = [v for v in self.nodes if indeg[v] == 0]
        seen = 0
        while queue:
            v = queue.pop()
            seen += 1
            for w in self.ch[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        return seen == len(self.nodes)

    def unshielded_colliders(self) -> set[tuple[str, str, str]]:
        out = set()
        for c in self.nodes:
            pa = sorted(self.pa[c])
            for i, a in enumerate(pa):
                for b in pa[i + 1:]:
                    if not self.adjacent(a, b):
                        out.add((a, c, b))
        return out

    # Meek rules: each returns True if undirected a - b must become a -> b
    def _r1(self, a: str, b: str) -> bool:
        return any(not self.adjacent(c, b) for c in self.pa[a] if c != b)

    def _r2(self, a: str, b: str) -> bool:
        return bool(self.ch[a] & self.pa[b])

    def _r3(self, a: str, b: str) -> bool:
        cands = sorted(self.und[a] & self.pa[b])
        for i, c in enumerate(cands):
            for d in cands[i + 1:]:
                if not self.adjacent(c, d):
                    return True
        return False

    def _r4(self, a: str, b: str) -> bool:
        for c in self.pa[b]:
            if c == a or not self.adjacent(a, c):
                continue
            for d in self.pa[c]:
                if d in self.und[a] and not self.adjacent(b, d):
                    return True
        return False

    def meek_closure(self) -> list[Edge]:
        """Apply R1-R4 to a fixpoint in place; return the edges oriented, in order."""
        oriented: list[Edge] = []
        changed = True
        while changed:
            changed = False
            for a, b in self.undirected_edges():
                if b not in self.und[a]:
                    continue
                for x, y in ((a, b), (b, a)):
                    if self._r1(x, y) or self._r2(x, y) or self._r3(x, y) or self._r4(x, y):
                        self.orient(x, y)
                        oriented.append((x, y))
                        changed = True
                        break
        return oriented


def _check_node(g: MixedGraph, node: str) -> None:
    if node not in g.nodes:
        raise GraphError(f"unknown node {node!r}")


def relatives(g: MixedGraph, node: str, kind: Literal["parents", "ancestors", "descendants"]) -> set[str]:
    """Parents, ancestors or descendants of ``node`` following directed edges only."""
    _check_node(g, node)
    if kind == "parents":
        return g.parents(node)
    if kind not in ("ancestors", "descendants"):
        raise ValueError(f"unknown relative kind {kind!r}")
    step: dict[str, set[str]] = {v: set() for v in g.nodes}
    for a, b in g.directed:
        if kind == "ancestors":
            step[b].add(a)
        else:
            step[a].add(b)
    out: set[str] = set()
    stack = [node]
    while stack:
        v = stack.pop()
        for w in step[v]:
            if w not in out:
                out.add(w)
                stack.append(w)
    out.discard(node)
    return out


def is_acyclic(g: MixedGraph) -> bool:
    return PDAG.from_graph(g).is_acyclic()


def unshielded_colliders(g: MixedGraph) -> set[tuple[str, str, str]]:
    """Triples (a, c, b) with a -> c <- b, a < b, and a, b nonadjacent."""
    return PDAG.from_graph(g).unshielded_colliders()


class EdgeCheck(NamedTuple):
    creates_cycle: bool
    creates_new_unshielded_collider: bool


def validate_edge_addition(g: MixedGraph, frm: str, to: str) -> EdgeCheck:
    _check_node(g, frm)
    _check_node(g, to)
    p = PDAG.from_graph(g)
    cycle = p.has_directed_path(to, frm)
    collider = any(q != frm and not p.adjacent(q, frm) for q in p.pa[to])
    return EdgeCheck(cycle, collider)


def apply_meek_rules(g: MixedGraph) -> MixedGraph:
    p = PDAG.from_graph(g)
    if not p.is_acyclic():
        raise GraphError("input contains a directed cycle")
    p.meek_closure()
    if not p.is_acyclic():
        raise GraphError("Meek closure closed a cycle; the PDAG admits no consistent extension")
    return p.to_graph()


def ancestral_subgraph(g: MixedGraph, y: str) -> MixedGraph:
    _check_node(g, y)
    keep = relatives(g, y, "ancestors") | {y}
    nodes = tuple(v for v in g.nodes if v in keep)
    return MixedGraph(
        nodes,
        frozenset(e for e in g.directed if e[0] in keep and e[1] in keep),
        frozenset(e for e in g.undirected if e <= keep),
        frozenset(e for e in g.conflicts if e <= keep),
    )


def enumerate_consistent_extensions(g: MixedGraph, max_undirected: int = 12) -> list[MixedGraph]:
    """All DAGs orienting g's undirected edges without cycles or new unshielded colliders."""
    # conflict edges are kept as they are, never oriented
    und = sorted(tuple(sorted(e)) for e in g.undirected - g.conflicts)
    if len(und) > max_undirected:
        raise GraphError(f"{len(und)} undirected edges exceeds enumeration budget of {max_undirected}")
    base = PDAG.from_graph(g)
    base_colliders = base.unshielded_colliders()
    out = []
    for flips in product((False, True), repeat=len(und)):
        directed = set(g.directed)
        for (a, b), flip in zip(und, flips):
            directed.add((b, a) if flip else (a, b))
        cand = MixedGraph(g.nodes, frozenset(directed), conflicts=g.conflicts)
        p = PDAG.from_graph(cand)
        if not p.is_acyclic():
            continue
        if not p.unshielded_colliders() <= base_colliders:
            continue
        out.append(cand)
    return out


def dag_to_cpdag(g: MixedGraph) -> MixedGraph:
    """Equivalence-class representative: keep v-structures, undirect the rest, Meek-close."""
    src = PDAG.from_graph(g)
    if src.undirected_edges() or not src.is_acyclic():
        raise GraphError("dag_to_cpdag needs a DAG")
    keep = {(a, c) for a, c, b in src.unshielded_colliders()} | {
        (b, c) for a, c, b in src.unshielded_colliders()
    }
    p = PDAG(g.nodes)
    for a, b in sorted(g.directed):
        if (a, b) in keep:
            p.add_directed(a, b)
        else:
            p.add_undirected(a, b)
    p.meek_closure()
    return p.to_graph()


def topological_order(g: MixedGraph) -> list[str]:
    """Deterministic topological order of the directed part (ties by node order)."""
    p = PDAG.from_graph(g)
    rank = {v: i for i, v in enumerate(g.nodes)}
    indeg = {v: len(p.pa[v]) for v in g.nodes}
    ready = sorted((v for v in g.nodes if indeg[v] == 0), key=rank.get)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in sorted(p.ch[v], key=rank.get):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
        ready.sort(key=rank.get)
    if len(order) != len(g.nodes):
        raise GraphError("graph has a directed cycle")
    return order


# edge-list text format

def to_edgelist(g: MixedGraph) -> str:
    lines = [f"node {v}" for v in g.nodes]
    lines += [f"{a} -> {b}" for a, b in sorted(g.directed)]
    for a, b in g.undirected_pairs():
        suffix = "  # conflict" if _pair(a, b) in g.conflicts else ""
        lines.append(f"{a} -- {b}{suffix}")
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str) -> MixedGraph:
    nodes: list[str] = []
    directed, undirected, conflicts = [], [], []

    def note(v: str) -> None:
        if v not in nodes:
            nodes.append(v)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = raw.partition("#")
        line = line.strip()
        if not line:
            continue
        if line.startswith("node "):
            note(line[5:].strip())
        elif "->" in line:
            a, b = (s.strip() for s in line.split("->", 1))
            note(a), note(b)
            directed.append((a, b))
        elif "--" in line:
            a, b = (s.strip() for s in line.split("--", 1))
            note(a), note(b)
            (conflicts if comment.strip() == "conflict" else undirected).append((a, b))
        else:
            raise GraphError(f"line {lineno}: cannot parse {raw!r}")
    return MixedGraph.from_edges(nodes, directed, undirected, conflicts)


def read_edgelist(path) -> MixedGraph:
    with open(path) as fh:
        return parse_edgelist(fh.read())


def write_edgelist(g: MixedGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_edgelist(g))
