from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..citest import TestKind
from ..data import BinaryDataset
from ..graph import Edge, PDAG
from ..scores import BDEU, BIC, ScoreConfig


@dataclass(frozen=True)
class StructuralConstraints:
    forbidden: frozenset[Edge] = frozenset()
    required: frozenset[Edge] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "forbidden", frozenset(tuple(e) for e in self.forbidden))
        object.__setattr__(self, "required", frozenset(tuple(e) for e in self.required))
        both = self.forbidden & self.required
        if both:
            raise ValueError(f"edges both forbidden and required: {sorted(both)}")

    @classmethod
    def outcome_sink(cls, columns: Iterable[str], outcome: str = "Y") -> StructuralConstraints:
        """Default knowledge: the outcome never parents any other variable."""
        return cls(frozenset((outcome, c) for c in columns if c != outcome))

    @classmethod
    def for_dataset(cls, data: BinaryDataset) -> StructuralConstraints:
        if not data.has_outcome:
            return cls()
        return cls.outcome_sink(data.columns, data.outcome)

    def allows(self, a: str, b: str) -> bool:
        return (a, b) not in self.forbidden


@dataclass(frozen=True)
class LearnerParams:
    alpha: float = 0.05
    max_cond_size: int = 5
    score_cfg: ScoreConfig = BIC
    ges_score_cfg: ScoreConfig = BDEU
    bootstrap_runs: int = 20
    seed: int = 0
    test_kind: TestKind = "chi_square"
    noisy_threshold: float = 0.1
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")


def enforce_constraints(p: PDAG, constraints: StructuralConstraints) -> None:
    """Reverse or drop forbidden orientations, add required ones, then Meek-close, in place."""
    for _ in range(len(p.nodes) + 1):
        changed = False
        for a, b in sorted(constraints.forbidden):
            if a not in p.pa or b not in p.pa:
                continue
            if b in p.ch[a] or b in p.und[a] or b in p.conf[a]:
                if constraints.allows(b, a):
                    p.orient(b, a)
                else:
                    p.remove_edge(a, b)
                changed = True
        for a, b in sorted(constraints.required):
            if a in p.pa and b in p.pa and b not in p.ch[a]:
                p.orient(a, b)
                changed = True
        if p.meek_closure():
            changed = True
        if not changed:
            return
