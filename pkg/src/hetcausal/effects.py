"""Backdoor-adjusted total and heterogeneous effects, effect-modifier candidates, ranking."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import stats

from .data import BinaryDataset, DataError
from .ensemble import EnsembleResult, cause_support
from .graph import MixedGraph, ancestral_subgraph, relatives

log = logging.getLogger(__name__)


class PositivityError(DataError):
    """A stratum needed by the adjustment formula lacks one treatment level."""


class DegenerateDesign(DataError):
    pass


@dataclass(frozen=True)
class EffectEstimate:
    treatment: str
    effect: float
    std_err: float
    p_value: float | None
    adjustment_set: tuple[str, ...]
    method: Literal["plugin", "regression"]
    conditioning: tuple[str, int] | None = None
    dropped: tuple[str, ...] = ()


@dataclass(frozen=True)
class HeterogeneityEstimate:
    treatment: str
    modifier: str
    cate1: float
    cate0: float
    delta: float
    p_interaction: float
    adjustment_set: tuple[str, ...] = ()
    dropped: tuple[str, ...] = ()


class CandidateSet(frozenset):
    """Frozenset of modifier names; ``treatment_is_cause`` is False when x is not an ancestor of y."""

    treatment_is_cause: bool = True


def candidate_effect_modifiers(g_anc: MixedGraph, x: str, y: str) -> CandidateSet:
    """Non-descendants of x that parent some descendant of x (treatment and mediator EMs)."""
    for v in (x, y):
        if v not in g_anc.nodes:
            raise DataError(f"{v!r} not in graph")
    des = relatives(g_anc, x, "descendants")
    if y not in des:
        out = CandidateSet()
        out.treatment_is_cause = False
        return out
    found = set()
    for d in des:
        found |= g_anc.parents(d)
    return CandidateSet(found - des - {x, y})


def _strata_codes(data: BinaryDataset, names: Sequence[str]) -> np.ndarray:
    code = np.zeros(data.n_rows, dtype=np.int64)
    for i, n in enumerate(names):
        code |= data.column(n).astype(np.int64) << i
    return code


def ate_backdoor_plugin(
    data: BinaryDataset,
    x: str,
    y: str,
    w: Iterable[str] = (),
    z: tuple[str, int] | None = None,
) -> EffectEstimate:
    """Sum over w of [E(y|x=1,w,z) - E(y|x=0,w,z)] P(w|z) from empirical strata."""
    w = tuple(sorted(w))
    if x in w or y in w:
        raise DataError("adjustment set must exclude treatment and outcome")
    rows = np.ones(data.n_rows, dtype=bool)
    if z is not None:
        rows = data.column(z[0]) == z[1]
        if not rows.any():
            raise PositivityError(f"no rows with {z[0]}={z[1]}")
    sub = data.take_rows(np.flatnonzero(rows))
    xv = sub.column(x).astype(np.int64)
    yv = sub.column(y).astype(np.float64)
    code = _strata_codes(sub, w)
    n = sub.n_rows
    effect = 0.0
    var = 0.0
    for c in np.unique(code):
        in_c = code == c
        n1 = int((in_c & (xv == 1)).sum())
        n0 = int((in_c & (xv == 0)).sum())
        if n1 == 0 or n0 == 0:
            assignment = {name: int((c >> i) & 1) for i, name in enumerate(w)}
            raise PositivityError(f"stratum {assignment} lacks {x}={1 if n1 == 0 else 0}")
        m1 = yv[in_c & (xv == 1)].mean()
        m0 = yv[in_c & (xv == 0)].mean()
        weight = in_c.sum() / n
        effect += (m1 - m0) * weight
        var += weight**2 * (m1 * (1 - m1) / n1 + m0 * (1 - m0) / n0)
    return EffectEstimate(x, float(effect), float(np.sqrt(var)), None, w, "plugin", z)


def _ols(design: np.ndarray, names: list[str], target: np.ndarray, protect: Sequence[str]):
    """OLS after greedily dropping collinear columns.  Returns (coef, se, p, kept, dropped)."""
    kept: list[int] = []
    for j in range(design.shape[1]):
        trial = kept + [j]
        if np.linalg.matrix_rank(design[:, trial]) == len(trial):
            kept = trial
    dropped = [names[j] for j in range(design.shape[1]) if j not in kept]
    for name in protect:
        if name in dropped:
            raise DegenerateDesign(f"column {name!r} has no usable variation")
    a = design[:, kept]
    n, k = a.shape
    coef, *_ = np.linalg.lstsq(a, target, rcond=None)
    resid = target - a @ coef
    dof = n - k
    if dof <= 0:
        raise DegenerateDesign("not enough rows for the regression")
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.pinv(a.T @ a)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.where(coef == 0, 0.0, np.inf))
    p = 2 * stats.t.sf(np.abs(t), dof)
    kept_names = [names[j] for j in kept]
    return (
        dict(zip(kept_names, coef)),
        dict(zip(kept_names, se)),
        dict(zip(kept_names, p)),
        kept_names,
        dropped,
    )


def ate_regression(data: BinaryDataset, x: str, y: str, w: Iterable[str] = ()) -> EffectEstimate:
    """Linear-probability regression of y on {x} and w with intercept; effect = coef of x."""
    w = tuple(sorted(w))
    if x in w or y in w:
        raise DataError("adjustment set must exclude treatment and outcome")
    xv = data.column(x)
    if xv.min() == xv.max():
        raise DegenerateDesign(f"treatment {x!r} is constant")
    names = ["const", x, *w]
    design = np.column_stack([np.ones(data.n_rows), data.select([x, *w]).astype(np.float64)])
    coef, se, p, _, dropped = _ols(design, names, data.column(y).astype(np.float64), protect=[x])
    return EffectEstimate(x, float(coef[x]), float(se[x]), float(p[x]), w, "regression", None, tuple(dropped))


def hte_regression(
    data: BinaryDataset, x: str, y: str, z: str, w: Iterable[str] = ()
) -> HeterogeneityEstimate:
    """Regress y on {x, z, z*x} + w + w*z; CATE(z=0) = b_x and delta = b_{z*x}."""
    w = tuple(sorted(v for v in w if v != z))
    if x == z:
        raise DataError("modifier must differ from treatment")
    xv = data.column(x).astype(np.float64)
    zv = data.column(z).astype(np.float64)
    if xv.min() == xv.max():
        raise DegenerateDesign(f"treatment {x!r} is constant")
    if zv.min() == zv.max():
        raise DegenerateDesign(f"modifier {z!r} is constant")
    wv = data.select(list(w)).astype(np.float64)
    inter = f"{z}*{x}"
    names = ["const", x, z, inter, *w, *(f"{v}*{z}" for v in w)]
    design = np.column_stack([np.ones(data.n_rows), xv, zv, xv * zv, wv, wv * zv[:, None]])
    coef, _, p, _, dropped = _ols(design, names, data.column(y).astype(np.float64), protect=[x, inter])
    cate0 = float(coef[x])
    delta = float(coef[inter])
    return HeterogeneityEstimate(x, z, cate0 + delta, cate0, delta, float(p[inter]), w, tuple(dropped))


@dataclass
class GraphEffect:
    graph: int
    ate: float
    p: float | None
    adjustment_set: list[str]
    identifiable: bool = True
    note: str = ""


@dataclass
class ModifierFinding:
    name: str
    graph: int
    cate1: float
    cate0: float
    delta: float
    p: float
    significant: bool


@dataclass
class CauseRecord:
    variable: str
    support: float
    effects: list[float]
    significance: list[bool]
    graph_effects: list[GraphEffect] = field(default_factory=list)
    modifiers: list[ModifierFinding] = field(default_factory=list)

    def extreme(self, which: Literal["max", "min"]) -> float:
        """max/min of the effect multi-set; zero placeholders ignored when any entry is nonzero."""
        vals = [e for e in self.effects if e != 0.0] or list(self.effects) or [0.0]
        return max(vals) if which == "max" else min(vals)

    def to_json(self) -> dict:
        return {
            "variable": self.variable,
            "support": self.support,
            "multiset": self.effects,
            "significant": self.significance,
            "effects": [asdict(e) for e in self.graph_effects],
            "modifiers": [asdict(m) for m in self.modifiers],
        }

    @classmethod
    def from_json(cls, obj: dict) -> CauseRecord:
        return cls(
            obj["variable"],
            obj["support"],
            list(obj["multiset"]),
            list(obj["significant"]),
            [GraphEffect(**e) for e in obj["effects"]],
            [ModifierFinding(**m) for m in obj["modifiers"]],
        )


def _positivity_ok(data: BinaryDataset, x: str, w: Sequence[str]) -> str | None:
    xv = data.column(x)
    if xv.min() == xv.max():
        return f"{x} has a single level"
    code = _strata_codes(data, w)
    with1 = set(np.unique(code[xv == 1]).tolist())
    with0 = set(np.unique(code[xv == 0]).tolist())
    for c in sorted(with1 ^ with0):
        assignment = {name: (c >> i) & 1 for i, name in enumerate(w)}
        return f"positivity violated in stratum {assignment}"
    return None


def analyze_causes(
    data: BinaryDataset,
    result: EnsembleResult,
    alpha: float = 0.05,
    modifiers: bool = True,
) -> list[CauseRecord]:
    """Per variable: the K-entry effect multi-set, significance flags and modifier findings."""
    y = result.outcome
    if y not in data:
        raise DataError(f"outcome column {y!r} missing")
    support = cause_support(result)
    anc_graphs = [ancestral_subgraph(g, y) for g in result.graphs]
    records = []
    for v in result.variables:
        effects = [0.0] * result.k
        sig = [False] * result.k
        rec = CauseRecord(v, support.get(v, 0.0), effects, sig)
        for k, g in enumerate(result.graphs):
            if (v, k) not in result.cause_tuples:
                continue
            w = sorted(g.parents(v))
            problem = _positivity_ok(data, v, w)
            if problem is not None:
                rec.graph_effects.append(GraphEffect(k, 0.0, None, w, False, problem))
                continue
            try:
                est = ate_regression(data, v, y, w)
            except DataError as exc:
                rec.graph_effects.append(GraphEffect(k, 0.0, None, w, False, str(exc)))
                continue
            effects[k] = est.effect
            sig[k] = est.p_value < alpha
            note = f"dropped collinear {list(est.dropped)}" if est.dropped else ""
            rec.graph_effects.append(GraphEffect(k, est.effect, est.p_value, w, True, note))
            if not modifiers:
                continue
            for z in sorted(candidate_effect_modifiers(anc_graphs[k], v, y)):
                try:
                    h = hte_regression(data, v, y, z, w)
                except DataError as exc:
                    log.debug("skipping modifier %s of %s in graph %d: %s", z, v, k, exc)
                    continue
                rec.modifiers.append(
                    ModifierFinding(z, k, h.cate1, h.cate0, h.delta, h.p_interaction, h.p_interaction < alpha)
                )
        records.append(rec)
    return records


def sort_causes(records: Sequence[CauseRecord], mode: Literal["risk", "preventive"]) -> list[CauseRecord]:
    if mode == "risk":
        return sorted(records, key=lambda r: (-r.support, -r.extreme("max"), r.variable))
    if mode == "preventive":
        return sorted(records, key=lambda r: (-r.support, r.extreme("min"), r.variable))
    raise ValueError(f"unknown ranking mode {mode!r}")


def rank_causes(
    records: Sequence[CauseRecord], mode: Literal["risk", "preventive"] = "risk", top_n: int | None = None
) -> list[CauseRecord]:
    """The top-n causes in ranking order (support first, then the effect extreme).

    Variables that are a cause in no graph (support 0) are not ranked.
    """
    ranked = sort_causes([r for r in records if r.support > 0], mode)
    return ranked[: top_n if top_n is not None else len(ranked)]


def display_order(top: Sequence[CauseRecord], mode: Literal["risk", "preventive"]) -> list[CauseRecord]:
    """Order for plotting a selected top-n: by max effect (risk) or min effect (preventive)."""
    if mode == "risk":
        return sorted(top, key=lambda r: (-r.extreme("max"), r.variable))
    return sorted(top, key=lambda r: (r.extreme("min"), r.variable))


def effects_report(records: Sequence[CauseRecord]) -> dict:
    return {"causes": [r.to_json() for r in records]}


def write_effects(records: Sequence[CauseRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps(effects_report(records), indent=1) + "\n")


def read_effects(path: str | Path) -> list[CauseRecord]:
    return [CauseRecord.from_json(c) for c in json.loads(Path(path).read_text())["causes"]]
