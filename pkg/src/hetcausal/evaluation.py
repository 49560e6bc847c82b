"""Scoring discovered causes against a ground-truth DAG."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import DataError
from .effects import CauseRecord
from .ensemble import EnsembleResult, cause_support
from .graph import MixedGraph, relatives

SIGNIFICANCE_LEVEL = 0.05


@dataclass
class EvalReport:
    tp_support: float
    fp_support: float
    tp_sig_support: float | None = None
    fp_sig_support: float | None = None
    prf1: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    config: dict = field(default_factory=dict)


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else 0.0


def support_metrics(
    result: EnsembleResult, truth: MixedGraph, effects: Sequence[CauseRecord] | None = None
) -> EvalReport:
    """Mean cause support over true ancestors of the outcome (TP) and over the rest (FP).

    The outcome itself is excluded from the non-ancestor denominator.  With
    ``effects`` the significance variants count only graphs whose total effect
    has p < 0.05.
    """
    y = result.outcome
    if y not in truth.nodes:
        raise DataError(f"outcome {y!r} missing from ground truth")
    anc = relatives(truth, y, "ancestors")
    others = [v for v in truth.nodes if v != y and v not in anc]
    support = cause_support(result)
    report = EvalReport(
        _mean([support.get(v, 0.0) for v in anc]),
        _mean([support.get(v, 0.0) for v in others]),
    )
    if effects is not None:
        sig = {}
        for rec in effects:
            hits = sum(
                1
                for ge in rec.graph_effects
                if ge.identifiable and ge.p is not None and ge.p < SIGNIFICANCE_LEVEL
            )
            sig[rec.variable] = hits / result.k
        report.tp_sig_support = _mean([sig.get(v, 0.0) for v in anc])
        report.fp_sig_support = _mean([sig.get(v, 0.0) for v in others])
    return report


def cause_prf1(predicted: Iterable[str], truth_anc: Iterable[str]) -> tuple[float, float, float]:
    """Precision, recall, F1; no predictions gives precision 1, no truth gives recall 1."""
    pred, truth = set(predicted), set(truth_anc)
    tp = len(pred & truth)
    precision = tp / len(pred) if pred else 1.0
    recall = tp / len(truth) if truth else 1.0
    if not pred and not truth:
        return 1.0, 1.0, 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def majority_vote(result: EnsembleResult, threshold: float = 0.5) -> set[str]:
    return {v for v, s in cause_support(result).items() if s > threshold}


def evaluate_ensemble(
    result: EnsembleResult,
    truth: MixedGraph,
    effects: Sequence[CauseRecord] | None = None,
    threshold: float = 0.5,
) -> EvalReport:
    """Support metrics plus per-learner and majority-vote precision/recall/F1."""
    report = support_metrics(result, truth, effects)
    anc = relatives(truth, result.outcome, "ancestors")
    for k, name in enumerate(result.algorithm_names):
        key = name if name not in report.prf1 else f"{name}_{k}"
        report.prf1[key] = cause_prf1(result.causes_in(k), anc)
    report.prf1["ensemble"] = cause_prf1(majority_vote(result, threshold), anc)
    return report


def report_row(report: EvalReport) -> dict[str, float]:
    row = {"tp_support": report.tp_support, "fp_support": report.fp_support}
    if report.tp_sig_support is not None:
        row["tp_sig_support"] = report.tp_sig_support
        row["fp_sig_support"] = report.fp_sig_support
    for name, (p, r, f) in report.prf1.items():
        row[f"{name}_precision"] = p
        row[f"{name}_recall"] = r
        row[f"{name}_f1"] = f
    return row


GROUP_KEYS = ("topology", "n", "sparsity", "generator", "samples")


def summarize(rows: Sequence[dict], out_path: str | Path) -> list[dict]:
    """Collapse per-seed rows into topology x n x sparsity x generator x algorithm mean/std."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r.get(k) for k in GROUP_KEYS), []).append(r)
    table = []
    for key, members in sorted(groups.items(), key=lambda kv: tuple(str(x) for x in kv[0])):
        algos = sorted({c[: -len("_f1")] for c in members[0] if c.endswith("_f1")})
        for algo in algos + ["support"]:
            out = dict(zip(GROUP_KEYS, key))
            out["algorithm"] = algo
            out["seeds"] = len(members)
            metrics = (
                ["tp_support", "fp_support", "tp_sig_support", "fp_sig_support"]
                if algo == "support"
                else [f"{algo}_precision", f"{algo}_recall", f"{algo}_f1"]
            )
            for m in metrics:
                vals = [r[m] for r in members if r.get(m) is not None]
                if not vals:
                    continue
                name = m[len(algo) + 1:] if algo != "support" else m
                out[f"{name}_mean"] = round(float(np.mean(vals)), 6)
                out[f"{name}_std"] = round(float(np.std(vals)), 6)
            table.append(out)
    fields: list[str] = []
    for r in table:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(out_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(table)
    return table
