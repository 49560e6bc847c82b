"""Acceptance checks. Each test prints one PASS/FAIL line and asserts at the stated tolerance."""

import numpy as np
import pytest

from hetcausal.data import BinaryDataset
from hetcausal.effects import ate_backdoor_plugin, hte_regression
from hetcausal.ensemble import OrientationSupportTable, orient_pdag
from hetcausal.evaluation import EvalReport
from hetcausal.events import UnitTimeline, repeated_outcome_label
from hetcausal.graph import MixedGraph, apply_meek_rules, dag_to_cpdag
from hetcausal.learners import LearnerParams, StructuralConstraints, pc_stable
from hetcausal.pipeline import DEFAULT_LEARNERS, CellSpec, discover_and_evaluate, simulate_cell
from hetcausal.scores import BDEU, BIC, Scorer, graph_score
from hetcausal.synth import DagGenConfig, fit_cpts, random_dag, sample_from_cpts, sample_parametric

from oracles import all_dags, colliders, extensions_bruteforce, random_dag_edges, vstructure_pattern
from simdata import STRUCTURES, sample_logistic
from test_effects import collider_data


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def G(nodes, directed=(), undirected=()):
    return MixedGraph.from_edges(list(nodes), directed, [tuple(e) for e in undirected])


def test_1_repeat_label_worked_example(verdict):
    unit = UnitTimeline("3", {1: frozenset({"ER"}), 2: frozenset({"e1"}), 3: frozenset({"ER"})})
    y2 = repeated_outcome_label(unit, 2, "ER").y
    y1 = repeated_outcome_label(unit, 1, "ER").y
    verdict(1, (y2, y1) == (1, 0), f"y(tau=2)={y2}, y(tau=1)={y1}; expected 1, 0")


def test_2_unfaithful_collider(verdict):
    ds = collider_data(0, 100_000)
    ate = ate_backdoor_plugin(ds, "X", "Y").effect
    h = hte_regression(ds, "X", "Y", "Z")
    ok = abs(ate) <= 0.02 and abs(h.delta + 0.4) <= 0.03 and abs(h.cate0 - 0.2) <= 0.03 and abs(h.cate1 + 0.2) <= 0.03
    verdict(
        2, ok,
        f"plug-in ATE {ate:+.4f} (|.|<=0.02), interaction {h.delta:+.4f} (-0.4+-0.03), "
        f"CATE(Z=0) {h.cate0:+.4f} (+0.2+-0.03), CATE(Z=1) {h.cate1:+.4f} (-0.2+-0.03)",
    )


ER_GRID = [(n, sp) for n in (10, 20) for sp in (0.8, 1.0)]
BA_GRID = [(10, 1.0), (20, 1.0)]
SEEDS = range(5)


@pytest.fixture(scope="module")
def benchmark_grid() -> list[tuple[str, EvalReport]]:
    out = []
    for topo, cells in (("er", ER_GRID), ("ba", BA_GRID)):
        for n, sp in cells:
            for seed in SEEDS:
                cell = simulate_cell(CellSpec(topo, n, sp, "logistic", seed))
                _, report, _ = discover_and_evaluate(
                    cell, DEFAULT_LEARNERS, LearnerParams(bootstrap_runs=20, seed=seed)
                )
                out.append((topo, report))
    return out


def test_3_ensemble_support_gap(benchmark_grid, verdict):
    er = [r for topo, r in benchmark_grid if topo == "er"]
    tp = float(np.mean([r.tp_support for r in er]))
    fp = float(np.mean([r.fp_support for r in er]))
    verdict(3, tp - fp >= 0.50, f"ER mean TP(S_c) {tp:.3f} - mean FP(S_c) {fp:.3f} = {tp - fp:.3f} (>= 0.50)")


def test_4_ensemble_robustness(benchmark_grid, verdict):
    reports = [r for _, r in benchmark_grid]
    loss = {name: float(np.mean([1 - r.prf1[name][2] for r in reports])) for name in reports[0].prf1}
    ens = loss.pop("ensemble")
    best_name = min(loss, key=loss.get)
    detail = ", ".join(f"{k} {v:.3f}" for k, v in sorted(loss.items()))
    verdict(
        4, ens <= loss[best_name] + 0.05,
        f"ensemble mean 1-F1 {ens:.3f} vs best learner {best_name} {loss[best_name]:.3f} + 0.05 ({detail})",
    )


def test_5_score_equivalence(verdict):
    worst = 0.0
    for n_nodes in (2, 3, 4):
        nodes = list("abcd"[:n_nodes])
        classes: dict = {}
        for d in all_dags(nodes):
            key = (frozenset(frozenset(e) for e in d), frozenset(colliders(nodes, d)))
            classes.setdefault(key, []).append(d)
        for seed in range(50):
            rng = np.random.default_rng([seed, n_nodes])
            ds = BinaryDataset.from_columns({c: rng.integers(0, 2, 400) for c in nodes}, outcome=nodes[-1])
            for cfg in (BIC, BDEU):
                scorer = Scorer(ds, cfg)
                for members in classes.values():
                    s = [graph_score(ds, G(nodes, m), cfg, scorer) for m in members]
                    worst = max(worst, (max(s) - min(s)) / abs(s[0]))
    verdict(5, worst <= 1e-9, f"max relative score spread within equivalence classes {worst:.2e} (<= 1e-9)")


def test_6_pc_structure_recovery(verdict):
    params, free = LearnerParams(alpha=0.05), StructuralConstraints()
    hits = {}
    for name, (nodes, edges) in sorted(STRUCTURES.items()):
        truth = dag_to_cpdag(G(nodes, edges))
        hits[name] = sum(pc_stable(sample_logistic(nodes, edges, 50_000, s), free, params) == truth for s in range(10))
    verdict(6, min(hits.values()) >= 9, f"true CPDAG recovered in {hits} of 10 seeds (>= 9 each)")


def _random_pdag(rng):
    """A consistent PDAG with at most 5 undirected edges: a CPDAG, optionally with extra orientations."""
    while True:
        nodes, edges = random_dag_edges(rng, 6, float(rng.uniform(0.3, 0.6)))
        edges = sorted(edges)
        g = dag_to_cpdag(G(nodes, edges))
        if rng.random() < 0.5 and g.undirected:
            extra = [e for e in edges if frozenset(e) in g.undirected and rng.random() < 0.4]
            und = [e for e in g.undirected if not any(frozenset(x) == e for x in extra)]
            g = apply_meek_rules(G(nodes, set(g.directed) | set(extra), und))
        if 1 <= len(g.undirected) <= 5:
            return nodes, g


def _single_edge_pdag(rng):
    """A DAG with one edge made undirected; edges inside a v-structure are not picked,
    since freeing one leaves a PDAG with no collider-preserving extension."""
    while True:
        nodes, edges = random_dag_edges(rng, 6, float(rng.uniform(0.3, 0.6)))
        in_collider = {e for a, c, b in colliders(nodes, edges) for e in ((a, c), (b, c))}
        free = sorted(set(edges) - in_collider)
        if free:
            e = free[int(rng.integers(len(free)))]
            return nodes, G(nodes, [x for x in edges if x != e], [e])


def test_7_orient_pdag_validity(verdict):
    rng = np.random.default_rng(2024)
    bad, single_bad, single_n = 0, 0, 0
    cases = [_random_pdag(rng) for _ in range(100)] + [_single_edge_pdag(rng) for _ in range(100)]
    for nodes, g in cases:
        nodes = sorted(nodes)
        s = OrientationSupportTable({(a, b): float(rng.random()) for a in nodes for b in nodes if a != b})
        out = orient_pdag(g, s)
        exts = extensions_bruteforce(nodes, g.directed, g.undirected)
        if out.directed not in exts:
            bad += 1
        if len(g.undirected) == 1:
            single_n += 1
            best = max(exts, key=lambda ext: sum(s(a, b) for a, b in ext - g.directed))
            single_bad += out.directed != best
    verdict(
        7, bad == 0 and single_bad == 0 and single_n >= 100,
        f"{len(cases) - bad}/{len(cases)} outputs are consistent extensions; "
        f"{single_n - single_bad}/{single_n} single-edge cases equal the S_o-maximal extension",
    )


def test_8_meek_equals_extension_intersection(verdict):
    nodes = ["a", "b", "c", "d"]
    dags = all_dags(nodes)
    mismatches = 0
    for dag in dags:
        directed, undirected = vstructure_pattern(nodes, dag)
        out = apply_meek_rules(G(nodes, directed, undirected))
        forced = frozenset.intersection(*extensions_bruteforce(nodes, directed, undirected))
        mismatches += out.directed != forced
    verdict(8, mismatches == 0 and len(dags) == 543, f"{len(dags) - mismatches}/{len(dags)} DAG patterns match")


def test_9_cpt_round_trip(verdict):
    worst = 0.0
    for topo, n, sp, seed in (("er", 6, 1.0, 0), ("er", 8, 1.0, 1), ("ba", 8, 1.0, 2)):
        dag = random_dag(DagGenConfig(topo, n, sp, seed))
        source, _ = sample_parametric(dag, "logistic", 5000, seed)
        scm = fit_cpts(source, dag)
        refit = fit_cpts(sample_from_cpts(scm, 200_000, seed + 100), dag)
        for v in dag.nodes:
            worst = max(worst, float(np.max(np.abs(refit.cpt(v) - scm.cpt(v)))))
    verdict(9, worst <= 0.02, f"max |refit - fitted| CPT entry {worst:.4f} (<= 0.02)")


def test_10_sample_size_trend(verdict):
    tp: dict = {}
    for topo in ("ba", "er"):
        for mult in (25, 500):
            vals = []
            for seed in SEEDS:
                cell = simulate_cell(CellSpec(topo, 30, 2.0, "logistic", seed, 30 * mult))
                _, report, _ = discover_and_evaluate(
                    cell, DEFAULT_LEARNERS, LearnerParams(bootstrap_runs=20, seed=seed)
                )
                vals.append(report.tp_support)
            tp[topo, mult] = float(np.mean(vals))
    ok = all(tp[t, 500] > tp[t, 25] for t in ("ba", "er"))
    verdict(
        10, ok,
        "mean TP(S_c) at N=n*500 vs N=n*25: "
        + ", ".join(f"{t.upper()} {tp[t, 500]:.3f} vs {tp[t, 25]:.3f}" for t in ("ba", "er")),
    )
