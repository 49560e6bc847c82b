import numpy as np
import pytest

from hetcausal.data import BinaryDataset, DataError
from hetcausal.ensemble import (
    EnsembleResult,
    OrientationSupportTable,
    build_result,
    cause_support,
    ensemble_report,
    orient_pdag,
    orient_pdag_exhaustive,
    orientation_support,
    orientation_support_detail,
    read_ensemble,
    run_ensemble,
    write_ensemble,
)
from hetcausal.events import EventLog, UnitTimeline
from hetcausal.graph import MixedGraph, dag_to_cpdag, enumerate_consistent_extensions, relatives
from hetcausal.learners import LearnerParams

from oracles import extensions_bruteforce, random_dag_edges, reachability
from simdata import sample_logistic


def unit(uid, **first_times):
    events = {}
    for name, t in first_times.items():
        events.setdefault(t, set()).add(name)
    return UnitTimeline(uid, {t: frozenset(v) for t, v in events.items()})


def log_of(units, vocab=("j", "k")):
    return EventLog(tuple(units), tuple(vocab), "O")


def table(entries):
    return OrientationSupportTable(dict(entries))


def G(nodes, directed=(), undirected=()):
    return MixedGraph.from_edges(list(nodes), directed, undirected)


class TestOrientationSupport:
    def test_fraction(self):
        units = [unit(str(i), j=1, k=2) for i in range(7)] + [unit(str(i), j=3, k=2) for i in range(7, 10)]
        units.append(unit("only_j", j=1))
        assert orientation_support_detail(log_of(units), "j", "k") == (0.7, 10)

    def test_equal_times_count_against(self):
        assert orientation_support(log_of([unit("u", j=4, k=4)]), "j", "k") == 0.0
        assert orientation_support(log_of([unit("u", j=4, k=4)]), "k", "j") == 0.0

    def test_no_data(self):
        assert orientation_support_detail(log_of([unit("u", j=1)]), "j", "k") == (0.5, 0)

    def test_unknown_event(self):
        with pytest.raises(DataError, match="unknown event"):
            orientation_support(log_of([unit("u", j=1)]), "j", "zz")

    def test_five_unit_replay(self):
        raw = [
            {1: {"j"}, 2: {"k"}, 5: {"j", "k"}},
            {3: {"k"}, 4: {"j"}},
            {2: {"j", "k"}},
            {6: {"j"}},
            {1: {"k"}, 9: {"k"}, 2: {"j"}},
        ]
        units = [UnitTimeline(str(i), {t: frozenset(v) for t, v in ev.items()}) for i, ev in enumerate(raw)]
        eligible = before = 0
        for ev in raw:
            tj = [t for t, v in ev.items() if "j" in v]
            tk = [t for t, v in ev.items() if "k" in v]
            if tj and tk:
                eligible += 1
                before += min(tj) < min(tk)
        log = log_of(units)
        assert orientation_support(log, "j", "k") == before / eligible == 0.25
        tab = OrientationSupportTable.from_log(log)
        assert tab("j", "k") == 0.25 and tab.eligible_unit_counts[("j", "k")] == 4


class TestOrientPDAG:
    def test_single_edge(self):
        g = orient_pdag(G("ab", undirected=[("a", "b")]), table({("a", "b"): 0.8, ("b", "a"): 0.2}))
        assert g.directed == {("a", "b")}

    def test_collider_skipped(self):
        g = G("abc", [("c", "b")], [("a", "b")])
        out = orient_pdag(g, table({("a", "b"): 0.9, ("b", "a"): 0.1}))
        assert out.directed == {("c", "b"), ("b", "a")}

    def test_both_blocked_stays_undirected(self):
        # a -> b - d <- c: either orientation adds an unshielded collider
        g = G("abcd", [("a", "b"), ("c", "d")], [("b", "d")])
        out = orient_pdag(g, table({("b", "d"): 0.9, ("d", "b"): 0.9}))
        assert out == g
        assert not enumerate_consistent_extensions(g)

    def test_conflict_edge_left_alone(self):
        g = MixedGraph.from_edges(list("abc"), [("a", "b")], conflicts=[("b", "c")])
        out = orient_pdag(g, table({("b", "c"): 1.0, ("c", "b"): 1.0}))
        assert out.conflicts == {frozenset("bc")} and out.directed == {("a", "b")}

    def test_no_undirected_identity(self):
        g = G("abc", [("a", "b")])
        assert orient_pdag(g, table({})) == g
        assert orient_pdag_exhaustive(g, table({})) == g

    def test_exhaustive_beats_greedy(self):
        g = G("abc", undirected=[("a", "b"), ("b", "c")])
        s = table({("a", "b"): 0.9, ("b", "a"): 0.85, ("c", "b"): 0.8, ("b", "c"): 0.0})
        greedy, full = orient_pdag(g, s), orient_pdag_exhaustive(g, s)

        def total(out):
            return sum(s(a, b) for a, b in out.directed)

        assert greedy.directed == {("a", "b"), ("b", "c")}
        assert full.directed == {("c", "b"), ("b", "a")}
        assert total(full) > total(greedy)

    def test_exhaustive_budget(self):
        nodes = [f"v{i}" for i in range(7)]
        g = G(nodes, undirected=[(nodes[i], nodes[i + 1]) for i in range(6)])
        with pytest.raises(Exception, match="budget"):
            orient_pdag_exhaustive(g, table({}), budget=5)

    @pytest.mark.parametrize("seed", range(40))
    def test_random_cpdag_member_of_extensions(self, seed):
        rng = np.random.default_rng(seed)
        while True:
            nodes, edges = random_dag_edges(rng, 6, 0.4)
            g = dag_to_cpdag(G(nodes, edges))
            if len(g.undirected) <= 5:
                break
        s = table({(a, b): float(rng.random()) for a in nodes for b in nodes if a != b})
        out = orient_pdag(g, s)
        exts = extensions_bruteforce(nodes, g.directed, g.undirected)
        assert out.directed in exts
        assert out.skeleton() == g.skeleton() and out.directed >= g.directed
        single = orient_pdag_exhaustive(g, s)
        assert single.directed in exts
        assert sum(s(a, b) for a, b in single.directed - g.directed) >= sum(
            s(a, b) for a, b in out.directed - g.directed
        ) - 1e-12


class TestEnsemble:
    def graphs(self):
        nodes = ["a", "b", "c", "Y"]
        return [
            G(nodes, [("a", "b"), ("b", "Y")]),
            G(nodes, [("c", "Y")], [("a", "b")]),
            G(nodes, [("a", "Y"), ("b", "Y")]),
        ]

    def test_tuples_are_ancestors(self):
        res = build_result(self.graphs(), ["x", "y", "z"], "Y")
        for k, g in enumerate(res.graphs):
            assert res.causes_in(k) == relatives(g, "Y", "ancestors")
        assert ("Y", 0) not in res.cause_tuples
        assert cause_support(res) == {"a": 2 / 3, "b": 2 / 3, "c": 1 / 3}

    def test_support_values(self):
        nodes = ["a", "Y"]
        g_in, g_out = G(nodes, [("a", "Y")]), G(nodes)
        res = build_result([g_in, g_out, g_in, g_out, g_in], ["p"] * 5, "Y")
        assert cause_support(res)["a"] == 0.6
        res = build_result([g_out, g_in, g_out, g_in], ["p"] * 4, "Y")
        assert cause_support(res)["a"] == 0.5 and res.presence("a") == [False, True, False, True]
        assert cause_support(build_result([g_out], ["p"], "Y"))["a"] == 0.0

    def test_unanimity(self):
        g = self.graphs()[0]
        res = build_result([g] * 4, ["p"] * 4, "Y")
        assert cause_support(res) == {"a": 1.0, "b": 1.0, "c": 0.0}

    def test_empty(self):
        with pytest.raises(ValueError):
            build_result([], [], "Y")

    def test_report_and_round_trip(self, tmp_path):
        res = build_result(self.graphs(), ["pc", "hc", "ges"], "Y")
        rep = ensemble_report(res)
        assert rep["variables"]["c"] == {"cause_support": 1 / 3, "per_graph_presence": [False, True, False]}
        write_ensemble(res, tmp_path)
        assert (tmp_path / "graph_1_hc.txt").exists()
        back = read_ensemble(tmp_path)
        assert back.graphs == res.graphs and back.cause_tuples == res.cause_tuples


class TestRunEnsemble:
    def data(self, seed=0, n=4000):
        rng = np.random.default_rng(seed)
        nodes, edges = random_dag_edges(rng, 9, 0.3)
        nodes = nodes + ["Y"]
        edges = set(edges) | {(nodes[0], "Y"), (nodes[3], "Y")}
        return sample_logistic(nodes, sorted(edges), n, seed, w_low=0.8, w_high=1.6, outcome="Y")

    def test_single_learner(self):
        ds = self.data()
        res = run_ensemble(ds, learners=["pc"], params=LearnerParams(bootstrap_runs=1))
        assert res.k == 1
        assert res.causes_in(0) == relatives(res.graphs[0], "Y", "ancestors")

    def test_ten_node_matches_relatives(self):
        ds = self.data(1)
        res = run_ensemble(ds, params=LearnerParams(bootstrap_runs=3))
        assert res.algorithm_names == ["pc", "hc", "mmhc", "ges", "noisy"]
        for k, g in enumerate(res.graphs):
            y_anc = reachability(g.nodes, g.directed, "Y", reverse=True)
            assert res.causes_in(k) == y_anc
            assert "Y" not in res.causes_in(k)
            assert not g.children("Y")

    def test_deterministic(self):
        ds = self.data(2, 1500)
        p = LearnerParams(bootstrap_runs=3, seed=4)
        a, b = run_ensemble(ds, params=p), run_ensemble(ds, params=p)
        assert a.graphs == b.graphs and a.cause_tuples == b.cause_tuples

    def test_parallel_matches_sequential(self):
        ds = self.data(3, 1500)
        p = LearnerParams(bootstrap_runs=2)
        assert run_ensemble(ds, params=p).graphs == run_ensemble(ds, params=p, n_jobs=2).graphs

    def test_orients_with_log(self):
        ds = BinaryDataset.from_columns(
            {"a": [0, 1] * 2000, "b": [0, 1] * 1990 + [1, 0] * 10, "Y": [0] * 4000}
        )
        units = [unit(str(i), a=1, b=2, O=3) for i in range(5)]
        log = EventLog(tuple(units), ("a", "b", "O"), "O")
        res = run_ensemble(ds, log=log, learners=["pc"])
        assert res.raw_graphs[0].undirected == {frozenset("ab")}
        assert res.graphs[0].directed == {("a", "b")}

    def test_missing_outcome(self):
        ds = BinaryDataset.from_columns({"a": [0, 1], "b": [1, 0]}, outcome="Y")
        with pytest.raises(DataError, match="outcome"):
            run_ensemble(ds, learners=["pc"])
