import itertools

import numpy as np
import pytest

from hetcausal.data import BinaryDataset
from hetcausal.effects import (
    CauseRecord,
    DegenerateDesign,
    PositivityError,
    analyze_causes,
    ate_backdoor_plugin,
    ate_regression,
    candidate_effect_modifiers,
    display_order,
    hte_regression,
    rank_causes,
    read_effects,
    write_effects,
)
from hetcausal.ensemble import build_result
from hetcausal.graph import MixedGraph
from hetcausal.synth import DagGenConfig, random_dag, sample_parametric

from oracles import exact_interventional_effect


def G(nodes, directed=()):
    return MixedGraph.from_edges(list(nodes), directed)


def collider_data(seed=0, n=100_000):
    rng = np.random.default_rng(seed)
    x = rng.random(n) < 0.6
    z = rng.random(n) < 0.5
    y = rng.random(n) < 0.4 + 0.2 * x + 0.24 * z - 0.4 * x * z
    return BinaryDataset.from_columns({"X": x, "Z": z, "Y": y})


def enumerated_joint():
    """Rows replicated in exact proportion to a hand-set W -> X -> Y, W -> Y joint."""
    p_w = {0: 2, 1: 2}  # out of 4
    p_x = {0: {1: 1, 0: 3}, 1: {1: 3, 0: 1}}  # out of 4, given w
    p_y = {(0, 0): 1, (0, 1): 4, (1, 0): 3, (1, 1): 7}  # out of 8, given (w, x)
    rows = []
    for w, x, y in itertools.product((0, 1), repeat=3):
        py = p_y[(w, x)] if y else 8 - p_y[(w, x)]
        rows += [(w, x, y)] * (p_w[w] * p_x[w][x] * py)
    arr = np.array(rows)
    ds = BinaryDataset.from_columns({"W": arr[:, 0], "X": arr[:, 1], "Y": arr[:, 2]})
    exact = sum(p_w[w] / 4 * (p_y[(w, 1)] - p_y[(w, 0)]) / 8 for w in (0, 1))
    return ds, exact


class TestCandidates:
    def test_direct_modifier(self):
        assert candidate_effect_modifiers(G(["x", "z", "y"], [("x", "y"), ("z", "y")]), "x", "y") == {"z"}

    def test_mediator_modifier(self):
        g = G(["x", "m", "z", "y"], [("x", "m"), ("m", "y"), ("z", "m")])
        assert candidate_effect_modifiers(g, "x", "y") == {"z"}

    def test_chain(self):
        assert candidate_effect_modifiers(G(["x", "y"], [("x", "y")]), "x", "y") == set()

    def test_descendant_excluded(self):
        # m is a descendant of x and parents y; it is a mediator, not a modifier
        g = G(["x", "m", "y"], [("x", "m"), ("m", "y"), ("x", "y")])
        assert candidate_effect_modifiers(g, "x", "y") == set()

    def test_not_a_cause(self):
        out = candidate_effect_modifiers(G(["x", "z", "y"], [("z", "y")]), "x", "y")
        assert out == set() and not out.treatment_is_cause


class TestPlugin:
    def test_collider_ate_and_cates(self):
        ds = collider_data()
        assert abs(ate_backdoor_plugin(ds, "X", "Y").effect) <= 0.02
        assert ate_backdoor_plugin(ds, "X", "Y", z=("Z", 1)).effect == pytest.approx(-0.2, abs=0.03)
        assert ate_backdoor_plugin(ds, "X", "Y", z=("Z", 0)).effect == pytest.approx(0.2, abs=0.03)
        assert ate_backdoor_plugin(ds, "X", "Y").p_value is None

    def test_exact_enumeration(self):
        ds, exact = enumerated_joint()
        assert ate_backdoor_plugin(ds, "X", "Y", ["W"]).effect == pytest.approx(exact, abs=1e-12)
        # the unadjusted contrast is confounded
        assert abs(ate_backdoor_plugin(ds, "X", "Y").effect - exact) > 0.05

    def test_positivity(self):
        ds = BinaryDataset.from_columns({"W": [0, 0, 1, 1], "X": [0, 1, 1, 1], "Y": [0, 1, 0, 1]})
        with pytest.raises(PositivityError, match="W"):
            ate_backdoor_plugin(ds, "X", "Y", ["W"])


class TestRegression:
    def test_difference_of_means(self):
        ds = collider_data(1, 5000)
        x, y = ds.column("X"), ds.column("Y").astype(float)
        est = ate_regression(ds, "X", "Y")
        assert est.effect == pytest.approx(y[x == 1].mean() - y[x == 0].mean(), abs=1e-10)
        assert 0 <= est.p_value <= 1 and est.std_err > 0

    def test_collider_near_zero(self):
        assert abs(ate_regression(collider_data(), "X", "Y").effect) <= 0.02

    def test_saturated_agrees_with_plugin(self):
        rng = np.random.default_rng(0)
        n = 100_000
        w = rng.random(n) < 0.4
        x = rng.random(n) < 0.3 + 0.4 * w
        y = rng.random(n) < 0.2 + 0.25 * x + 0.3 * w
        ds = BinaryDataset.from_columns({"W": w, "X": x, "Y": y})
        assert ate_regression(ds, "X", "Y", ["W"]).effect == pytest.approx(
            ate_backdoor_plugin(ds, "X", "Y", ["W"]).effect, abs=0.02
        )

    def test_collinear_dropped(self):
        ds = collider_data(2, 2000)
        ds = BinaryDataset.from_columns({"X": ds.column("X"), "Z": ds.column("Z"), "Z2": ds.column("Z"), "Y": ds.column("Y")})
        est = ate_regression(ds, "X", "Y", ["Z", "Z2"])
        assert est.dropped == ("Z2",)

    def test_constant_treatment(self):
        ds = BinaryDataset.from_columns({"X": [1] * 10, "Y": [0, 1] * 5})
        with pytest.raises(DegenerateDesign):
            ate_regression(ds, "X", "Y")


class TestHTE:
    def test_collider(self):
        h = hte_regression(collider_data(), "X", "Y", "Z")
        assert h.delta == pytest.approx(-0.4, abs=0.03)
        assert h.cate0 == pytest.approx(0.2, abs=0.03)
        assert h.cate1 == pytest.approx(-0.2, abs=0.03)
        assert h.cate1 - h.cate0 == h.delta
        assert h.p_interaction < 0.05

    def test_constant_modifier(self):
        ds = BinaryDataset.from_columns({"X": [0, 1] * 5, "Z": [1] * 10, "Y": [0, 1, 1, 0, 1] * 2})
        with pytest.raises(DegenerateDesign, match="constant"):
            hte_regression(ds, "X", "Y", "Z")

    def test_calibration_without_interaction(self):
        rejections = 0
        for seed in range(200):
            rng = np.random.default_rng([seed, 7])
            n = 2000
            x = rng.random(n) < 0.5
            z = rng.random(n) < 0.5
            w = rng.random(n) < 0.5
            y = rng.random(n) < 0.2 + 0.2 * x + 0.2 * z + 0.2 * w
            ds = BinaryDataset.from_columns({"X": x, "Z": z, "W": w, "Y": y})
            rejections += hte_regression(ds, "X", "Y", "Z", ["W"]).p_interaction < 0.05
        assert 0.02 <= rejections / 200 <= 0.09


def rec(name, support, effects):
    return CauseRecord(name, support, list(effects), [False] * len(effects))


class TestRanking:
    def test_support_first(self):
        records = [rec("b", 0.6, [0.2, 0.0]), rec("a", 1.0, [0.05, 0.05])]
        assert [r.variable for r in rank_causes(records, "risk")] == ["a", "b"]

    def test_secondary_key(self):
        records = [rec("lo", 0.5, [0.1, 0.0]), rec("hi", 0.5, [0.3, 0.0])]
        assert [r.variable for r in rank_causes(records, "risk")] == ["hi", "lo"]

    def test_preventive(self):
        records = [rec("mild", 0.5, [-0.05, 0.0]), rec("strong", 0.5, [-0.2, 0.0])]
        assert [r.variable for r in rank_causes(records, "preventive")] == ["strong", "mild"]

    def test_zero_placeholders_ignored(self):
        # max over nonzero entries is -0.1, not the 0 placeholder
        assert rec("a", 0.5, [-0.1, 0.0, -0.3]).extreme("max") == -0.1
        assert rec("a", 0.0, [0.0, 0.0]).extreme("min") == 0.0

    def test_top_n_and_display(self):
        records = [rec("a", 1.0, [0.05]), rec("b", 0.6, [0.2]), rec("c", 0.2, [0.9])]
        top = rank_causes(records, "risk", top_n=2)
        assert [r.variable for r in top] == ["a", "b"]
        assert [r.variable for r in display_order(top, "risk")] == ["b", "a"]

    def test_total_order_by_name(self):
        records = [rec(n, 0.5, [0.1]) for n in "cab"]
        assert [r.variable for r in rank_causes(records, "risk")] == ["a", "b", "c"]

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            rank_causes([rec("a", 1.0, [0.1])], "neutral")


class TestAnalyze:
    def test_placement_and_zero_multiset(self):
        ds = collider_data(3, 20_000)
        nodes = ["X", "Z", "Y"]
        with_x = G(nodes, [("X", "Y"), ("Z", "Y")])
        without = G(nodes, [("Z", "Y")])
        res = build_result([with_x, without, with_x], ["a", "b", "c"], "Y")
        records = {r.variable: r for r in analyze_causes(ds, res)}
        x = records["X"]
        assert len(x.effects) == 3 and x.effects[1] == 0.0
        assert x.effects[0] == x.effects[2] == pytest.approx(ate_regression(ds, "X", "Y").effect)
        assert {(m.name, m.graph) for m in x.modifiers} == {("Z", 0), ("Z", 2)}
        assert all(m.significant for m in x.modifiers)

    def test_absent_variable(self):
        ds = collider_data(4, 5000)
        res = build_result([G(["X", "Z", "Y"], [("X", "Y")])], ["a"], "Y")
        z = {r.variable: r for r in analyze_causes(ds, res)}["Z"]
        assert z.effects == [0.0] and not z.modifiers and z.support == 0.0

    def test_positivity_recorded(self):
        ds = BinaryDataset.from_columns({"W": [0, 0, 1, 1] * 10, "X": [0, 1, 1, 1] * 10, "Y": [0, 1, 0, 1] * 10})
        res = build_result([G(["W", "X", "Y"], [("W", "X"), ("X", "Y")])], ["a"], "Y")
        x = {r.variable: r for r in analyze_causes(ds, res)}["X"]
        assert not x.graph_effects[0].identifiable and x.effects == [0.0]

    @pytest.mark.parametrize("seed", range(4))
    def test_signs_match_exact_enumeration(self, seed):
        dag = random_dag(DagGenConfig("er", 7, 1.0, seed))
        ds, scm = sample_parametric(dag, "logistic", 60_000, seed)
        res = build_result([dag], ["truth"], "Y")

        def prob_one(v, a):
            pa = scm.params[v].parents
            return float(scm.prob_one(v, np.array([a[p] for p in pa], dtype=float))[0])

        checked = 0
        for r in analyze_causes(ds, res, modifiers=False):
            if r.support == 0:
                continue
            exact = exact_interventional_effect(list(dag.nodes), None, prob_one, r.variable, "Y")
            if abs(exact) > 0.03:
                assert np.sign(r.effects[0]) == np.sign(exact)
                checked += 1
        assert checked >= 1


def test_effects_json_round_trip(tmp_path):
    ds = collider_data(5, 5000)
    res = build_result([G(["X", "Z", "Y"], [("X", "Y"), ("Z", "Y")])], ["a"], "Y")
    records = analyze_causes(ds, res)
    write_effects(records, tmp_path / "effects.json")
    back = read_effects(tmp_path / "effects.json")
    assert [r.to_json() for r in back] == [r.to_json() for r in records]
