"""Random ground-truth DAGs with a sink outcome, and binary data generators."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Literal

import networkx as nx
import numpy as np

from .data import OUTCOME, BinaryDataset, DataError
from .graph import MixedGraph, topological_order

Mode = Literal["logistic", "logistic_interaction", "bernoulli_linear", "cpt"]
MODE_ALIASES = {
    "L": "logistic",
    "LL": "logistic_interaction",
    "BL": "bernoulli_linear",
    "logistic+interaction": "logistic_interaction",
}

# weight ranges for the parametric generators
WEIGHT_RANGE = (0.5, 2.0)
BIAS_RANGE = (-1.0, 1.0)
INTERACTION_RANGE = (0.3, 1.0)
BL_MAX_ATTEMPTS = 1000


def canonical_mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in ("logistic", "logistic_interaction", "bernoulli_linear", "cpt"):
        raise ValueError(f"unknown generator mode {mode!r}")
    return mode


@dataclass(frozen=True)
class DagGenConfig:
    topology: Literal["er", "ba"]
    n: int
    sparsity: float
    seed: int = 0

    def __post_init__(self):
        if self.topology not in ("er", "ba"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.n < 2:
            raise ValueError("need at least two nodes besides the outcome")
        if self.sparsity <= 0:
            raise ValueError("sparsity must be positive")

    @property
    def edge_probability(self) -> float:
        """ER edge probability for which the expected edges-per-node equals the sparsity."""
        return 2 * self.n * self.sparsity / (self.n * (self.n - 1))


def node_names(n: int) -> list[str]:
    return [f"X{i}" for i in range(1, n + 1)]


def random_dag(cfg: DagGenConfig) -> MixedGraph:
    rng = np.random.default_rng(cfg.seed)
    names = node_names(cfg.n)
    if cfg.topology == "er":
        p = cfg.edge_probability
        if p > 1:
            raise ValueError(f"sparsity {cfg.sparsity} gives edge probability {p:.3f} > 1")
        pairs = [(i, j) for i in range(cfg.n) for j in range(i + 1, cfg.n)]
        keep = rng.random(len(pairs)) < p
        undirected = [pr for pr, k in zip(pairs, keep) if k]
    else:
        m = int(round(cfg.sparsity))
        if not 1 <= m < cfg.n:
            raise ValueError(f"BA attachment parameter {m} must be in [1, n)")
        ba = nx.barabasi_albert_graph(cfg.n, m, seed=int(rng.integers(2**31)))
        undirected = sorted(tuple(sorted(e)) for e in ba.edges())
    rank = rng.permutation(cfg.n)
    directed = set()
    for i, j in undirected:
        a, b = (i, j) if rank[i] < rank[j] else (j, i)
        directed.add((names[a], names[b]))

    if cfg.topology == "er":
        k = min(cfg.n, max(1, int(round(cfg.sparsity))))
        hooked = rng.choice(cfg.n, size=k, replace=False)
    else:
        p_edge = len(undirected) / (cfg.n * (cfg.n - 1) / 2)
        hooked = np.flatnonzero(rng.random(cfg.n) < p_edge)
        if hooked.size == 0:
            hooked = rng.choice(cfg.n, size=1)
    for i in sorted(int(h) for h in hooked):
        directed.add((names[i], OUTCOME))
    return MixedGraph(tuple(names) + (OUTCOME,), frozenset(directed))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class NodeParams:
    parents: tuple[str, ...]
    bias: float = 0.0
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    interactions: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cpt: np.ndarray | None = None

    def pairs(self) -> list[tuple[int, int]]:
        return list(combinations(range(len(self.parents)), 2))


def _configs(n_parents: int) -> np.ndarray:
    """All parent assignments, row c has bit i = parent i."""
    idx = np.arange(2**n_parents)
    return ((idx[:, None] >> np.arange(n_parents)) & 1).astype(np.float64)


@dataclass
class DiscreteSCM:
    dag: MixedGraph
    mode: str
    params: dict[str, NodeParams]
    outcome: str = OUTCOME

    def prob_one(self, node: str, pa_values: np.ndarray) -> np.ndarray:
        """P(node = 1) for each row of parent values (columns in NodeParams.parents order)."""
        np_ = self.params[node]
        pa_values = np.asarray(pa_values, dtype=np.float64)
        if pa_values.ndim == 1:
            pa_values = pa_values.reshape(1, -1)
        if self.mode == "cpt":
            code = (pa_values.astype(np.int64) << np.arange(len(np_.parents))).sum(axis=1)
            return np_.cpt[code]
        lin = np_.bias + pa_values @ np_.weights
        if self.mode == "logistic_interaction" and len(np_.interactions):
            for w, (i, j) in zip(np_.interactions, np_.pairs()):
                lin = lin + w * pa_values[:, i] * pa_values[:, j]
        if self.mode == "bernoulli_linear":
            return np.clip(lin, 0.0, 1.0)
        return _sigmoid(lin)

    def cpt(self, node: str) -> np.ndarray:
        """Probability table indexed by parent configuration (bit i = parent i)."""
        np_ = self.params[node]
        if np_.cpt is not None:
            return np_.cpt
        return self.prob_one(node, _configs(len(np_.parents)))

    def sample(self, n_samples: int, seed: int) -> BinaryDataset:
        rng = np.random.default_rng(seed)
        cols = list(self.dag.nodes)
        col = {c: i for i, c in enumerate(cols)}
        out = np.zeros((n_samples, len(cols)), dtype=np.uint8)
        for v in topological_order(self.dag):
            pa = self.params[v].parents
            probs = self.prob_one(v, out[:, [col[p] for p in pa]])
            out[:, col[v]] = rng.random(n_samples) < probs
        return BinaryDataset(tuple(cols), out, self.outcome)

    # JSON round trip
    def to_json(self) -> dict:
        params = {}
        for v, p in self.params.items():
            block: dict = {"parents": list(p.parents)}
            if self.mode == "cpt":
                block["cpt"] = [float(x) for x in p.cpt]
            else:
                block["bias"] = float(p.bias)
                block["weights"] = [float(x) for x in p.weights]
                if self.mode == "logistic_interaction":
                    block["interactions"] = [float(x) for x in p.interactions]
            params[v] = block
        return {
            "nodes": list(self.dag.nodes),
            "edges": [list(e) for e in sorted(self.dag.directed)],
            "outcome": self.outcome,
            "mode": self.mode,
            "params": params,
        }

    @classmethod
    def from_json(cls, obj: dict) -> DiscreteSCM:
        dag = MixedGraph(tuple(obj["nodes"]), frozenset(tuple(e) for e in obj["edges"]))
        params = {}
        for v, b in obj["params"].items():
            params[v] = NodeParams(
                tuple(b["parents"]),
                b.get("bias", 0.0),
                np.asarray(b.get("weights", []), dtype=np.float64),
                np.asarray(b.get("interactions", []), dtype=np.float64),
                np.asarray(b["cpt"], dtype=np.float64) if "cpt" in b else None,
            )
        return cls(dag, obj["mode"], params, obj.get("outcome", OUTCOME))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> DiscreteSCM:
        return cls.from_json(json.loads(Path(path).read_text()))


def _signed_uniform(rng: np.random.Generator, lo: float, hi: float, size: int) -> np.ndarray:
    return rng.uniform(lo, hi, size) * rng.choice((-1.0, 1.0), size)


def draw_parameters(dag: MixedGraph, mode: str, rng: np.random.Generator) -> DiscreteSCM:
    mode = canonical_mode(mode)
    if mode == "cpt":
        raise ValueError("cpt models come from fit_cpts, not from random weights")
    params = {}
    for v in dag.nodes:
        pa = tuple(sorted(dag.parents(v), key=dag.nodes.index))
        L = len(pa)
        if mode == "bernoulli_linear":
            for _ in range(BL_MAX_ATTEMPTS):
                b = rng.uniform(0.0, 1.0)
                w = rng.uniform(-1.0, 1.0, L)
                lo = b + w[w < 0].sum()
                hi = b + w[w > 0].sum()
                if lo >= 0.0 and hi <= 1.0:
                    break
            else:
                raise DataError(f"no bounded Bernoulli-linear weights for {v} with {L} parents")
            params[v] = NodeParams(pa, float(b), w)
            continue
        b = float(rng.uniform(*BIAS_RANGE))
        w = _signed_uniform(rng, *WEIGHT_RANGE, L)
        inter = np.zeros(0)
        if mode == "logistic_interaction":
            inter = _signed_uniform(rng, *INTERACTION_RANGE, L * (L - 1) // 2)
        params[v] = NodeParams(pa, b, w, inter)
    return DiscreteSCM(dag, mode, params)


def sample_parametric(
    dag: MixedGraph, mode: str, n_samples: int, seed: int
) -> tuple[BinaryDataset, DiscreteSCM]:
    if not dag.is_dag:
        raise ValueError("ground truth must be a DAG")
    ss_params, ss_data = np.random.SeedSequence(seed).spawn(2)
    scm = draw_parameters(dag, mode, np.random.default_rng(ss_params))
    data = scm.sample(n_samples, int(ss_data.generate_state(1)[0]))
    return data, scm


def fit_cpts(data: BinaryDataset, dag: MixedGraph, smoothing: float = 1.0) -> DiscreteSCM:
    """Laplace-smoothed conditional probability tables; unseen parent configs get 0.5."""
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    params = {}
    for v in dag.nodes:
        pa = tuple(sorted(dag.parents(v), key=dag.nodes.index))
        code = np.zeros(data.n_rows, dtype=np.int64)
        for i, p in enumerate(pa):
            code |= data.column(p).astype(np.int64) << i
        size = 2 ** len(pa)
        total = np.bincount(code, minlength=size).astype(np.float64)
        ones = np.bincount(code, weights=data.column(v).astype(np.float64), minlength=size)
        denom = total + 2 * smoothing
        with np.errstate(invalid="ignore", divide="ignore"):
            cpt = np.where(denom > 0, (ones + smoothing) / denom, 0.5)
        params[v] = NodeParams(pa, cpt=cpt)
    return DiscreteSCM(dag, "cpt", params, data.outcome)


def sample_from_cpts(scm: DiscreteSCM, n_samples: int, seed: int) -> BinaryDataset:
    if scm.mode != "cpt" or any(p.cpt is None for p in scm.params.values()):
        raise ValueError("sample_from_cpts needs a CPT model")
    return scm.sample(n_samples, seed)
