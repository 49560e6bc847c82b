"""Simulation cells: ground truth -> data -> ensemble -> metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import BinaryDataset
from .effects import CauseRecord, analyze_causes
from .ensemble import EnsembleResult, run_ensemble
from .evaluation import EvalReport, evaluate_ensemble, report_row
from .graph import MixedGraph
from .learners import LearnerParams
from .synth import DagGenConfig, DiscreteSCM, random_dag, sample_parametric

DEFAULT_LEARNERS = ("pc", "hc", "mmhc", "ges", "noisy")


@dataclass(frozen=True)
class CellSpec:
    topology: str
    n: int
    sparsity: float
    generator: str
    seed: int
    samples: int | None = None

    @property
    def n_samples(self) -> int:
        return self.samples if self.samples is not None else self.n * 1000

    @property
    def label(self) -> str:
        return f"{self.topology}_n{self.n}_sp{self.sparsity:g}_{self.generator}_N{self.n_samples}_s{self.seed}"


@dataclass
class Cell:
    spec: CellSpec
    truth: MixedGraph
    scm: DiscreteSCM
    data: BinaryDataset


def simulate_cell(spec: CellSpec) -> Cell:
    ss_dag, ss_data = np.random.SeedSequence(spec.seed).spawn(2)
    dag = random_dag(DagGenConfig(spec.topology, spec.n, spec.sparsity, int(ss_dag.generate_state(1)[0])))
    data, scm = sample_parametric(dag, spec.generator, spec.n_samples, int(ss_data.generate_state(1)[0]))
    return Cell(spec, dag, scm, data)


def discover_and_evaluate(
    cell: Cell,
    learners: Sequence[str] = DEFAULT_LEARNERS,
    params: LearnerParams = LearnerParams(),
    with_effects: bool = False,
) -> tuple[EnsembleResult, EvalReport, list[CauseRecord] | None]:
    result = run_ensemble(cell.data, learners=learners, params=params)
    effects = analyze_causes(cell.data, result, params.alpha, modifiers=False) if with_effects else None
    return result, evaluate_ensemble(result, cell.truth, effects), effects


def cell_row(spec: CellSpec, report: EvalReport) -> dict:
    row = {
        "topology": spec.topology,
        "n": spec.n,
        "sparsity": spec.sparsity,
        "generator": spec.generator,
        "samples": spec.n_samples,
        "seed": spec.seed,
    }
    row.update(report_row(report))
    return row
