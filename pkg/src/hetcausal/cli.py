"""Command line: simulate | discover | effects | evaluate | report."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import metadata
from pathlib import Path
from typing import Sequence

from . import __version__
from .data import BinaryDataset, DataError
from .effects import analyze_causes, rank_causes, read_effects, write_effects
from .ensemble import read_ensemble, run_ensemble, write_ensemble
from .evaluation import GROUP_KEYS, evaluate_ensemble, report_row, summarize
from .events import aggregate_bag_of_events, apply_frequency_vocabulary, read_event_log
from .graph import GraphError, read_edgelist, write_edgelist
from .learners import LearnerParams, canonical_name
from .pipeline import DEFAULT_LEARNERS, CellSpec, simulate_cell
from .report import emit_report, ranked_rows
from .scores import ScoreConfig
from .synth import fit_cpts, sample_from_cpts

log = logging.getLogger("hetcausal")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    """Resolved settings of one run; recorded verbatim in the manifest."""

    command: str
    seed: int | None = None
    settings: dict = field(default_factory=dict)

    def learner_params(self) -> LearnerParams:
        s = self.settings
        return LearnerParams(
            alpha=s["alpha"],
            max_cond_size=s["max_cond"],
            ges_score_cfg=ScoreConfig("bdeu", s["ess"]),
            bootstrap_runs=s["bootstrap_runs"],
            seed=self.seed or 0,
            noisy_threshold=s["noisy_threshold"],
        )


# argument parsing

def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON file whose keys mirror the flags; flags win")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_discovery(p: argparse.ArgumentParser) -> None:
    p.add_argument("--learners", default=",".join(DEFAULT_LEARNERS), help="comma separated learner names")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--max-cond", type=int, default=5)
    p.add_argument("--bootstrap-runs", type=int, default=20)
    p.add_argument("--ess", type=float, default=1.0)
    p.add_argument("--noisy-threshold", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.5, help="majority-vote threshold")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetcausal", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hetcausal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="ground-truth DAGs and datasets for a grid of cells")
    _add_shared(p)
    p.add_argument("--topology", nargs="+", default=["er"], choices=["er", "ba"])
    p.add_argument("--nodes", nargs="+", type=int, default=[10])
    p.add_argument("--sparsity", nargs="+", type=float, default=[1.0])
    p.add_argument("--mode", nargs="+", default=["logistic"])
    p.add_argument("--seeds", type=int, help="number of seeds per cell")
    p.add_argument("--samples", type=int, help="rows per dataset (default nodes x 1000)")
    p.add_argument("--semi-data", help="real dataset to fit CPTs on (semi-synthetic mode)")
    p.add_argument("--semi-dag", help="edge-list DAG over the semi-synthetic dataset's columns")
    p.add_argument("--smoothing", type=float, default=1.0)

    p = sub.add_parser("discover", help="run the learner ensemble and compute cause support")
    _add_shared(p)
    p.add_argument("--data", help="binary dataset CSV with outcome column")
    p.add_argument("--log", help="event log CSV (unit_id,time,event) instead of --data")
    p.add_argument("--outcome-event", help="outcome event name in the log")
    p.add_argument("--outcome", default="Y", help="outcome column name")
    p.add_argument("--tau", type=int, help="repeat-outcome window")
    p.add_argument("--keep-fraction", type=float, default=1.0)
    _add_discovery(p)

    p = sub.add_parser("effects", help="ATE/HTE estimates and ranked causes")
    _add_shared(p)
    p.add_argument("--data", help="dataset CSV used for discovery")
    p.add_argument("--ensemble", help="discover output directory")
    p.add_argument("--outcome", default="Y")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--no-modifiers", action="store_true")
    p.add_argument("--rank-mode", default="risk", choices=["risk", "preventive"])
    p.add_argument("--top-n", type=int, default=10)

    p = sub.add_parser("evaluate", help="metrics tables over a simulated grid")
    _add_shared(p)
    p.add_argument("--grid", help="simulate output directory")
    p.add_argument("--with-effects", action="store_true", help="also compute significance support")
    _add_discovery(p)

    p = sub.add_parser("report", help="plot-data CSV and SVG from an effects report")
    _add_shared(p)
    p.add_argument("--effects", help="effects.json from the effects command")
    p.add_argument("--ensemble", help="discover output directory (for graph labels)")
    p.add_argument("--rank-mode", default="risk", choices=["risk", "preventive"])
    p.add_argument("--top-n", type=int, default=10)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise ConfigError(f"unknown command {command!r}")


def parse_config(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        sub = _subparser(parser, args.command)
        dests = {a.dest for a in sub._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - dests - {"config"})
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {unknown}")
        if isinstance(cfg.get("learners"), list):
            cfg["learners"] = ",".join(cfg["learners"])
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    for n in names:
        if getattr(args, n, None) is None:
            raise ConfigError(f"--{n.replace('_', '-')} is required for {args.command}")


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} {path} does not exist")
    return p


def _learners(spec: str) -> list[str]:
    try:
        return [canonical_name(n.strip()) for n in spec.split(",") if n.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _settings(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "seed", "out", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# manifest

def _versions() -> dict[str, str]:
    out = {"python": platform.python_version(), "hetcausal": __version__}
    for pkg in ("numpy", "scipy", "networkx", "joblib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: PipelineConfig, seeds: list[int]) -> None:
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {
        "command": cfg.command,
        "seed": cfg.seed,
        "seeds": seeds,
        "config": cfg.settings,
        "versions": _versions(),
        "outputs": {str(p.relative_to(out)): _sha256(p) for p in files},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# subcommands

def cmd_simulate(args, cfg: PipelineConfig, out: Path) -> list[int]:
    if args.seed is None and args.seeds is None:
        raise ConfigError("simulate needs --seed or --seeds")
    base = args.seed or 0
    seeds = [base + i for i in range(args.seeds or 1)]
    if args.semi_data or args.semi_dag:
        _require(args, "semi_data", "semi_dag")
        data = BinaryDataset.from_csv(_existing(args.semi_data, "dataset"))
        dag = read_edgelist(_existing(args.semi_dag, "DAG file"))
        if not dag.is_dag:
            raise DataError("semi-synthetic ground truth must be a DAG")
        missing = set(dag.nodes) - set(data.columns)
        if missing:
            raise DataError(f"DAG nodes missing from dataset: {sorted(missing)}")
        scm = fit_cpts(data.with_columns(list(dag.nodes)), dag, args.smoothing)
        n = args.samples or data.n_rows
        for s in seeds:
            cell = out / f"semi_N{n}_s{s}"
            cell.mkdir(parents=True, exist_ok=True)
            write_edgelist(dag, cell / "dag.txt")
            scm.save(cell / "scm.json")
            sample_from_cpts(scm, n, s).to_csv(cell / "data.csv")
            spec = {"topology": "semi", "n": len(dag.nodes) - 1, "sparsity": 0, "generator": "cpt", "seed": s, "samples": n}
            (cell / "cell.json").write_text(json.dumps(spec, indent=1, sort_keys=True) + "\n")
        return seeds
    for topo in args.topology:
        for n in args.nodes:
            for sp in args.sparsity:
                for mode in args.mode:
                    for s in seeds:
                        spec = CellSpec(topo, n, sp, mode, s, args.samples)
                        try:
                            c = simulate_cell(spec)
                        except ValueError as exc:
                            if isinstance(exc, DataError):
                                raise
                            raise ConfigError(str(exc)) from None
                        cell = out / spec.label
                        cell.mkdir(parents=True, exist_ok=True)
                        write_edgelist(c.truth, cell / "dag.txt")
                        c.scm.save(cell / "scm.json")
                        c.data.to_csv(cell / "data.csv")
                        body = asdict(spec) | {"samples": spec.n_samples}
                        (cell / "cell.json").write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")
    return seeds


def _load_discovery_input(args):
    if args.log:
        _require(args, "outcome_event", "tau")
        log_ = read_event_log(_existing(args.log, "event log"), args.outcome_event)
        data = aggregate_bag_of_events(log_, args.tau)
        if args.keep_fraction < 1.0:
            data = apply_frequency_vocabulary(data, args.keep_fraction)
        return data, log_
    _require(args, "data")
    data = BinaryDataset.from_csv(_existing(args.data, "dataset"), outcome=args.outcome)
    return data, None


def cmd_discover(args, cfg: PipelineConfig, out: Path) -> list[int]:
    data, log_ = _load_discovery_input(args)
    if not data.has_outcome:
        raise DataError(f"outcome column {data.outcome!r} missing from the dataset")
    learners = _learners(args.learners)
    result = run_ensemble(data, log=log_, learners=learners, params=cfg.learner_params(), n_jobs=args.jobs)
    write_ensemble(result, out)
    if log_ is not None:
        data.to_csv(out / "dataset.csv")
    return [cfg.learner_params().seed]


def cmd_effects(args, cfg: PipelineConfig, out: Path) -> list[int]:
    _require(args, "ensemble")
    ens_dir = _existing(args.ensemble, "ensemble directory")
    data_path = args.data or (ens_dir / "dataset.csv" if (ens_dir / "dataset.csv").exists() else None)
    if data_path is None:
        raise ConfigError("--data is required for effects")
    data = BinaryDataset.from_csv(_existing(str(data_path), "dataset"), outcome=args.outcome)
    if not data.has_outcome:
        raise DataError(f"outcome column {data.outcome!r} missing from the dataset")
    result = read_ensemble(ens_dir)
    records = analyze_causes(data, result, args.alpha, modifiers=not args.no_modifiers)
    write_effects(records, out / "effects.json")
    labels = [f"{k}_{n}" for k, n in enumerate(result.algorithm_names)]
    header, rows = ranked_rows(rank_causes(records, args.rank_mode, args.top_n), labels)
    with open(out / f"ranked_causes_{args.rank_mode}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return []


def _evaluate_cell(cell_dir: Path, learners, params: LearnerParams, threshold: float, with_effects: bool) -> dict:
    spec = json.loads((cell_dir / "cell.json").read_text())
    truth = read_edgelist(cell_dir / "dag.txt")
    data = BinaryDataset.from_csv(cell_dir / "data.csv")
    ens_dir = cell_dir / "ensemble"
    if (ens_dir / "ensemble.json").exists():
        result = read_ensemble(ens_dir)
    else:
        cell_params = replace(params, seed=params.seed + int(spec["seed"]))
        result = run_ensemble(data, learners=learners, params=cell_params)
        write_ensemble(result, ens_dir)
    effects = analyze_causes(data, result, params.alpha, modifiers=False) if with_effects else None
    report = evaluate_ensemble(result, truth, effects, threshold)
    row = {k: spec.get(k) for k in GROUP_KEYS}
    row["seed"] = spec["seed"]
    row["cell"] = cell_dir.name
    row.update(report_row(report))
    return row


def cmd_evaluate(args, cfg: PipelineConfig, out: Path) -> list[int]:
    _require(args, "grid")
    grid = _existing(args.grid, "grid directory")
    cells = sorted(p.parent for p in grid.glob("*/cell.json"))
    if not cells:
        raise DataError(f"no simulated cells under {grid}")
    learners = _learners(args.learners)
    params = cfg.learner_params()
    if args.jobs == 1:
        rows = [_evaluate_cell(c, learners, params, args.threshold, args.with_effects) for c in cells]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=args.jobs)(
            delayed(_evaluate_cell)(c, learners, params, args.threshold, args.with_effects) for c in cells
        )
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in r.items()})
    summarize(rows, out / "summary.csv")
    return sorted({int(r["seed"]) for r in rows})


def cmd_report(args, cfg: PipelineConfig, out: Path) -> list[int]:
    _require(args, "effects")
    records = read_effects(_existing(args.effects, "effects file"))
    names = None
    if args.ensemble:
        names = json.loads((_existing(args.ensemble, "ensemble directory") / "ensemble.json").read_text())["algorithms"]
    emit_report(records, args.rank_mode, args.top_n, out, names)
    return []


COMMANDS = {
    "simulate": cmd_simulate,
    "discover": cmd_discover,
    "effects": cmd_effects,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def run_pipeline(argv: Sequence[str]) -> int:
    try:
        args = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg = PipelineConfig(args.command, args.seed, _settings(args))
    out = Path(args.out or ".")
    try:
        if args.command in ("discover", "evaluate"):
            _learners(args.learners)
            cfg.learner_params()
        out.mkdir(parents=True, exist_ok=True)
        seeds = COMMANDS[args.command](args, cfg, out)
        write_manifest(out, cfg, seeds)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GraphError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # parameter validation inside the library (alpha range and the like)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("internal failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return run_pipeline(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
