"""Event-log timelines, repeated-outcome labels and bag-of-events aggregation."""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import OUTCOME, BinaryDataset, DataError

log = logging.getLogger(__name__)

OOV = "OOV"


@dataclass(frozen=True)
class UnitTimeline:
    """One unit's binary timeline, stored sparsely as time -> events present."""

    unit_id: str
    events: Mapping[int, frozenset[str]]
    unit_covariates: Mapping[str, int] = field(default_factory=dict)
    time_covariates: Mapping[int, Mapping[str, int]] = field(default_factory=dict)
    length: int | None = None

    def __post_init__(self):
        events = {int(t): frozenset(ev) for t, ev in self.events.items() if ev}
        object.__setattr__(self, "events", events)
        horizon = self.horizon
        for t in list(events) + [int(t) for t in self.time_covariates]:
            if t < 1 or t > horizon:
                raise DataError(f"unit {self.unit_id}: time {t} outside [1, {horizon}]")

    @property
    def horizon(self) -> int:
        if self.length is not None:
            return self.length
        times = list(self.events) + [int(t) for t in self.time_covariates]
        return max(times, default=1)

    def times_of(self, event: str) -> list[int]:
        return sorted(t for t, ev in self.events.items() if event in ev)

    def first_time(self, event: str) -> int | None:
        times = [t for t, ev in self.events.items() if event in ev]
        return min(times) if times else None


@dataclass(frozen=True)
class EventLog:
    units: tuple[UnitTimeline, ...]
    event_vocabulary: tuple[str, ...]
    outcome_event: str

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "event_vocabulary", tuple(self.event_vocabulary))

    @property
    def feature_events(self) -> list[str]:
        return [e for e in self.event_vocabulary if e != self.outcome_event]

    def unit(self, unit_id: str) -> UnitTimeline:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise KeyError(unit_id)


@dataclass(frozen=True)
class OutcomeLabel:
    unit_id: str
    y: int
    t: int | None
    t_next: int | None
    tau: int


def next_outcome_time(timeline: UnitTimeline, t: int, outcome_event: str) -> int | None:
    """Earliest outcome strictly after reference time ``t``, or None."""
    times = timeline.times_of(outcome_event)
    if t not in times:
        raise DataError(f"invalid reference: unit {timeline.unit_id} has no outcome at t={t}")
    later = [p for p in times if p > t]
    return later[0] if later else None


def repeated_outcome_label(timeline: UnitTimeline, tau: int, outcome_event: str) -> OutcomeLabel:
    if tau < 1:
        raise ValueError("tau must be a positive integer")
    times = timeline.times_of(outcome_event)
    if not times:
        raise DataError(f"unit not in population: {timeline.unit_id} has no outcome")
    for t in times:
        t_next = next_outcome_time(timeline, t, outcome_event)
        # inclusive boundary: t' - t <= tau
        if t_next is not None and t_next - t <= tau:
            return OutcomeLabel(timeline.unit_id, 1, t, t_next, tau)
    first = times[0]
    return OutcomeLabel(timeline.unit_id, 0, first, next_outcome_time(timeline, first, outcome_event), tau)


def censoring_window(timeline: UnitTimeline, label: OutcomeLabel) -> tuple[int, bool]:
    """Return (cutoff, inclusive): events at times < cutoff (or <= when inclusive) are visible."""
    if label.y == 1:
        return label.t_next, False
    return label.t + label.tau, True


def _binary(value, what: str) -> int:
    if value not in (0, 1, True, False):
        raise DataError(f"{what} must be binary, got {value!r}")
    return int(value)


def aggregate_bag_of_events(log_: EventLog, tau: int) -> BinaryDataset:
    """Flatten each unit's timeline into one 0/1 row over its censoring window."""
    if not log_.units:
        raise DataError("empty event log")
    vocab = set(log_.event_vocabulary)
    events = log_.feature_events
    unit_cov = sorted({k for u in log_.units for k in u.unit_covariates})
    time_cov = sorted({k for u in log_.units for m in u.time_covariates.values() for k in m})
    columns = events + unit_cov + time_cov + [OUTCOME]
    col = {c: i for i, c in enumerate(columns)}
    if len(col) != len(columns):
        raise DataError("covariate names collide with event names")

    rows = np.zeros((len(log_.units), len(columns)), dtype=np.uint8)
    for r, unit in enumerate(log_.units):
        for ev in unit.events.values():
            unknown = ev - vocab
            if unknown:
                raise DataError(f"unknown event {sorted(unknown)[0]!r} in unit {unit.unit_id}")
        label = repeated_outcome_label(unit, tau, log_.outcome_event)
        cutoff, inclusive = censoring_window(unit, label)

        def visible(t: int) -> bool:
            return t <= cutoff if inclusive else t < cutoff

        for t, ev in unit.events.items():
            if visible(t):
                for e in ev:
                    if e != log_.outcome_event:
                        rows[r, col[e]] = 1
        for k, v in unit.unit_covariates.items():
            rows[r, col[k]] = _binary(v, f"unit covariate {k}")
        # time covariates: last value inside the censoring window
        for t in sorted(unit.time_covariates):
            if visible(t):
                for k, v in unit.time_covariates[t].items():
                    rows[r, col[k]] = _binary(v, f"time covariate {k}")
        rows[r, col[OUTCOME]] = label.y
    return BinaryDataset(tuple(columns), rows, OUTCOME)


def apply_frequency_vocabulary(
    dataset: BinaryDataset, keep_fraction: float, event_columns: list[str] | None = None
) -> BinaryDataset:
    """Keep the most frequent event columns and fold the rest into one OOV indicator."""
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    if event_columns is None:
        event_columns = dataset.features
    if not event_columns:
        raise DataError("dataset has no event columns")
    counts = {c: int(dataset.column(c).sum()) for c in event_columns}
    n_keep = max(1, math.ceil(keep_fraction * len(event_columns) - 1e-9))
    ranked = sorted(event_columns, key=lambda c: (-counts[c], c))
    kept = set(ranked[:n_keep])
    dropped = [c for c in event_columns if c not in kept]

    oov = np.zeros(dataset.n_rows, dtype=np.uint8)
    if dropped:
        oov = dataset.select(dropped).max(axis=1)
    keep_cols = [c for c in event_columns if c in kept]
    others = [c for c in dataset.columns if c not in event_columns and c != dataset.outcome]
    tail = [dataset.outcome] if dataset.has_outcome else []
    names = keep_cols + [OOV] + others + tail
    values = np.column_stack(
        [dataset.select(keep_cols), oov[:, None], dataset.select(others), dataset.select(tail)]
    )
    return BinaryDataset(tuple(names), values, dataset.outcome)


def read_event_log(
    path: str | Path, outcome_event: str, vocabulary: list[str] | None = None
) -> EventLog:
    """Read a ``unit_id,time,event`` CSV; units without any outcome are left out."""
    per_unit: dict[str, dict[int, set[str]]] = defaultdict(lambda: defaultdict(set))
    seen: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"unit_id", "time", "event"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header unit_id,time,event")
        for row in reader:
            uid = row["unit_id"]
            if uid not in per_unit:
                seen.append(uid)
            try:
                t = int(row["time"])
            except ValueError:
                raise DataError(f"{path}: non-integer time {row['time']!r}") from None
            per_unit[uid][t].add(row["event"])
    if vocabulary is None:
        names = {e for u in per_unit.values() for ev in u.values() for e in ev}
        vocabulary = sorted(names - {outcome_event}) + [outcome_event]
    units = []
    for uid in seen:
        tl = UnitTimeline(uid, {t: frozenset(ev) for t, ev in per_unit[uid].items()})
        if tl.first_time(outcome_event) is None:
            continue
        units.append(tl)
    dropped = len(seen) - len(units)
    if dropped:
        log.info("dropped %d units with no outcome occurrence", dropped)
    return EventLog(tuple(units), tuple(vocabulary), outcome_event)


def write_event_log(log_: EventLog, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit_id", "time", "event"])
        for u in log_.units:
            for t in sorted(u.events):
                for e in sorted(u.events[t]):
                    w.writerow([u.unit_id, t, e])
