"""Ranked-cause tables, plot-data CSVs and dependency-free SVG bar charts."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Literal, Sequence
from xml.sax.saxutils import escape

from .effects import CauseRecord, display_order, rank_causes

log = logging.getLogger(__name__)

PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)
BAR_WIDTH = 28
GROUP_GAP = 14
PLOT_HEIGHT = 240
MARGIN_LEFT = 60
MARGIN_TOP = 30
LABEL_SPACE = 90


def _fmt(x: float) -> str:
    # fixed precision keeps files byte-stable across platforms
    return f"{x:.6f}"


def _px(x: float) -> str:
    return f"{x:.2f}"


def _graph_labels(k: int, algorithm_names: Sequence[str] | None) -> list[str]:
    if algorithm_names and len(algorithm_names) == k:
        return [f"{i}_{n}" for i, n in enumerate(algorithm_names)]
    return [str(i) for i in range(k)]


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)


def _p_of(rec: CauseRecord, k: int):
    for ge in rec.graph_effects:
        if ge.graph == k:
            return "" if ge.p is None else _fmt(ge.p)
    return ""


def ranked_rows(
    top: Sequence[CauseRecord], labels: list[str]
) -> tuple[list[str], list[list]]:
    header = ["rank", "variable", "support"]
    header += [f"effect_{g}" for g in labels] + [f"p_{g}" for g in labels]
    rows = []
    for i, rec in enumerate(top, 1):
        row = [i, rec.variable, _fmt(rec.support)]
        row += [_fmt(e) for e in rec.effects]
        row += [_p_of(rec, k) for k in range(len(labels))]
        rows.append(row)
    return header, rows


def stacked_bar_svg(
    groups: Sequence[tuple[str, Sequence[float]]],
    series: Sequence[str],
    title: str,
    y_label: str = "effect",
) -> str:
    """Stacked bars: positive segments stack upward from 0, negative ones downward."""
    tops, bottoms = [0.0], [0.0]
    for _, vals in groups:
        tops.append(sum(v for v in vals if v > 0))
        bottoms.append(sum(v for v in vals if v < 0))
    hi, lo = max(tops), min(bottoms)
    if hi == lo:
        hi, lo = 1.0, 0.0
    scale = PLOT_HEIGHT / (hi - lo)

    def y_of(v: float) -> float:
        return MARGIN_TOP + (hi - v) * scale

    width = MARGIN_LEFT + len(groups) * (BAR_WIDTH + GROUP_GAP) + GROUP_GAP + 150
    height = MARGIN_TOP + PLOT_HEIGHT + LABEL_SPACE
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{MARGIN_LEFT}" y="18" font-size="13">{escape(title)}</text>',
        f'<line x1="{MARGIN_LEFT}" y1="{_px(y_of(0))}" x2="{width - 150}" y2="{_px(y_of(0))}" stroke="#333"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + PLOT_HEIGHT}" stroke="#333"/>',
    ]
    for v in (lo, 0.0, hi):
        out.append(
            f'<text x="{MARGIN_LEFT - 4}" y="{_px(y_of(v) + 4)}" text-anchor="end">{v:.3f}</text>'
        )
    out.append(
        f'<text x="14" y="{MARGIN_TOP + PLOT_HEIGHT / 2:.2f}" '
        f'transform="rotate(-90 14 {MARGIN_TOP + PLOT_HEIGHT / 2:.2f})" text-anchor="middle">{escape(y_label)}</text>'
    )
    for gi, (name, vals) in enumerate(groups):
        x = MARGIN_LEFT + GROUP_GAP + gi * (BAR_WIDTH + GROUP_GAP)
        up = down = 0.0
        for si, v in enumerate(vals):
            if v == 0:
                continue
            if v > 0:
                y0, y1 = y_of(up + v), y_of(up)
                up += v
            else:
                y0, y1 = y_of(down), y_of(down + v)
                down += v
            out.append(
                f'<rect x="{_px(x)}" y="{_px(y0)}" width="{BAR_WIDTH}" height="{_px(y1 - y0)}" '
                f'fill="{PALETTE[si % len(PALETTE)]}"><title>{escape(series[si])}: {v:.4f}</title></rect>'
            )
        lx, ly = x + BAR_WIDTH / 2, MARGIN_TOP + PLOT_HEIGHT + 10
        out.append(
            f'<text x="{_px(lx)}" y="{_px(ly)}" transform="rotate(45 {_px(lx)} {_px(ly)})">{escape(name)}</text>'
        )
    lx = width - 140
    for si, s in enumerate(series):
        y = MARGIN_TOP + si * 16
        out.append(f'<rect x="{lx}" y="{y}" width="10" height="10" fill="{PALETTE[si % len(PALETTE)]}"/>')
        out.append(f'<text x="{lx + 14}" y="{y + 9}">{escape(s)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _modifier_rows(records: Sequence[CauseRecord]) -> list[list]:
    rows = []
    for rec in records:
        for m in sorted(rec.modifiers, key=lambda m: (m.name, m.graph)):
            rows.append(
                [rec.variable, m.name, m.graph, _fmt(m.cate1), _fmt(m.cate0), _fmt(m.delta), _fmt(m.p), int(m.significant)]
            )
    return rows


def emit_report(
    records: Sequence[CauseRecord],
    mode: Literal["risk", "preventive"] = "risk",
    top_n: int = 10,
    out_dir: str | Path = ".",
    algorithm_names: Sequence[str] | None = None,
) -> list[Path]:
    """Write the ranked-cause CSV/SVG, long plot data and the effect-modifier report.

    Returns the written paths.  Empty ``records`` produce empty files and a warning.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "ranked": out / f"ranked_causes_{mode}.csv",
        "svg": out / f"causes_{mode}.svg",
        "plot": out / f"plot_data_{mode}.csv",
        "em": out / "modifiers.csv",
        "em_svg": out / "modifiers.svg",
    }
    if not records:
        log.warning("no cause records; writing empty report files")
        for p in paths.values():
            p.write_text("")
        return list(paths.values())

    k = len(records[0].effects)
    labels = _graph_labels(k, algorithm_names)
    top = rank_causes(records, mode, top_n)
    header, rows = ranked_rows(top, labels)
    _write_csv(paths["ranked"], header, rows)

    shown = display_order(top, mode)
    paths["svg"].write_text(
        stacked_bar_svg(
            [(r.variable, r.effects) for r in shown],
            labels,
            f"Multi-set total effects, top {len(top)} ({mode})",
        )
    )
    plot_rows = []
    for pos, rec in enumerate(shown):
        for g, e in enumerate(rec.effects):
            plot_rows.append([pos, rec.variable, labels[g], _fmt(e), _p_of(rec, g), int(rec.significance[g])])
    _write_csv(paths["plot"], ["position", "variable", "graph", "effect", "p", "significant"], plot_rows)

    em_rows = _modifier_rows(top)
    _write_csv(
        paths["em"], ["variable", "modifier", "graph", "cate1", "cate0", "delta", "p", "significant"], em_rows
    )
    # one bar group per (cause, modifier): CATE deltas stacked by graph
    em_groups: dict[tuple[str, str], list[float]] = {}
    for rec in top:
        for m in rec.modifiers:
            em_groups.setdefault((rec.variable, m.name), [0.0] * k)[m.graph] = m.delta
    paths["em_svg"].write_text(
        stacked_bar_svg(
            [(f"{v}|{z}", vals) for (v, z), vals in sorted(em_groups.items())],
            labels,
            "CATE deltas of candidate effect modifiers",
            "CATE(Z=1) - CATE(Z=0)",
        )
    )
    return list(paths.values())
