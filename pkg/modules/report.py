"""Correlation tables and scatter data."""

import logging
from dataclasses import dataclass

import pandas as pd

from modules.ingest import truncate
from modules.stats import MARKED, NONE

logger = logging.getLogger('url_ranker')

TABLE_COLUMNS = ["comparison", "n", "tau", "p", "classification", "dropped", "drop_reason"]
SCATTER_COLUMNS = ["engine", "item_id", "expert_rank", "engine_rank"]

EXPERT = "expert"
INTER_ENGINE = "inter-engine"


@dataclass(frozen=True)
class ComparisonCell:
    """One row of a correlation table: a comparison at one list length"""

    comparison: str
    n: int
    tau: float = None
    p: float = None
    classification: str = None
    dropped: bool = False
    drop_reason: str = None
    kind: str = EXPERT
    unindexed: int = 0

    def __post_init__(self):
        if self.dropped and (not self.drop_reason or self.tau is not None or self.p is not None):
            raise ValueError("a dropped cell needs a reason and carries no tau or p")
        if not self.dropped and (self.tau is None or self.p is None):
            raise ValueError("a computed cell needs tau and p")

    @classmethod
    def from_result(cls, comparison, result, kind=EXPERT):
        return cls(comparison=comparison, n=result.n, tau=result.tau, p=result.p_two_sided,
                   classification=result.classification, kind=kind, unindexed=result.dropped)

    @classmethod
    def dropped_cell(cls, comparison, n, reason, kind=EXPERT):
        return cls(comparison=comparison, n=n, dropped=True, drop_reason=reason, kind=kind)

    @property
    def marked(self):
        return not self.dropped and self.classification in MARKED

    @property
    def note(self):
        """Annotation for a computed cell whose n was cut by unindexed URLs"""
        if self.dropped or not self.unindexed:
            return ""
        return f"{self.unindexed} unindexed"


def _fmt(value):
    return f"{value:.4f}"


def cells_to_frame(cells):
    rows = []
    for cell in cells:
        rows.append({
            "comparison": cell.comparison,
            "n": cell.n,
            "tau": "" if cell.dropped else _fmt(cell.tau),
            "p": "" if cell.dropped else _fmt(cell.p),
            "classification": "" if cell.dropped else cell.classification,
            "dropped": "true" if cell.dropped else "false",
            "drop_reason": cell.drop_reason or cell.note,
        })
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def summarize_cells(cells):
    """Counts of tests, significant and marked results, overall and per comparison kind"""
    summary = {"tests": 0, "significant": 0, "marked": 0, "dropped": 0}
    for kind in (EXPERT, INTER_ENGINE):
        summary[kind] = {"tests": 0, "significant": 0, "marked": 0}

    for cell in cells:
        if cell.dropped:
            summary["dropped"] += 1
            continue
        significant = cell.classification != NONE
        for bucket in (summary, summary[cell.kind]):
            bucket["tests"] += 1
            bucket["significant"] += significant
            bucket["marked"] += cell.marked
    return summary


def _summary_lines(summary):
    lines = [
        f"significant (p < 0.05) in {summary['significant']} of {summary['tests']} tests, "
        f"{summary['marked']} moderate or strong"
    ]
    for kind in (EXPERT, INTER_ENGINE):
        part = summary[kind]
        lines.append(f"  {kind}: {part['significant']} of {part['tests']} significant, {part['marked']} marked")
    if summary["dropped"]:
        lines.append(f"  dropped cells: {summary['dropped']}")
    return lines


def correlation_table(cells):
    """Text table and CSV for a list of cells, rendered in the given order"""
    cells = list(cells)
    lines = [f"{'comparison':<20}{'n':>4}  {'tau':>7}  {'p':>6}  mark"]
    for cell in cells:
        if cell.dropped:
            lines.append(f"{cell.comparison:<20}{cell.n:>4}  dropped: {cell.drop_reason}")
            continue
        mark = "*" if cell.marked else ""
        if cell.note:
            mark = f"{mark} ({cell.note})".lstrip()
        lines.append(f"{cell.comparison:<20}{cell.n:>4}  {_fmt(cell.tau):>7}  {_fmt(cell.p):>6}  {mark}".rstrip())

    if cells:
        lines.append("")
        lines.extend(_summary_lines(summarize_cells(cells)))

    text = "\n".join(lines) + "\n"
    csv = cells_to_frame(cells).to_csv(index=False, lineterminator="\n")
    return text, csv


def scatter_data(expert, rankings, n):
    """CSV of (engine, item, expert rank, engine rank) over the expert's top n"""
    window = truncate(expert, n)
    rows = []
    for engine, ranking in rankings.items():
        for entry in window.entries:
            position = ranking.position(entry.url)
            rows.append({
                "engine": engine,
                "item_id": entry.url,
                "expert_rank": entry.rank,
                "engine_rank": "" if position is None else str(position),
            })
    logger.debug(f"Scatter data for {expert.name} n={n}: {len(rows)} rows")
    return pd.DataFrame(rows, columns=SCATTER_COLUMNS).to_csv(index=False, lineterminator="\n")
