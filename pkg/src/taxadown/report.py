"""Accuracy breakdowns and funnel statistics for pipeline outcomes.

Re-labeled detections (centroid-admitted and adaptively re-classified) are
grouped by their original label pool and graded against ground truth at the
final label's taxonomic level: a species-level final must match all six rank
fields, a class-level final only down to class. Blank or unknown ground truth
counts as incorrect — uncertain cases are charged against the pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MissingGroundTruth
from .ingest import Dataset
from .pipeline import DecidedBy, PipelineOutcome
from .taxonomy import RANKS, Label

# Stages whose outcomes count as re-classifications in the pool table.
_RECLASSIFYING = (DecidedBy.STAGE3, DecidedBy.STAGE5)


@dataclass(frozen=True)
class LabelPoolStats:
    """One table row: re-classifications that started from this label pool."""

    pool: Label
    reclassified: int
    to_species: int
    correct: int
    incorrect: int
    accuracy: float


@dataclass(frozen=True)
class ReportTotals:
    reclassified: int
    to_species: int
    correct: int
    incorrect: int
    accuracy: float


@dataclass(frozen=True)
class Report:
    pools: tuple[LabelPoolStats, ...]
    totals: ReportTotals
    funnel: dict[str, int]


def grade(final_label: Label, ground_truth: Label | None) -> bool:
    """Correct iff ground truth matches the final label at the final's level."""
    if ground_truth is None or not ground_truth.is_taxon or not final_label.is_taxon:
        return False
    level_idx = RANKS.index(final_label.taxon.level())
    final_ranks = final_label.taxon.rank_values()[: level_idx + 1]
    truth_ranks = ground_truth.taxon.rank_values()[: level_idx + 1]
    return final_ranks == truth_ranks


def build_report(outcomes: Sequence[PipelineOutcome], ds: Dataset) -> Report:
    """Aggregate re-classifications per original pool plus funnel counts.

    Raises MissingGroundTruth listing every re-classified detection that has
    no ground-truth label.
    """
    funnel: dict[str, int] = {}
    for out in outcomes:
        funnel[out.decided_by.value] = funnel.get(out.decided_by.value, 0) + 1

    reclassified = [o for o in outcomes if o.decided_by in _RECLASSIFYING]
    missing = [
        o.detection_id
        for o in reclassified
        if ds.get(o.detection_id) is None or ds.get(o.detection_id).ground_truth is None
    ]
    if missing:
        raise MissingGroundTruth(missing)

    by_pool: dict[str, list[PipelineOutcome]] = {}
    for out in reclassified:
        by_pool.setdefault(out.original_label.render(), []).append(out)

    pools = []
    for _, members in by_pool.items():
        correct = sum(grade(o.final_label, ds.get(o.detection_id).ground_truth) for o in members)
        to_species = sum(
            1 for o in members if o.final_label.is_taxon and o.final_label.taxon.is_species_level
        )
        pools.append(
            LabelPoolStats(
                pool=members[0].original_label,
                reclassified=len(members),
                to_species=to_species,
                correct=correct,
                incorrect=len(members) - correct,
                accuracy=correct / len(members),
            )
        )
    pools.sort(key=lambda s: (-s.reclassified, s.pool.render()))

    total_n = sum(s.reclassified for s in pools)
    total_correct = sum(s.correct for s in pools)
    totals = ReportTotals(
        reclassified=total_n,
        to_species=sum(s.to_species for s in pools),
        correct=total_correct,
        incorrect=total_n - total_correct,
        accuracy=total_correct / total_n if total_n else 0.0,
    )
    return Report(pools=tuple(pools), totals=totals, funnel=funnel)


def accuracy_percent(correct: int, total: int) -> str:
    """Exact rational percentage rounded half-up to one decimal, e.g. '96.5'."""
    if total == 0:
        return "0.0"
    pct = Decimal(correct) * 100 / Decimal(total)
    return str(pct.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


_COLUMNS = ("Original Label", "Re-classified", "To Species", "Correct", "Incorrect", "Accuracy")
_WIDTHS = (22, 14, 11, 8, 10, 9)


def _row(cells: Iterable[str]) -> str:
    parts = []
    for i, cell in enumerate(cells):
        parts.append(cell.ljust(_WIDTHS[i]) if i == 0 else cell.rjust(_WIDTHS[i]))
    return "  ".join(parts).rstrip()


def render_report(report: Report) -> str:
    """Fixed-width text table plus the per-stage funnel; byte-stable."""
    lines = [_row(_COLUMNS), _row(tuple("-" * w for w in _WIDTHS))]
    for s in report.pools:
        lines.append(
            _row(
                (
                    s.pool.display(),
                    str(s.reclassified),
                    str(s.to_species),
                    str(s.correct),
                    str(s.incorrect),
                    accuracy_percent(s.correct, s.reclassified) + "%",
                )
            )
        )
    t = report.totals
    lines.append(
        _row(
            (
                "Total",
                str(t.reclassified),
                str(t.to_species),
                str(t.correct),
                str(t.incorrect),
                accuracy_percent(t.correct, t.reclassified) + "%",
            )
        )
    )
    lines.append("")
    lines.append("Pipeline funnel:")
    for stage in [d.value for d in DecidedBy]:
        if stage in report.funnel:
            lines.append(f"  {stage:<15s} {report.funnel[stage]:>6d}")
    return "\n".join(lines) + "\n"


def write_report_json(report: Report, path: str | Path) -> None:
    """Machine-readable companion to the text table."""
    payload = {
        "pools": [
            {
                "pool": s.pool.render(),
                "reclassified": s.reclassified,
                "to_species": s.to_species,
                "correct": s.correct,
                "incorrect": s.incorrect,
                "accuracy_percent": accuracy_percent(s.correct, s.reclassified),
            }
            for s in report.pools
        ],
        "totals": {
            "reclassified": report.totals.reclassified,
            "to_species": report.totals.to_species,
            "correct": report.totals.correct,
            "incorrect": report.totals.incorrect,
            "accuracy_percent": accuracy_percent(report.totals.correct, report.totals.reclassified),
        },
        "funnel": {k: report.funnel[k] for k in sorted(report.funnel)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
