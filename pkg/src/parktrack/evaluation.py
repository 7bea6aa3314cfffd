"""
Accuracy harness: MAE / MPE against a reference device, and golden-table
reproduction of the published field results.

The published 22-subject tables ship as CSV fixtures in ``parktrack/data``.
Recomputing the published summary metrics from the published per-subject
rows does not give the published summary values; :func:`evaluate` keeps
both side by side and flags the gap instead of fitting to it.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .activity_model import (
    MET_BANDS,
    calories_per_minute,
    classify_met,
    format_truncated,
    total_calories,
)
from .errors import InvalidParameterError, RowError

PUBLISHED_MAE_KCAL = 5.64
PUBLISHED_MPE_PERCENT = 1.96
STUDY_DURATION_S = 1800.0


@dataclass(frozen=True)
class ComparisonRecord:
    subject_id: str
    dlicp_kcal: float
    reference_kcal: float

    @property
    def deviation(self) -> float:
        return self.dlicp_kcal - self.reference_kcal


@dataclass(frozen=True)
class RosterRow:
    subject_id: str
    weight_kg: float
    avg_pace_kmh: float


@dataclass(frozen=True)
class Table3Row:
    subject_id: str
    weight_kg: float
    avg_pace_kmh: float
    met: float
    kcal_per_min: float
    total_kcal: float

    @property
    def kcal_per_min_display(self) -> str:
        return format_truncated(self.kcal_per_min)

    @property
    def total_kcal_display(self) -> str:
        return format_truncated(self.total_kcal)


@dataclass(frozen=True)
class EvalReport:
    n: int
    mae_kcal: float
    mpe_percent: float
    mape_percent: float
    per_subject_deviation: list[tuple[str, float]]
    paper_mae: float = PUBLISHED_MAE_KCAL
    paper_mpe: float = PUBLISHED_MPE_PERCENT

    @property
    def mae_matches_published(self) -> bool:
        return abs(self.mae_kcal - self.paper_mae) < 0.005

    @property
    def mpe_matches_published(self) -> bool:
        return abs(self.mpe_percent - self.paper_mpe) < 0.005

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mae": self.mae_kcal,
            "mpe": self.mpe_percent,
            "mape": self.mape_percent,
            "paper_mae": self.paper_mae,
            "paper_mpe": self.paper_mpe,
            "mae_matches_paper": self.mae_matches_published,
            "mpe_matches_paper": self.mpe_matches_published,
            "per_subject": [{"subject_id": s, "deviation": d} for s, d in self.per_subject_deviation],
        }


def _check_records(records) -> list[ComparisonRecord]:
    records = list(records)
    if not records:
        raise InvalidParameterError("at least one comparison record is required")
    return records


def mae(records: Iterable[ComparisonRecord]) -> float:
    """Mean absolute calorie difference between system and reference."""
    records = _check_records(records)
    return math.fsum(abs(r.deviation) for r in records) / len(records)


def mpe(records: Iterable[ComparisonRecord]) -> float:
    """Signed mean percentage error, relative to the system's reading."""
    records = _check_records(records)
    for r in records:
        if r.dlicp_kcal == 0:
            raise InvalidParameterError(f"{r.subject_id}: system reading is zero, percentage undefined")
    return math.fsum(r.deviation / r.dlicp_kcal for r in records) / len(records) * 100.0


def mape(records: Iterable[ComparisonRecord]) -> float:
    """Absolute-value variant of :func:`mpe`, for diagnostics only."""
    records = _check_records(records)
    for r in records:
        if r.dlicp_kcal == 0:
            raise InvalidParameterError(f"{r.subject_id}: system reading is zero, percentage undefined")
    return math.fsum(abs(r.deviation / r.dlicp_kcal) for r in records) / len(records) * 100.0


def natural_key(subject_id: str):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", subject_id)]


def deviation_table(records: Iterable[ComparisonRecord]) -> list[tuple[str, float]]:
    """``(subject_id, dlicp - reference)`` ordered by subject id."""
    records = _check_records(records)
    return [(r.subject_id, r.deviation) for r in sorted(records, key=lambda r: natural_key(r.subject_id))]


def evaluate(records: Iterable[ComparisonRecord]) -> EvalReport:
    records = _check_records(records)
    return EvalReport(len(records), mae(records), mpe(records), mape(records), deviation_table(records))


def reproduce_table3(
    roster: Sequence[RosterRow],
    duration_s: float = STUDY_DURATION_S,
    bands=MET_BANDS,
) -> list[Table3Row]:
    """Apply the MET band and calorie formulas to each roster row.

    Raises:
        RowError: with the row index, for a non-positive weight or a
            negative / non-finite pace.
    """
    rows = []
    for i, r in enumerate(roster):
        try:
            met = classify_met(r.avg_pace_kmh, bands)
            rate = calories_per_minute(met, r.weight_kg)
            total = total_calories(rate, duration_s)
        except InvalidParameterError as exc:
            raise RowError(i, f"{r.subject_id}: {exc}") from None
        rows.append(Table3Row(r.subject_id, r.weight_kg, r.avg_pace_kmh, met, rate, total))
    return rows


# -- fixtures and CSV I/O -----------------------------------------------------


def _read_csv(fh, required: tuple[str, ...]) -> list[dict]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or not set(required) <= set(reader.fieldnames):
        raise InvalidParameterError(f"CSV header must contain {list(required)}")
    return list(reader)


def _float(row: dict, key: str, index: int) -> float:
    try:
        value = float(row[key])
    except (TypeError, ValueError):
        raise RowError(index, f"{key}={row.get(key)!r} is not a number") from None
    if not math.isfinite(value):
        raise RowError(index, f"{key} must be finite")
    return value


def parse_roster_rows(fh) -> list[RosterRow]:
    rows = []
    for i, row in enumerate(_read_csv(fh, ("subject_id", "weight_kg", "avg_pace_kmh"))):
        weight = _float(row, "weight_kg", i)
        pace = _float(row, "avg_pace_kmh", i)
        if weight <= 0:
            raise RowError(i, "weight_kg must be positive")
        if pace < 0:
            raise RowError(i, "avg_pace_kmh must be >= 0")
        rows.append(RosterRow(row["subject_id"], weight, pace))
    return rows


def parse_comparison_rows(fh) -> list[ComparisonRecord]:
    records = []
    for i, row in enumerate(_read_csv(fh, ("subject_id", "dlicp_kcal", "reference_kcal"))):
        dlicp = _float(row, "dlicp_kcal", i)
        ref = _float(row, "reference_kcal", i)
        if dlicp <= 0:
            raise RowError(i, "dlicp_kcal must be positive")
        if ref < 0:
            raise RowError(i, "reference_kcal must be >= 0")
        records.append(ComparisonRecord(row["subject_id"], dlicp, ref))
    return records


def load_roster(path=None) -> list[RosterRow]:
    """Read a roster CSV; the shipped 22-subject fixture when ``path`` is None."""
    if path is None:
        with resources.files(__package__).joinpath("data/table3.csv").open() as fh:
            return parse_roster_rows(fh)
    with open(path, newline="") as fh:
        return parse_roster_rows(fh)


def load_comparisons(path=None) -> list[ComparisonRecord]:
    if path is None:
        with resources.files(__package__).joinpath("data/table4.csv").open() as fh:
            return parse_comparison_rows(fh)
    with open(path, newline="") as fh:
        return parse_comparison_rows(fh)


def load_published_table3() -> list[dict]:
    """Shipped Table 3 rows including the printed MET / kcal columns (as text)."""
    with resources.files(__package__).joinpath("data/table3.csv").open() as fh:
        return list(csv.DictReader(fh))


def load_published_table4() -> list[dict]:
    with resources.files(__package__).joinpath("data/table4.csv").open() as fh:
        return list(csv.DictReader(fh))


# -- reporting ----------------------------------------------------------------


def format_table3(rows: Sequence[Table3Row]) -> str:
    lines = [f"{'Subject':<8}{'Weight':>8}{'Pace':>8}{'MET':>7}{'kcal/min':>10}{'Total':>10}"]
    for r in rows:
        lines.append(
            f"{r.subject_id:<8}{r.weight_kg:>8g}{r.avg_pace_kmh:>8g}{r.met:>7g}"
            f"{r.kcal_per_min_display:>10}{r.total_kcal_display:>10}"
        )
    return "\n".join(lines)


def format_report(report: EvalReport, records: Sequence[ComparisonRecord]) -> str:
    by_id = {r.subject_id: r for r in records}
    lines = [f"{'Subject':<8}{'System':>10}{'Reference':>11}{'Deviation':>11}"]
    for sid, dev in report.per_subject_deviation:
        r = by_id[sid]
        lines.append(f"{sid:<8}{r.dlicp_kcal:>10.2f}{r.reference_kcal:>11.2f}{dev:>+11.2f}")
    flag = lambda ok: "" if ok else "  << differs from published value"  # noqa: E731
    lines += [
        "",
        f"N          {report.n}",
        f"MAE        {report.mae_kcal:.4f} kcal   (published {report.paper_mae}){flag(report.mae_matches_published)}",
        f"MPE        {report.mpe_percent:.4f} %      (published {report.paper_mpe}){flag(report.mpe_matches_published)}",
        f"MAPE       {report.mape_percent:.4f} %      (absolute variant, diagnostic)",
    ]
    return "\n".join(lines)


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"
