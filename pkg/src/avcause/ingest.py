"""Merge incident-report CSV exports, drop unusable rows, unify the rest.

Reports arrive as per-program CSV files (ADS, ADAS, Other). Each kept report
is reduced to four columns: report id, reporting entity/make, a full-text
field that folds the remaining structured metadata in with the narrative,
and the program category the source file implies.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

CATEGORY_ADS = "ADS"
CATEGORY_ADAS = "ADAS"
CATEGORY_OTHER = "Other"
CATEGORIES = (CATEGORY_ADS, CATEGORY_ADAS, CATEGORY_OTHER)

REASON_MISSING = "MissingNarrative"
REASON_REDACTED = "RedactedNarrative"
REASON_DUPLICATE = "DuplicateId"

DEFAULT_REDACTION_MARKERS = (
    "[REDACTED, MAY CONTAIN CONFIDENTIAL BUSINESS INFORMATION]",
)

# Narratives that are nothing but bracketed upper-case boilerplate count as
# redacted even when the exact marker wording drifts between data releases.
_BRACKETED_ONLY = re.compile(r"^(?:\s*\[[^\[\]a-z]+\]\s*)+$")


class IngestError(ValueError):
    """Unreadable source file or a header missing a required column."""


@dataclass(frozen=True)
class RawReport:
    report_id: str
    reporting_entity: str
    make: str
    model: str
    category: str
    narrative: str
    # Remaining source columns in file order, (header, value) pairs.
    metadata: tuple[tuple[str, str], ...] = ()
    duplicate: bool = False


@dataclass(frozen=True)
class UnifiedRecord:
    report_id: str
    entity_make: str
    full_text: str
    category: str


@dataclass(frozen=True)
class DroppedReport:
    report_id: str
    reason: str


@dataclass(frozen=True)
class FilterOutcome:
    kept: list[UnifiedRecord]
    dropped: list[DroppedReport]


def _norm_header(name: str) -> str:
    return re.sub(r"[\s_]+", " ", name.strip().lower())


_ID_HEADERS = ("report id",)
_NARRATIVE_HEADERS = ("narrative",)
_ENTITY_HEADERS = ("reporting entity",)
_MAKE_HEADERS = ("make",)


def _find_column(header: list[str], wanted: tuple[str, ...]) -> int | None:
    normed = [_norm_header(h) for h in header]
    for name in wanted:
        if name in normed:
            return normed.index(name)
    return None


def _read_csv(path: Path, category: str) -> list[RawReport]:
    try:
        fh = open(path, encoding="utf-8-sig", errors="replace", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, no header row") from None
        id_col = _find_column(header, _ID_HEADERS)
        if id_col is None:
            raise IngestError(f"{path}: missing required column 'Report ID'")
        narrative_col = _find_column(header, _NARRATIVE_HEADERS)
        if narrative_col is None:
            raise IngestError(f"{path}: missing required column 'Narrative'")
        entity_col = _find_column(header, _ENTITY_HEADERS)
        make_col = _find_column(header, _MAKE_HEADERS)
        model_col = _find_column(header, ("model",))

        reports = []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            cells = list(row) + [""] * (len(header) - len(row))
            report_id = cells[id_col].strip()
            if not report_id:
                raise IngestError(f"{path}: row {reader.line_num} has an empty report id")
            metadata = tuple(
                (header[i].strip(), cells[i])
                for i in range(len(header))
                if i not in (id_col, narrative_col, entity_col, make_col)
            )
            reports.append(
                RawReport(
                    report_id=report_id,
                    reporting_entity=cells[entity_col].strip() if entity_col is not None else "",
                    make=cells[make_col].strip() if make_col is not None else "",
                    model=cells[model_col].strip() if model_col is not None else "",
                    category=category,
                    narrative=cells[narrative_col],
                    metadata=metadata,
                )
            )
        return reports


def merge_sources(
    file_paths: list[str | Path],
    category_map: dict[str | Path, str],
) -> list[RawReport]:
    """Read every source file and flag duplicate ids, keeping first occurrences.

    category_map assigns each path its program category; a missing entry is
    a caller error.
    """
    normalized = {str(Path(k)): v for k, v in category_map.items()}
    merged: list[RawReport] = []
    seen: set[str] = set()
    for raw_path in file_paths:
        path = Path(raw_path)
        try:
            category = normalized[str(path)]
        except KeyError:
            raise IngestError(f"no category assigned for {path}") from None
        if category not in CATEGORIES:
            raise IngestError(f"unknown category {category!r} for {path}")
        for report in _read_csv(path, category):
            if report.report_id in seen:
                report = replace(report, duplicate=True)
            else:
                seen.add(report.report_id)
            merged.append(report)
    return merged


def _is_redacted(narrative: str, markers: tuple[str, ...]) -> bool:
    text = narrative.strip()
    if _BRACKETED_ONLY.match(text):
        return True
    pattern = re.compile("|".join(re.escape(m) for m in markers), re.IGNORECASE)
    return not pattern.sub("", text).strip()


def unify(report: RawReport) -> UnifiedRecord:
    """Fold structured metadata back into one text field, narrative last."""
    lines = [f"{name}: {value}" for name, value in report.metadata if value.strip()]
    lines.append("Narrative:")
    lines.append(report.narrative)
    entity_make = "/".join(p for p in (report.reporting_entity, report.make) if p)
    return UnifiedRecord(
        report_id=report.report_id,
        entity_make=entity_make,
        full_text="\n".join(lines),
        category=report.category,
    )


def filter_and_unify(
    reports: list[RawReport],
    redaction_markers: tuple[str, ...] = DEFAULT_REDACTION_MARKERS,
) -> FilterOutcome:
    """Partition reports into kept unified records and dropped (id, reason) pairs.

    Drop reasons, in precedence order: flagged duplicate id, empty narrative,
    narrative consisting solely of redaction-marker text.
    """
    if not redaction_markers:
        raise ValueError("redaction_markers must not be empty")
    kept: list[UnifiedRecord] = []
    dropped: list[DroppedReport] = []
    for report in reports:
        if report.duplicate:
            dropped.append(DroppedReport(report.report_id, REASON_DUPLICATE))
        elif not report.narrative.strip():
            dropped.append(DroppedReport(report.report_id, REASON_MISSING))
        elif _is_redacted(report.narrative, redaction_markers):
            dropped.append(DroppedReport(report.report_id, REASON_REDACTED))
        else:
            kept.append(unify(report))
    return FilterOutcome(kept=kept, dropped=dropped)


def entity_distribution(records: list[UnifiedRecord]) -> list[tuple[str, int, float]]:
    """(entity_make, count, percent) sorted by count descending, name ascending."""
    counts: dict[str, int] = {}
    for record in records:
        counts[record.entity_make] = counts.get(record.entity_make, 0) + 1
    total = len(records)
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(name, count, 100.0 * count / total) for name, count in rows]


def write_unified(records: list[UnifiedRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "report_id": r.report_id,
                        "entity_make": r.entity_make,
                        "full_text": r.full_text,
                        "category": r.category,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_unified(path: str | Path) -> list[UnifiedRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            records.append(
                UnifiedRecord(
                    report_id=data["report_id"],
                    entity_make=data.get("entity_make", ""),
                    full_text=data["full_text"],
                    category=data.get("category", CATEGORY_OTHER),
                )
            )
    return records
