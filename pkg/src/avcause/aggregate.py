"""Corpus-level statistics over classified incidents and report emission.

Counts are exact integers; percent display cuts at one decimal using integer
arithmetic, which reproduces the published run's printed figures from its own
counts. Rates keep full precision internally.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import UnifiedRecord
from .taxonomy import CAUSE_CODES, SYSTEM_CODES, ClassificationRecord, decode_label

DEFAULT_REAR_END_PATTERNS = (
    "rear-end",
    "rear ended",
    "rear-ended",
    "struck from behind",
    # Structured crash-type metadata line carried into the unified text.
    r"^[^:\n]*crash[^:\n]*:\s*rear\s*$",
)

# Exclusive regions over the three flags, largest intersection first.
VENN_REGIONS = (
    "late&av_failed&rear_end",
    "late&av_failed",
    "late&rear_end",
    "av_failed&rear_end",
    "late",
    "av_failed",
    "rear_end",
    "none",
)


@dataclass(frozen=True)
class AggregateStats:
    total: int
    cause_counts: dict[str, int]
    system_counts: dict[str, int]
    late_count: int
    late_and_system_cause_count: int
    rear_end_count: int
    rear_end_and_late_count: int
    venn: dict[str, int]
    rear_end_pattern_counts: dict[str, int] = field(default_factory=dict)

    def percent(self, count: int) -> str:
        return format_percent(count, self.total)

    def late_given_system_cause_percent(self) -> str:
        return format_percent(self.late_and_system_cause_count, self.cause_counts.get("S", 0))


def percent_tenths(numerator: int, denominator: int) -> int:
    """Percentage in tenths, cut (not rounded) at one decimal. Exact integer math."""
    if denominator <= 0:
        return 0
    return (1000 * numerator) // denominator


def format_percent(numerator: int, denominator: int) -> str:
    tenths = percent_tenths(numerator, denominator)
    return f"{tenths // 10}.{tenths % 10}%"


def detect_rear_end(
    record: UnifiedRecord,
    patterns: tuple[str, ...] = DEFAULT_REAR_END_PATTERNS,
) -> bool:
    return any(
        re.search(p, record.full_text, re.IGNORECASE | re.MULTILINE) for p in patterns
    )


def pattern_histogram(
    records: list[UnifiedRecord],
    patterns: tuple[str, ...] = DEFAULT_REAR_END_PATTERNS,
) -> dict[str, int]:
    """How often each rear-end pattern fires; surfaces sensitivity to the set."""
    counts = {p: 0 for p in patterns}
    for record in records:
        for p in patterns:
            if re.search(p, record.full_text, re.IGNORECASE | re.MULTILINE):
                counts[p] += 1
    return counts


def rear_end_flags(
    records: list[UnifiedRecord],
    patterns: tuple[str, ...] = DEFAULT_REAR_END_PATTERNS,
) -> dict[str, bool]:
    return {r.report_id: detect_rear_end(r, patterns) for r in records}


def compute_stats(
    records: list[ClassificationRecord],
    flags: dict[str, bool],
    rear_end_pattern_counts: dict[str, int] | None = None,
) -> AggregateStats:
    """Tally causes, systems, late responses and the flag intersections.

    Every record needs a rear-end flag; region counts sum to the corpus size.
    """
    missing = [r.report_id for r in records if r.report_id not in flags]
    if missing:
        raise ValueError(f"no rear-end flag for records: {', '.join(sorted(missing)[:5])}")

    cause_counts = {code: 0 for code in CAUSE_CODES}
    system_counts = {code: 0 for code in SYSTEM_CODES}
    venn = {region: 0 for region in VENN_REGIONS}
    late_count = 0
    late_and_system = 0
    rear_count = 0
    rear_and_late = 0

    for record in records:
        cause_counts[record.primary_cause] += 1
        system_counts[record.failed_system] += 1
        late = record.late_ai
        failed = record.av_failed == "Y"
        rear = flags[record.report_id]
        if late:
            late_count += 1
            if record.primary_cause == "S":
                late_and_system += 1
        if rear:
            rear_count += 1
            if late:
                rear_and_late += 1
        parts = [
            name
            for name, flag in (("late", late), ("av_failed", failed), ("rear_end", rear))
            if flag
        ]
        venn["&".join(parts) if parts else "none"] += 1

    return AggregateStats(
        total=len(records),
        cause_counts=cause_counts,
        system_counts=system_counts,
        late_count=late_count,
        late_and_system_cause_count=late_and_system,
        rear_end_count=rear_count,
        rear_end_and_late_count=rear_and_late,
        venn=venn,
        rear_end_pattern_counts=dict(rear_end_pattern_counts or {}),
    )


def _percent_cell(numerator: int, denominator: int) -> str:
    tenths = percent_tenths(numerator, denominator)
    return f"{tenths // 10}.{tenths % 10}"


def emit_report(stats: AggregateStats, out_dir: str | Path) -> list[Path]:
    """Write causes.csv, venn.csv and summary.txt; same stats give same bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    causes_path = out / "causes.csv"
    venn_path = out / "venn.csv"
    summary_path = out / "summary.txt"

    with open(causes_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "code", "label", "count", "percent"])
        for code in CAUSE_CODES:
            writer.writerow(
                [
                    "cause",
                    code,
                    decode_label("primary_cause", code),
                    stats.cause_counts[code],
                    _percent_cell(stats.cause_counts[code], stats.total),
                ]
            )
        for code in SYSTEM_CODES:
            writer.writerow(
                [
                    "system",
                    code,
                    decode_label("failed_system", code),
                    stats.system_counts[code],
                    _percent_cell(stats.system_counts[code], stats.total),
                ]
            )

    with open(venn_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region", "count", "percent"])
        for region in VENN_REGIONS:
            writer.writerow(
                [region, stats.venn[region], _percent_cell(stats.venn[region], stats.total)]
            )

    lines = [f"Incidents analyzed: {stats.total}", "", "Primary causes:"]
    for code in CAUSE_CODES:
        label = decode_label("primary_cause", code)
        count = stats.cause_counts[code]
        lines.append(f"  {code:<2} {label:<14} {count:>6}  {stats.percent(count)}")
    lines.append("")
    lines.append("Failed systems:")
    for code in SYSTEM_CODES:
        label = decode_label("failed_system", code)
        count = stats.system_counts[code]
        lines.append(f"  {code:<2} {label:<14} {count:>6}  {stats.percent(count)}")
    lines.extend(
        [
            "",
            f"Late AI response: {stats.late_count} ({stats.percent(stats.late_count)})",
            "Late AI among system-cause incidents: "
            f"{stats.late_and_system_cause_count} of {stats.cause_counts.get('S', 0)} "
            f"({stats.late_given_system_cause_percent()})",
            f"Rear-end collisions: {stats.rear_end_count} ({stats.percent(stats.rear_end_count)})",
            "Rear-end with late AI response: "
            f"{stats.rear_end_and_late_count} ({stats.percent(stats.rear_end_and_late_count)})",
            "",
            "Overlap regions (late / AV failed / rear-end):",
        ]
    )
    for region in VENN_REGIONS:
        lines.append(f"  {region:<28} {stats.venn[region]:>6}  {stats.percent(stats.venn[region])}")
    if stats.rear_end_pattern_counts:
        lines.append("")
        lines.append("Rear-end pattern matches:")
        for pattern, count in stats.rear_end_pattern_counts.items():
            lines.append(f"  {pattern}  {count}")
    summary_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    return [causes_path, venn_path, summary_path]
