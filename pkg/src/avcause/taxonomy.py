"""Classification schema for AV incident verdicts.

Defines the coded dimensions (AV failure, primary/secondary cause, failed
system, late AI response), the cross-field consistency rules, human-readable
label decoding, and the canonical serialized forms used everywhere else in
the pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

AV_FAILED_CODES = ("Y", "N", "I")
CAUSE_CODES = ("S", "H", "E", "N")
SYSTEM_CODES = ("PE", "PL", "CO", "SW", "HW", "HA", "N")
LATE_CODES = ("true", "false")

SOURCE_LLM = "LLM"
SOURCE_MAJORITY = "MajorityBaseline"
SOURCE_KEYWORD = "KeywordBaseline"
SOURCE_MANUAL = "Manual"
SOURCES = (SOURCE_LLM, SOURCE_MAJORITY, SOURCE_KEYWORD, SOURCE_MANUAL)

# Dimension names shared by scoring, review payloads and rule files.
DIM_AV_FAILED = "av_failed"
DIM_LATE_AI = "late_ai"
DIM_PRIMARY_CAUSE = "primary_cause"
DIM_FAILED_SYSTEM = "failed_system"
DIMENSIONS = (DIM_AV_FAILED, DIM_LATE_AI, DIM_PRIMARY_CAUSE, DIM_FAILED_SYSTEM)

VIOLATION_SYSTEM_REQUIRES_CAUSE = "system-requires-cause-S"
VIOLATION_SECONDARY_EQUALS_PRIMARY = "secondary-equals-primary"
VIOLATION_LATE_REQUIRES_FAILED = "late-requires-av-failed-Y"

# Keys of the structured object the model is asked to emit.
KEY_AV_FAILED = "AV_Failed"
KEY_CAUSE = "Cause"
KEY_SYSTEM = "System"
KEY_LATE = "Late"
KEY_SECONDARY = "Secondary"
REQUIRED_PAYLOAD_KEYS = frozenset({KEY_AV_FAILED, KEY_CAUSE, KEY_SYSTEM, KEY_LATE})

_LABELS: dict[str, dict[str, str]] = {
    DIM_AV_FAILED: {"Y": "Yes", "N": "No", "I": "Insufficient Info"},
    DIM_LATE_AI: {"true": "Yes", "false": "No"},
    DIM_PRIMARY_CAUSE: {
        "S": "System",
        "H": "Human",
        "E": "Environmental",
        "N": "None",
    },
    DIM_FAILED_SYSTEM: {
        "PE": "Perception",
        "PL": "Planning",
        "CO": "Control",
        "SW": "Software",
        "HW": "Hardware",
        "HA": "Handover",
        "N": "None",
    },
}


@dataclass(frozen=True)
class ClassificationRecord:
    """One classified incident. Code fields hold the short taxonomy codes."""

    report_id: str
    av_failed: str        # Y | N | I
    primary_cause: str    # S | H | E | N
    failed_system: str    # PE | PL | CO | SW | HW | HA | N
    late_ai: bool
    secondary_cause: str = "N"
    source: str = SOURCE_LLM
    raw_output: str = ""
    attempts: int = 1
    prompt_version: str = ""


@dataclass(frozen=True)
class TaxonomyNode:
    code: str
    label: str
    children: tuple[TaxonomyNode, ...] = ()


def validate(record: ClassificationRecord) -> list[str]:
    """Return the names of every cross-field rule the record violates.

    Total over well-formed records: an empty list means the record is
    consistent; it never raises.
    """
    violations: list[str] = []
    if record.failed_system != "N" and record.primary_cause != "S":
        violations.append(VIOLATION_SYSTEM_REQUIRES_CAUSE)
    if record.secondary_cause != "N" and record.secondary_cause == record.primary_cause:
        violations.append(VIOLATION_SECONDARY_EQUALS_PRIMARY)
    if record.late_ai and record.av_failed != "Y":
        violations.append(VIOLATION_LATE_REQUIRES_FAILED)
    return violations


def decode_label(dimension: str, code: str) -> str:
    """Map a short code to its display label, e.g. failed_system PE -> Perception."""
    try:
        table = _LABELS[dimension]
    except KeyError:
        raise ValueError(f"unknown dimension {dimension!r}") from None
    try:
        return table[code]
    except KeyError:
        raise ValueError(f"unknown code {code!r} for dimension {dimension!r}") from None


def dimension_value(record: ClassificationRecord, dimension: str) -> str:
    """Code string a record carries for one review dimension (late_ai as true/false)."""
    if dimension == DIM_AV_FAILED:
        return record.av_failed
    if dimension == DIM_LATE_AI:
        return "true" if record.late_ai else "false"
    if dimension == DIM_PRIMARY_CAUSE:
        return record.primary_cause
    if dimension == DIM_FAILED_SYSTEM:
        return record.failed_system
    raise ValueError(f"unknown dimension {dimension!r}")


def record_to_payload(record: ClassificationRecord) -> dict:
    """Canonical structured object with the exact key names the model is prompted for."""
    return {
        KEY_AV_FAILED: record.av_failed,
        KEY_CAUSE: record.primary_cause,
        KEY_SYSTEM: record.failed_system,
        KEY_LATE: record.late_ai,
        KEY_SECONDARY: record.secondary_cause,
    }


def _code_field(payload: dict, key: str, allowed: tuple[str, ...]) -> str:
    if key not in payload:
        raise ValueError(f'missing key "{key}"')
    value = payload[key]
    if not isinstance(value, str):
        raise ValueError(f'invalid value for "{key}": {value!r}')
    code = value.strip().upper()
    if code not in allowed:
        raise ValueError(f'invalid value for "{key}": {value!r}')
    return code


def _late_field(payload: dict) -> bool:
    if KEY_LATE not in payload:
        raise ValueError(f'missing key "{KEY_LATE}"')
    value = payload[KEY_LATE]
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ("true", "false"):
        return value.strip().lower() == "true"
    raise ValueError(f'invalid value for "{KEY_LATE}": {value!r}')


def payload_to_record(
    payload: dict,
    *,
    report_id: str,
    source: str = SOURCE_LLM,
    raw_output: str = "",
    attempts: int = 1,
    prompt_version: str = "",
) -> ClassificationRecord:
    """Build a record from a model payload; a missing Secondary key defaults to N.

    Raises ValueError naming the offending key when a value is outside its
    code set, so the message can drive a repair retry.
    """
    secondary = payload.get(KEY_SECONDARY)
    if secondary is None or (isinstance(secondary, str) and not secondary.strip()):
        secondary_code = "N"
    else:
        secondary_code = _code_field(payload, KEY_SECONDARY, CAUSE_CODES)
    return ClassificationRecord(
        report_id=report_id,
        av_failed=_code_field(payload, KEY_AV_FAILED, AV_FAILED_CODES),
        primary_cause=_code_field(payload, KEY_CAUSE, CAUSE_CODES),
        failed_system=_code_field(payload, KEY_SYSTEM, SYSTEM_CODES),
        late_ai=_late_field(payload),
        secondary_cause=secondary_code,
        source=source,
        raw_output=raw_output,
        attempts=attempts,
        prompt_version=prompt_version,
    )


def to_persisted_dict(record: ClassificationRecord) -> dict:
    """Stable key order: payload keys first, then provenance."""
    out = {"report_id": record.report_id}
    out.update(record_to_payload(record))
    out.update(
        source=record.source,
        raw_output=record.raw_output,
        attempts=record.attempts,
        prompt_version=record.prompt_version,
    )
    return out


def from_persisted_dict(data: dict) -> ClassificationRecord:
    return payload_to_record(
        data,
        report_id=data["report_id"],
        source=data.get("source", SOURCE_LLM),
        raw_output=data.get("raw_output", ""),
        attempts=int(data.get("attempts", 1)),
        prompt_version=data.get("prompt_version", ""),
    )


def write_records(records: list[ClassificationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(to_persisted_dict(record), ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[ClassificationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(from_persisted_dict(json.loads(line)))
    return records


def taxonomy_tree() -> TaxonomyNode:
    """Cause taxonomy as a tree; leaves finer than the code set are representational."""
    return TaxonomyNode(
        "root",
        "AV Incident Causes",
        (
            TaxonomyNode(
                "S",
                "System Failures",
                (
                    TaxonomyNode("PE", "Perception"),
                    TaxonomyNode("prediction", "Prediction"),
                    TaxonomyNode(
                        "planning-control",
                        "Planning/Control",
                        (TaxonomyNode("PL", "Planning"), TaxonomyNode("CO", "Control")),
                    ),
                    TaxonomyNode("SW", "Software Faults"),
                    TaxonomyNode("latency", "Latency"),
                    TaxonomyNode("HA", "Delayed Handover"),
                    TaxonomyNode("HW", "Hardware/Communication"),
                ),
            ),
            TaxonomyNode(
                "H",
                "Human Factors",
                (
                    TaxonomyNode(
                        "av-operator",
                        "AV Operators",
                        (
                            TaxonomyNode("inattention", "Inattention"),
                            TaxonomyNode("premature-intervention", "Premature Intervention"),
                        ),
                    ),
                    TaxonomyNode(
                        "other-road-users",
                        "Other Road Users",
                        (TaxonomyNode("reckless-driving", "Reckless Driving"),),
                    ),
                ),
            ),
            TaxonomyNode(
                "E",
                "Environmental Conditions",
                (
                    TaxonomyNode("adverse-roadway", "Adverse Roadway"),
                    TaxonomyNode("weather", "Weather"),
                    TaxonomyNode("complex-traffic", "Complex Traffic"),
                ),
            ),
        ),
    )
