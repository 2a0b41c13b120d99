"""Reference predictors: corpus-prior majority vote and keyword regex rules.

Both emit records through the same coercion step, so every baseline output
satisfies the taxonomy's cross-field rules by construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .ingest import UnifiedRecord
from .taxonomy import (
    AV_FAILED_CODES,
    CAUSE_CODES,
    DIM_AV_FAILED,
    DIM_FAILED_SYSTEM,
    DIM_LATE_AI,
    DIM_PRIMARY_CAUSE,
    LATE_CODES,
    SOURCE_KEYWORD,
    SOURCE_MAJORITY,
    SYSTEM_CODES,
    ClassificationRecord,
)

# Tie-break order per dimension: earlier code wins an exact count tie.
_CODE_ORDER: dict[str, tuple[str, ...]] = {
    DIM_AV_FAILED: AV_FAILED_CODES,
    DIM_PRIMARY_CAUSE: CAUSE_CODES,
    DIM_FAILED_SYSTEM: SYSTEM_CODES,
    DIM_LATE_AI: LATE_CODES,
}

_RULES_RESOURCE = "keyword_rules.tsv"


@dataclass(frozen=True)
class CorpusPriors:
    av_failed: str
    primary_cause: str
    failed_system: str
    late_ai: bool
    counts: dict[str, dict[str, int]]


@dataclass(frozen=True)
class KeywordRule:
    pattern: str
    dimension: str
    value: str
    priority: int

    def matches(self, text: str) -> bool:
        return re.search(self.pattern, text, re.IGNORECASE | re.MULTILINE) is not None


# Fallback when no rule fires for a dimension: insufficient info, no cause.
DEFAULT_PREDICTION = ClassificationRecord(
    report_id="",
    av_failed="I",
    primary_cause="N",
    failed_system="N",
    late_ai=False,
    secondary_cause="N",
)


def coerce_valid(record: ClassificationRecord) -> ClassificationRecord:
    """Force the cross-field rules: no system without cause S, no late without Y."""
    return replace(
        record,
        failed_system=record.failed_system if record.primary_cause == "S" else "N",
        late_ai=record.late_ai if record.av_failed == "Y" else False,
        secondary_cause="N" if record.secondary_cause == record.primary_cause else record.secondary_cause,
    )


def _mode(counts: dict[str, int], order: tuple[str, ...]) -> str:
    best = max(counts.values())
    for code in order:
        if counts.get(code, 0) == best:
            return code
    raise AssertionError("count table held codes outside the dimension order")


def compute_priors(records: list[ClassificationRecord]) -> CorpusPriors:
    """Per-dimension modes over a classified corpus; ties break by code order."""
    if not records:
        raise ValueError("cannot compute priors over an empty corpus")
    counts: dict[str, dict[str, int]] = {dim: {} for dim in _CODE_ORDER}
    for record in records:
        values = {
            DIM_AV_FAILED: record.av_failed,
            DIM_PRIMARY_CAUSE: record.primary_cause,
            DIM_FAILED_SYSTEM: record.failed_system,
            DIM_LATE_AI: "true" if record.late_ai else "false",
        }
        for dim, value in values.items():
            counts[dim][value] = counts[dim].get(value, 0) + 1
    return CorpusPriors(
        av_failed=_mode(counts[DIM_AV_FAILED], _CODE_ORDER[DIM_AV_FAILED]),
        primary_cause=_mode(counts[DIM_PRIMARY_CAUSE], _CODE_ORDER[DIM_PRIMARY_CAUSE]),
        failed_system=_mode(counts[DIM_FAILED_SYSTEM], _CODE_ORDER[DIM_FAILED_SYSTEM]),
        late_ai=_mode(counts[DIM_LATE_AI], _CODE_ORDER[DIM_LATE_AI]) == "true",
        counts=counts,
    )


def majority_predict(report_id: str, priors: CorpusPriors) -> ClassificationRecord:
    """Constant prediction from corpus modes, coerced to taxonomy validity."""
    return coerce_valid(
        ClassificationRecord(
            report_id=report_id,
            av_failed=priors.av_failed,
            primary_cause=priors.primary_cause,
            failed_system=priors.failed_system,
            late_ai=priors.late_ai,
            secondary_cause="N",
            source=SOURCE_MAJORITY,
        )
    )


def _parse_rule_line(line: str, where: str) -> KeywordRule:
    parts = line.split("\t")
    if len(parts) != 4:
        raise ValueError(f"{where}: expected 4 tab-separated fields, got {len(parts)}")
    priority_text, dimension, pattern, value = (p.strip() for p in parts)
    try:
        priority = int(priority_text)
    except ValueError:
        raise ValueError(f"{where}: priority {priority_text!r} is not an integer") from None
    if dimension not in _CODE_ORDER:
        raise ValueError(f"{where}: unknown dimension {dimension!r}")
    if value not in _CODE_ORDER[dimension]:
        raise ValueError(f"{where}: code {value!r} is invalid for {dimension}")
    try:
        re.compile(pattern)
    except re.error as exc:
        raise ValueError(f"{where}: bad pattern {pattern!r}: {exc}") from None
    return KeywordRule(pattern=pattern, dimension=dimension, value=value, priority=priority)


def parse_rules(lines: list[str], source_name: str = "rules") -> list[KeywordRule]:
    rules = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        rules.append(_parse_rule_line(line, f"{source_name}:{lineno}"))
    seen: dict[tuple[str, int], str] = {}
    for rule in rules:
        key = (rule.dimension, rule.priority)
        if key in seen:
            raise ValueError(
                f"duplicate priority {rule.priority} for dimension {rule.dimension} "
                f"(patterns {seen[key]!r} and {rule.pattern!r})"
            )
        seen[key] = rule.pattern
    return rules


def load_rules(path: str | Path) -> list[KeywordRule]:
    """Parse a priority<TAB>dimension<TAB>pattern<TAB>code rule file."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_rules(text.splitlines(), source_name=str(path))


def default_rules() -> list[KeywordRule]:
    text = resources.files("avcause").joinpath("data", _RULES_RESOURCE).read_text("utf-8")
    return parse_rules(text.splitlines(), source_name=_RULES_RESOURCE)


def keyword_predict(
    record: UnifiedRecord,
    rules: list[KeywordRule] | None = None,
    defaults: ClassificationRecord | None = None,
) -> ClassificationRecord:
    """Highest-priority matching rule decides each dimension; misses fall back.

    Rule order in the file does not matter: only priority does.
    """
    rules = default_rules() if rules is None else rules
    defaults = defaults or DEFAULT_PREDICTION
    picked: dict[str, str] = {}
    for rule in sorted(rules, key=lambda r: -r.priority):
        if rule.dimension in picked:
            continue
        if rule.matches(record.full_text):
            picked[rule.dimension] = rule.value
    return coerce_valid(
        ClassificationRecord(
            report_id=record.report_id,
            av_failed=picked.get(DIM_AV_FAILED, defaults.av_failed),
            primary_cause=picked.get(DIM_PRIMARY_CAUSE, defaults.primary_cause),
            failed_system=picked.get(DIM_FAILED_SYSTEM, defaults.failed_system),
            late_ai=picked.get(DIM_LATE_AI, "true" if defaults.late_ai else "false") == "true",
            secondary_cause="N",
            source=SOURCE_KEYWORD,
        )
    )
