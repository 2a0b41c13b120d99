"""Gold-label derivation from expert reviews and per-dimension accuracy.

Gold labels are lenient: one reviewer marking a dimension Correct fixes the
model's value as gold. A dimension every reviewer found unjudgeable stays
InsufficientContext; one judged Incorrect with no alternative on record is
Unresolvable. Both of those score zero for every system, and the accuracy
denominator is always the full evaluated case count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .taxonomy import DIMENSIONS, ClassificationRecord, dimension_value

VERDICT_CORRECT = "Correct"
VERDICT_INCORRECT = "Incorrect"
VERDICT_INSUFFICIENT = "InsufficientContext"
VERDICTS = (VERDICT_CORRECT, VERDICT_INCORRECT, VERDICT_INSUFFICIENT)

GOLD_VALUE = "value"
GOLD_INSUFFICIENT = "insufficient"
GOLD_UNRESOLVABLE = "unresolvable"


@dataclass(frozen=True)
class ReviewRecord:
    case_id: str
    reviewer_id: str
    verdicts: dict[str, str]   # dimension -> verdict, all four dimensions
    timestamp: str = ""
    note: str = ""


@dataclass(frozen=True)
class GoldLabel:
    kind: str          # value | insufficient | unresolvable
    value: str = ""    # code string when kind == value


@dataclass
class GoldLabelSet:
    labels: dict[str, dict[str, GoldLabel]] = field(default_factory=dict)

    @property
    def case_ids(self) -> list[str]:
        return list(self.labels)

    def get(self, case_id: str, dimension: str) -> GoldLabel:
        return self.labels[case_id][dimension]


@dataclass
class ScoreReport:
    n_cases: int
    correct: dict[str, int]

    def accuracy(self, dimension: str) -> float:
        if self.n_cases == 0:
            return 0.0
        return self.correct[dimension] / self.n_cases


def missing_dimensions(verdicts: dict[str, str]) -> list[str]:
    return [dim for dim in DIMENSIONS if dim not in verdicts]


def invalid_verdicts(verdicts: dict[str, str]) -> list[str]:
    return [
        f"{dim}={value!r}"
        for dim, value in verdicts.items()
        if dim not in DIMENSIONS or value not in VERDICTS
    ]


def derive_gold(
    reviews: list[ReviewRecord],
    outputs: list[ClassificationRecord],
) -> GoldLabelSet:
    """Resolve reviews against the classified outputs they judged."""
    by_id = {record.report_id: record for record in outputs}
    unknown = sorted({r.case_id for r in reviews if r.case_id not in by_id})
    if unknown:
        raise ValueError(f"reviews reference unknown case ids: {', '.join(unknown)}")

    grouped: dict[str, list[ReviewRecord]] = {}
    for review in reviews:
        grouped.setdefault(review.case_id, []).append(review)

    gold = GoldLabelSet()
    for case_id, case_reviews in grouped.items():
        output = by_id[case_id]
        per_dim: dict[str, GoldLabel] = {}
        for dim in DIMENSIONS:
            verdicts = [r.verdicts[dim] for r in case_reviews]
            if VERDICT_CORRECT in verdicts:
                per_dim[dim] = GoldLabel(GOLD_VALUE, dimension_value(output, dim))
            elif all(v == VERDICT_INSUFFICIENT for v in verdicts):
                per_dim[dim] = GoldLabel(GOLD_INSUFFICIENT)
            else:
                per_dim[dim] = GoldLabel(GOLD_UNRESOLVABLE)
        gold.labels[case_id] = per_dim
    return gold


def score(predictions: list[ClassificationRecord], gold: GoldLabelSet) -> ScoreReport:
    """Accuracy per dimension over every evaluated case.

    A prediction is correct when its code matches the gold value exactly
    (after trimming); insufficient and unresolvable dimensions count against
    everyone.
    """
    by_id = {record.report_id: record for record in predictions}
    missing = [cid for cid in gold.case_ids if cid not in by_id]
    if missing:
        raise ValueError(f"no prediction for evaluated cases: {', '.join(sorted(missing))}")

    correct = {dim: 0 for dim in DIMENSIONS}
    for case_id in gold.case_ids:
        prediction = by_id[case_id]
        for dim in DIMENSIONS:
            label = gold.get(case_id, dim)
            if label.kind != GOLD_VALUE:
                continue
            if dimension_value(prediction, dim).strip() == label.value.strip():
                correct[dim] += 1
    return ScoreReport(n_cases=len(gold.case_ids), correct=correct)


def reviewer_agreement(reviews: list[ReviewRecord]) -> dict[str, float]:
    """Raw verdict agreement per dimension, pooled over doubly-reviewed cases."""
    grouped: dict[str, list[ReviewRecord]] = {}
    for review in reviews:
        grouped.setdefault(review.case_id, []).append(review)
    pairs = [case_reviews for case_reviews in grouped.values() if len(case_reviews) == 2]
    if not pairs:
        raise ValueError("no case carries exactly two reviews")
    agreement = {}
    for dim in DIMENSIONS:
        agreed = sum(1 for a, b in pairs if a.verdicts[dim] == b.verdicts[dim])
        agreement[dim] = agreed / len(pairs)
    return agreement


def insufficient_rate(reviews: list[ReviewRecord], dimension: str) -> float:
    """Fraction of all case-reviews whose verdict on the dimension is insufficient."""
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension {dimension!r}")
    if not reviews:
        return 0.0
    hits = sum(1 for r in reviews if r.verdicts.get(dimension) == VERDICT_INSUFFICIENT)
    return hits / len(reviews)


def score_table(reports: list[tuple[str, ScoreReport]]) -> str:
    """CSV text, one row per method, dimension columns in review order."""
    lines = ["method," + ",".join(DIMENSIONS)]
    for name, report in reports:
        cells = [f"{100.0 * report.accuracy(dim):.1f}" for dim in DIMENSIONS]
        lines.append(name + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def write_reviews(reviews: list[ReviewRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reviews:
            fh.write(
                json.dumps(
                    {
                        "case_id": r.case_id,
                        "reviewer_id": r.reviewer_id,
                        "verdicts": dict(r.verdicts),
                        "timestamp": r.timestamp,
                        "note": r.note,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_reviews(path: str | Path) -> list[ReviewRecord]:
    reviews = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            reviews.append(
                ReviewRecord(
                    case_id=data["case_id"],
                    reviewer_id=data["reviewer_id"],
                    verdicts=dict(data["verdicts"]),
                    timestamp=data.get("timestamp", ""),
                    note=data.get("note", ""),
                )
            )
    return reviews
