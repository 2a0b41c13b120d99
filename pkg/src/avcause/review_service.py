"""Expert-review backend: case assignment, durable verdict log, HTTP API.

Assignment uses a ring: cases are shuffled by seed, split into one contiguous
block per reviewer, and each reviewer also takes the first `overlap` cases of
the next block (wrapping). With feasible parameters every case lands on
exactly two reviewers. Reviews append to a checksummed line log that is
fsynced before the submission is acknowledged.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response

from .ingest import UnifiedRecord
from .scoring import (
    ReviewRecord,
    invalid_verdicts,
    missing_dimensions,
)
from .taxonomy import DIMENSIONS, ClassificationRecord, decode_label, dimension_value


class AssignmentError(ValueError):
    """Ring parameters cannot give every case two reviews."""


class ReviewSubmissionError(ValueError):
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message)
        self.status_code = status_code


def assign_cases(
    case_ids: list[str],
    reviewer_ids: list[str],
    overlap: int = 10,
    seed: int = 7,
) -> dict[str, list[str]]:
    """Reviewer id -> ordered case list. Same seed, same assignment."""
    if len(reviewer_ids) < 2:
        raise AssignmentError("need at least 2 reviewers")
    if len(set(reviewer_ids)) != len(reviewer_ids):
        raise AssignmentError("reviewer ids must be unique")
    if len(set(case_ids)) != len(case_ids):
        raise AssignmentError("case ids must be unique")
    n = len(case_ids)
    k = len(reviewer_ids)
    if n < overlap:
        raise AssignmentError(f"overlap {overlap} exceeds case count {n}")

    shuffled = list(case_ids)
    random.Random(seed).shuffle(shuffled)

    base, extra = divmod(n, k)
    blocks: list[list[str]] = []
    offset = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        blocks.append(shuffled[offset : offset + size])
        offset += size
    largest = max(len(b) for b in blocks)
    if largest > overlap:
        raise AssignmentError(
            f"largest block ({largest} cases) exceeds overlap {overlap}; "
            "tail cases would get a single review"
        )

    return {
        reviewer: blocks[i] + blocks[(i + 1) % k][:overlap]
        for i, reviewer in enumerate(reviewer_ids)
    }


def _checksum(body: dict) -> str:
    canonical = json.dumps(body, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class StoreCorruptionError(ValueError):
    """A non-trailing store line failed its checksum."""


class ReviewStore:
    """Append-only review log; every line carries a content checksum.

    A torn trailing line (crash mid-write) is truncated away on open. Appends
    are flushed and fsynced before returning.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: list[ReviewRecord] = []
        self._seen: set[tuple[str, str]] = set()
        self._load()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _load(self) -> None:
        if not self.path.exists():
            self.path.touch()
            return
        raw = self.path.read_bytes()
        good_end = 0
        offset = 0
        for chunk in raw.split(b"\n"):
            line_end = offset + len(chunk) + 1   # include the newline
            line = chunk.decode("utf-8", errors="replace").strip()
            offset = line_end
            if not line:
                continue
            try:
                data = json.loads(line)
                stored_sum = data.pop("checksum")
                if _checksum(data) != stored_sum:
                    raise ValueError("checksum mismatch")
                record = ReviewRecord(
                    case_id=data["case_id"],
                    reviewer_id=data["reviewer_id"],
                    verdicts=dict(data["verdicts"]),
                    timestamp=data.get("timestamp", ""),
                    note=data.get("note", ""),
                )
            except (ValueError, KeyError, TypeError):
                if raw[offset:].strip():
                    raise StoreCorruptionError(
                        f"corrupt review line before end of {self.path}"
                    ) from None
                # Torn tail from a crash mid-write: drop it.
                with open(self.path, "r+b") as fh:
                    fh.truncate(good_end)
                return
            self._records.append(record)
            self._seen.add((record.case_id, record.reviewer_id))
            good_end = min(line_end, len(raw))

    def has(self, case_id: str, reviewer_id: str) -> bool:
        return (case_id, reviewer_id) in self._seen

    def records(self) -> list[ReviewRecord]:
        return list(self._records)

    def append(self, record: ReviewRecord) -> None:
        body = {
            "case_id": record.case_id,
            "reviewer_id": record.reviewer_id,
            "verdicts": dict(record.verdicts),
            "timestamp": record.timestamp,
            "note": record.note,
        }
        line = json.dumps({**body, "checksum": _checksum(body)}, ensure_ascii=False)
        self._fh.write(line + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._records.append(record)
        self._seen.add((record.case_id, record.reviewer_id))

    def close(self) -> None:
        self._fh.close()


class ReviewService:
    """Serves the next unreviewed case per reviewer and records verdicts."""

    def __init__(
        self,
        cases: list[UnifiedRecord],
        outputs: list[ClassificationRecord],
        assignment: dict[str, list[str]],
        store: ReviewStore,
    ):
        self.cases = {c.report_id: c for c in cases}
        self.outputs = {o.report_id: o for o in outputs}
        missing = sorted(
            {cid for queue in assignment.values() for cid in queue}
            - (self.cases.keys() & self.outputs.keys())
        )
        if missing:
            raise ValueError(
                f"assigned cases lack a case record or classified output: {', '.join(missing[:5])}"
            )
        self.assignment = assignment
        self.store = store
        self._lock = threading.Lock()

    def _queue(self, reviewer_id: str) -> list[str]:
        try:
            return self.assignment[reviewer_id]
        except KeyError:
            raise ReviewSubmissionError(f"unknown reviewer {reviewer_id!r}", 404) from None

    def next_case(self, reviewer_id: str) -> dict | None:
        """Payload for the next unreviewed case, or None when the queue is done.

        The payload never exposes entity or make metadata, only the unified text.
        """
        queue = self._queue(reviewer_id)
        pending = [cid for cid in queue if not self.store.has(cid, reviewer_id)]
        if not pending:
            return None
        case_id = pending[0]
        output = self.outputs[case_id]
        return {
            "case_id": case_id,
            "full_text": self.cases[case_id].full_text,
            "classification": {
                dim: {
                    "code": dimension_value(output, dim),
                    "label": decode_label(dim, dimension_value(output, dim)),
                }
                for dim in DIMENSIONS
            },
            "progress": {"submitted": len(queue) - len(pending), "total": len(queue)},
        }

    def submit(
        self,
        reviewer_id: str,
        case_id: str,
        verdicts: dict[str, str],
        note: str = "",
    ) -> ReviewRecord:
        queue = self._queue(reviewer_id)
        if case_id not in queue:
            raise ReviewSubmissionError(
                f"case {case_id!r} is not assigned to reviewer {reviewer_id!r}", 400
            )
        missing = missing_dimensions(verdicts)
        if missing:
            raise ReviewSubmissionError(
                f"missing verdicts for: {', '.join(missing)}", 400
            )
        bad = invalid_verdicts(verdicts)
        if bad:
            raise ReviewSubmissionError(f"invalid verdicts: {', '.join(bad)}", 400)
        record = ReviewRecord(
            case_id=case_id,
            reviewer_id=reviewer_id,
            verdicts={dim: verdicts[dim] for dim in DIMENSIONS},
            timestamp=datetime.now(timezone.utc).isoformat(),
            note=note,
        )
        with self._lock:
            if self.store.has(case_id, reviewer_id):
                raise ReviewSubmissionError(
                    f"duplicate review for case {case_id!r} by {reviewer_id!r}", 409
                )
            self.store.append(record)
        return record

    def export(self) -> list[ReviewRecord]:
        return self.store.records()

    def assignment_view(self, reviewer_id: str) -> dict:
        queue = self._queue(reviewer_id)
        submitted = [cid for cid in queue if self.store.has(cid, reviewer_id)]
        remaining = [cid for cid in queue if not self.store.has(cid, reviewer_id)]
        return {
            "reviewer_id": reviewer_id,
            "cases": queue,
            "submitted": submitted,
            "remaining": remaining,
        }


def _review_to_dict(record: ReviewRecord) -> dict:
    return {
        "case_id": record.case_id,
        "reviewer_id": record.reviewer_id,
        "verdicts": dict(record.verdicts),
        "timestamp": record.timestamp,
        "note": record.note,
    }


def create_app(service: ReviewService) -> FastAPI:
    app = FastAPI(title="incident review service")

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/cases/next")
    def next_case(reviewer: str) -> Response:
        try:
            payload = service.next_case(reviewer)
        except ReviewSubmissionError as exc:
            raise HTTPException(exc.status_code, str(exc)) from None
        if payload is None:
            return Response(status_code=204)
        return Response(
            content=json.dumps(payload, ensure_ascii=False),
            media_type="application/json",
        )

    @app.post("/api/reviews")
    def submit_review(body: dict) -> dict:
        for field in ("reviewer_id", "case_id", "verdicts"):
            if field not in body:
                raise HTTPException(400, f"missing field {field!r}")
        if not isinstance(body["verdicts"], dict):
            raise HTTPException(400, "verdicts must be an object")
        try:
            record = service.submit(
                reviewer_id=str(body["reviewer_id"]),
                case_id=str(body["case_id"]),
                verdicts={str(k): str(v) for k, v in body["verdicts"].items()},
                note=str(body.get("note", "")),
            )
        except ReviewSubmissionError as exc:
            raise HTTPException(exc.status_code, str(exc)) from None
        return {"status": "ok", "case_id": record.case_id}

    @app.get("/api/reviews/export")
    def export_reviews() -> list[dict]:
        return [_review_to_dict(r) for r in service.export()]

    @app.get("/api/assignment")
    def assignment(reviewer: str) -> dict:
        try:
            return service.assignment_view(reviewer)
        except ReviewSubmissionError as exc:
            raise HTTPException(exc.status_code, str(exc)) from None

    return app
