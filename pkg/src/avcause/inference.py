"""HTTP client for a local chat-completion endpoint with validated retries.

Model replies are free text; the extractor strips think-style reasoning
blocks, then takes the first balanced brace-delimited object carrying the
required schema keys. Invalid replies trigger a bounded repair retry that
names the violation. Batches run on a worker pool, preserve input order, and
checkpoint every finished record so an interrupted run resumes without
re-querying the server.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import httpx

from .ingest import UnifiedRecord
from .prompting import DEFAULT_MAX_CONTEXT_CHARS, DecodingParams, PromptTemplate, build_prompt
from .taxonomy import (
    REQUIRED_PAYLOAD_KEYS,
    ClassificationRecord,
    from_persisted_dict,
    payload_to_record,
    to_persisted_dict,
    validate,
)

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "http://localhost:11434/api/chat"
DEFAULT_MODEL = "deepseek-r1:32b"
DEFAULT_THINK_TAGS = ("<think>", "</think>")

FAILURE_TIMEOUT = "timeout"
FAILURE_NETWORK = "network"
FAILURE_EXHAUSTED = "exhausted_retries"


@dataclass(frozen=True)
class ModelConfig:
    endpoint_url: str = DEFAULT_ENDPOINT
    model_name: str = DEFAULT_MODEL
    decoding: DecodingParams = DecodingParams()
    request_timeout: float = 120.0
    max_retries: int = 3
    max_context_chars: int = DEFAULT_MAX_CONTEXT_CHARS
    think_tags: tuple[str, str] = DEFAULT_THINK_TAGS


@dataclass(frozen=True)
class InferenceOutcome:
    report_id: str
    record: ClassificationRecord | None
    failure: str | None
    attempts: int
    latencies: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.record is not None


def strip_reasoning(text: str, tags: tuple[str, str] = DEFAULT_THINK_TAGS) -> str:
    """Remove every open..close tag span; an unclosed open tag eats the tail."""
    open_tag, close_tag = tags
    out = []
    pos = 0
    while True:
        start = text.find(open_tag, pos)
        if start < 0:
            out.append(text[pos:])
            break
        out.append(text[pos:start])
        end = text.find(close_tag, start + len(open_tag))
        if end < 0:
            break
        pos = end + len(close_tag)
    return "".join(out)


def _balanced_end(text: str, start: int) -> int | None:
    """Index one past the brace closing text[start] == '{', honoring strings."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def extract_object(
    text: str,
    think_tags: tuple[str, str] = DEFAULT_THINK_TAGS,
) -> dict | None:
    """First balanced JSON object containing the required schema keys, if any."""
    cleaned = strip_reasoning(text, think_tags)
    pos = cleaned.find("{")
    while pos >= 0:
        end = _balanced_end(cleaned, pos)
        if end is not None:
            try:
                candidate = json.loads(cleaned[pos:end])
            except json.JSONDecodeError:
                candidate = None
            if isinstance(candidate, dict) and REQUIRED_PAYLOAD_KEYS <= candidate.keys():
                return candidate
        pos = cleaned.find("{", pos + 1)
    return None


def _request_body(config: ModelConfig, system_text: str, user_text: str) -> dict:
    return {
        "model": config.model_name,
        "messages": [
            {"role": "system", "content": system_text},
            {"role": "user", "content": user_text},
        ],
        "options": {
            "temperature": config.decoding.temperature,
            "top_p": config.decoding.top_p,
            "num_predict": config.decoding.max_output_tokens,
        },
        "stream": False,
    }


def _response_text(data: dict) -> str | None:
    message = data.get("message")
    if isinstance(message, dict) and isinstance(message.get("content"), str):
        return message["content"]
    choices = data.get("choices")
    if isinstance(choices, list) and choices:
        message = choices[0].get("message", {})
        if isinstance(message, dict) and isinstance(message.get("content"), str):
            return message["content"]
    return None


def classify_record(
    record: UnifiedRecord,
    config: ModelConfig,
    template: PromptTemplate | None = None,
    client: httpx.Client | None = None,
) -> InferenceOutcome:
    """Classify one report, retrying with a named repair hint up to max_retries."""
    template = template or PromptTemplate.default()
    system_text, user_text = build_prompt(
        record.full_text, template, config.max_context_chars
    )
    prompt_version = template.content_hash()
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=config.request_timeout)

    latencies: list[float] = []
    user = user_text
    timed_out_last = False
    try:
        for attempt in range(1, config.max_retries + 1):
            started = time.perf_counter()
            try:
                response = client.post(
                    config.endpoint_url, json=_request_body(config, system_text, user)
                )
            except httpx.TimeoutException:
                latencies.append(time.perf_counter() - started)
                timed_out_last = True
                logger.debug("report %s attempt %d timed out", record.report_id, attempt)
                continue
            except httpx.HTTPError as exc:
                latencies.append(time.perf_counter() - started)
                logger.debug("report %s unreachable: %s", record.report_id, exc)
                return InferenceOutcome(
                    record.report_id, None, FAILURE_NETWORK, attempt, tuple(latencies)
                )
            latencies.append(time.perf_counter() - started)
            timed_out_last = False

            problem = None
            if response.status_code != 200:
                problem = f"server returned status {response.status_code}"
            else:
                text = _response_text(response.json())
                if text is None:
                    problem = "unparseable server response"
                else:
                    payload = extract_object(text, config.think_tags)
                    if payload is None:
                        problem = "no structured object found"
                    else:
                        try:
                            result = payload_to_record(
                                payload,
                                report_id=record.report_id,
                                raw_output=text,
                                attempts=attempt,
                                prompt_version=prompt_version,
                            )
                        except ValueError as exc:
                            problem = str(exc)
                        else:
                            violations = validate(result)
                            if violations:
                                problem = "; ".join(violations)
                            else:
                                return InferenceOutcome(
                                    record.report_id,
                                    result,
                                    None,
                                    attempt,
                                    tuple(latencies),
                                )
            logger.debug("report %s attempt %d invalid: %s", record.report_id, attempt, problem)
            user = (
                user_text
                + f"\n\nYour previous output was invalid ({problem}). "
                  "Only output the corrected structured object."
            )
    finally:
        if own_client:
            client.close()

    failure = FAILURE_TIMEOUT if timed_out_last else FAILURE_EXHAUSTED
    return InferenceOutcome(
        record.report_id, None, failure, config.max_retries, tuple(latencies)
    )


def _outcome_to_dict(outcome: InferenceOutcome) -> dict:
    return {
        "report_id": outcome.report_id,
        "failure": outcome.failure,
        "attempts": outcome.attempts,
        "latencies": list(outcome.latencies),
        "record": to_persisted_dict(outcome.record) if outcome.record else None,
    }


def _outcome_from_dict(data: dict) -> InferenceOutcome:
    record = from_persisted_dict(data["record"]) if data.get("record") else None
    return InferenceOutcome(
        report_id=data["report_id"],
        record=record,
        failure=data.get("failure"),
        attempts=int(data.get("attempts", 1)),
        latencies=tuple(data.get("latencies", ())),
    )


def _read_checkpoint(path: str | Path) -> tuple[dict[str, InferenceOutcome], int]:
    """Outcomes plus the byte offset just past the last intact line."""
    path = Path(path)
    if not path.exists():
        return {}, 0
    raw = path.read_bytes()
    outcomes: dict[str, InferenceOutcome] = {}
    good_end = 0
    lines = raw.split(b"\n")
    for index, line in enumerate(lines):
        if not line.strip():
            if index < len(lines) - 1:
                good_end += len(line) + 1
            continue
        try:
            outcome = _outcome_from_dict(json.loads(line.decode("utf-8")))
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, ValueError):
            if index == len(lines) - 1 or all(not rest.strip() for rest in lines[index + 1 :]):
                break
            raise ValueError(f"corrupt checkpoint line {index + 1} in {path}") from None
        outcomes[outcome.report_id] = outcome
        good_end += len(line) + 1
    return outcomes, min(good_end, len(raw))


def load_checkpoint(path: str | Path) -> dict[str, InferenceOutcome]:
    """Completed outcomes keyed by report id; a torn trailing line is ignored."""
    return _read_checkpoint(path)[0]


def run_batch(
    records: list[UnifiedRecord],
    config: ModelConfig,
    template: PromptTemplate | None = None,
    parallelism: int = 1,
    checkpoint_path: str | Path | None = None,
) -> list[InferenceOutcome]:
    """Classify records concurrently; outcomes come back in input order.

    Records already in the checkpoint are returned as-is and never re-sent.
    """
    template = template or PromptTemplate.default()
    outcomes: dict[str, InferenceOutcome] = {}
    good_end = 0
    if checkpoint_path is not None:
        loaded, good_end = _read_checkpoint(checkpoint_path)
        outcomes.update(loaded)

    todo = [r for r in records if r.report_id not in outcomes]
    if todo:
        lock = threading.Lock()
        checkpoint_fh = None
        if checkpoint_path is not None:
            path = Path(checkpoint_path)
            # Appending after a torn tail would weld two lines together.
            if path.exists() and path.stat().st_size > good_end:
                with open(path, "r+b") as fh:
                    fh.truncate(good_end)
            checkpoint_fh = open(checkpoint_path, "a", encoding="utf-8")
        client = httpx.Client(timeout=config.request_timeout)
        try:
            def work(record: UnifiedRecord) -> InferenceOutcome:
                outcome = classify_record(record, config, template, client=client)
                if checkpoint_fh is not None:
                    line = json.dumps(_outcome_to_dict(outcome), ensure_ascii=False)
                    with lock:
                        checkpoint_fh.write(line + "\n")
                        checkpoint_fh.flush()
                return outcome

            fresh: list[InferenceOutcome] = []
            with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
                futures = [pool.submit(work, record) for record in todo]
                for future in as_completed(futures):
                    outcome = future.result()
                    fresh.append(outcome)
                    outcomes[outcome.report_id] = outcome
        finally:
            client.close()
            if checkpoint_fh is not None:
                checkpoint_fh.close()
        done = sum(1 for o in fresh if o.ok)
        logger.info("classified %d records (%d ok, %d failed)", len(todo), done, len(todo) - done)

    return [outcomes[record.report_id] for record in records]
