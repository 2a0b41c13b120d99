"""Prompt construction for the incident classifier.

The template renders to a single text with two placeholders: {{EXAMPLES}}
for the one-shot example block and {{FULL_TEXT}} for the report under
classification. Everything above the {{FULL_TEXT}} line becomes the system
message; the rest becomes the user message. Rendering the same template is
byte-identical across runs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

FULL_TEXT_SLOT = "{{FULL_TEXT}}"
EXAMPLES_SLOT = "{{EXAMPLES}}"
TRUNCATION_SENTINEL = "[TRUNCATED]"
DEFAULT_MAX_CONTEXT_CHARS = 24_000

PERSONA = (
    "You are an autonomous vehicle (AV) incident analyst. "
    "Perform all reasoning internally and only output the final structured result."
)

TASKS = (
    "Decide if AV contributed.",
    "Select primary cause.",
    "Identify failed system (if S).",
    "Check if AI response was late.",
    "Assign secondary cause.",
)

AV_FAILED_RULES = (
    "Moving AV action contributed -> Y",
    "Parked/Stationary rear-ended -> N (unless avoidable -> Y)",
    "Delayed detection/reaction -> Y and Late AI = true",
    "Insufficient info -> I",
)

CODE_TABLES = (
    "Causes: S (Sys), H (Hum), E (Env), N (None)\n"
    "Systems: PE (Perc), PL (Plan), CO (Control), SW, HW, HA, N"
)

SECONDARY_RULES = (
    "Provide only if multiple factors",
    "Must differ from primary (S, H, E, N)",
)

EXAMPLE_1 = (
    "AV rear-ended while stopped at a red light.",
    '{"AV_Failed": "N", "Cause": "H", "System": "N", "Late": false}',
)
EXAMPLE_2 = (
    "AV failed to detect pedestrian; emergency braking engaged 0.5s after impact.",
    '{"AV_Failed": "Y", "Cause": "S", "System": "PE", "Late": true}',
)


@dataclass(frozen=True)
class DecodingParams:
    """Deterministic decoding by default: greedy, no nucleus cut."""

    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = 1024


@dataclass(frozen=True)
class PromptTemplate:
    persona: str = PERSONA
    task_list: tuple[str, ...] = TASKS
    rules: tuple[str, ...] = AV_FAILED_RULES
    code_tables: str = CODE_TABLES
    secondary_rules: tuple[str, ...] = SECONDARY_RULES
    one_shot_examples: tuple[tuple[str, str], ...] = (EXAMPLE_1, EXAMPLE_2)
    # Raw template file content; when set it overrides the synthesized layout.
    body_text: str | None = None

    @classmethod
    def default(cls) -> PromptTemplate:
        return cls()

    @classmethod
    def from_file(cls, path: str | Path) -> PromptTemplate:
        text = Path(path).read_text(encoding="utf-8")
        if FULL_TEXT_SLOT not in text:
            raise ValueError(f"template {path} is missing the {FULL_TEXT_SLOT} placeholder")
        return cls(body_text=text)

    def skeleton(self) -> str:
        """Template text with both placeholders still unresolved."""
        if self.body_text is not None:
            return self.body_text
        tasks = "\n".join(f"{i}. {task}" for i, task in enumerate(self.task_list, start=1))
        rules = "\n".join(f"- {rule}" for rule in self.rules)
        secondary = "\n".join(f"- {rule}" for rule in self.secondary_rules)
        return (
            f"{self.persona}\n"
            "\n"
            "Tasks:\n"
            f"{tasks}\n"
            "\n"
            "Rules for AV Failed:\n"
            f"{rules}\n"
            "\n"
            f"{self.code_tables}\n"
            "\n"
            "Secondary Cause Rules:\n"
            f"{secondary}\n"
            "\n"
            "Examples:\n"
            f"{EXAMPLES_SLOT}\n"
            "\n"
            f"Incident report: {FULL_TEXT_SLOT}\n"
            "\n"
            "Only output the final structured result."
        )

    def examples_block(self) -> str:
        blocks = []
        for i, (narrative, output) in enumerate(self.one_shot_examples, start=1):
            blocks.append(f"Ex {i}: {narrative}\nOutput: {output}")
        return "\n\n".join(blocks)

    def resolved(self) -> str:
        """Template with examples filled in; only {{FULL_TEXT}} remains."""
        return self.skeleton().replace(EXAMPLES_SLOT, self.examples_block())

    def content_hash(self) -> str:
        return hashlib.sha256(self.resolved().encode("utf-8")).hexdigest()[:16]


def build_prompt(
    full_text: str,
    template: PromptTemplate | None = None,
    max_context_chars: int = DEFAULT_MAX_CONTEXT_CHARS,
) -> tuple[str, str]:
    """Render (system_text, user_text) for one report.

    The report text is truncated head-first to keep the user message within
    max_context_chars; a dropped tail is marked with the truncation sentinel.
    """
    template = template or PromptTemplate.default()
    text = template.resolved()
    slot_at = text.find(FULL_TEXT_SLOT)
    if slot_at < 0:
        raise ValueError(f"template is missing the {FULL_TEXT_SLOT} placeholder")
    line_start = text.rfind("\n", 0, slot_at) + 1
    system_text = text[:line_start].rstrip("\n")
    user_layout = text[line_start:]

    budget = max_context_chars - (len(user_layout) - len(FULL_TEXT_SLOT))
    if len(full_text) > budget:
        body = full_text[: max(budget, 0)] + TRUNCATION_SENTINEL
    else:
        body = full_text
    user_text = user_layout.replace(FULL_TEXT_SLOT, body)
    return system_text, user_text
