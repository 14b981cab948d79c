"""Dialog-structured prompts for step scoring.

A rendered prompt looks like::

    Human: open the drawer
    Robot: 1. go to the drawers, 2. open the drawer, 3. done.
    Human: bring me a coke can
    Robot: 1. find a coke can, 2.

The scorer completes the dangling step number. Chain-of-thought templates add
an ``Explanation:`` line between the human and robot turns.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .domain import DONE, Instruction


@dataclass(frozen=True)
class PromptExample:
    query: str
    steps: tuple[str, ...]
    explanation: str | None = None


@dataclass(frozen=True)
class PromptTemplate:
    examples: tuple[PromptExample, ...]
    human_prefix: str = "Human: "
    robot_prefix: str = "Robot: "
    preamble: str = ""
    cot_enabled: bool = False
    explanation_label: str = "Explanation:"
    name: str = "default"

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": 1,
            "name": self.name,
            "human_prefix": self.human_prefix,
            "robot_prefix": self.robot_prefix,
            "preamble": self.preamble,
            "cot_enabled": self.cot_enabled,
            "explanation_label": self.explanation_label,
            "examples": [
                {"query": e.query, "steps": list(e.steps), **({"explanation": e.explanation} if e.explanation else {})}
                for e in self.examples
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PromptTemplate:
        return cls(
            examples=tuple(
                PromptExample(e["query"], tuple(e["steps"]), e.get("explanation")) for e in d.get("examples", [])
            ),
            human_prefix=d.get("human_prefix", "Human: "),
            robot_prefix=d.get("robot_prefix", "Robot: "),
            preamble=d.get("preamble", ""),
            cot_enabled=bool(d.get("cot_enabled", False)),
            explanation_label=d.get("explanation_label", "Explanation:"),
            name=d.get("name", "default"),
        )


def load_template(path: str | Path) -> PromptTemplate:
    with open(path, encoding="utf-8") as f:
        return PromptTemplate.from_dict(json.load(f))


def truncate_examples(template: PromptTemplate, k: int) -> PromptTemplate:
    """Keep only the first ``k`` examples."""
    if not 0 <= k <= len(template.examples):
        raise ValueError(f"k={k} out of range [0, {len(template.examples)}]")
    return replace(template, examples=template.examples[:k])


def with_examples(template: PromptTemplate, extra: Sequence[PromptExample]) -> PromptTemplate:
    return replace(template, examples=template.examples + tuple(extra))


def number_steps(steps: Sequence[str]) -> str:
    return ", ".join(f"{i}. {s}" for i, s in enumerate(steps, start=1))


def _render_example(t: PromptTemplate, ex: PromptExample) -> str:
    lines = [f"{t.human_prefix}{ex.query}"]
    if t.cot_enabled and ex.explanation:
        lines.append(f"{t.explanation_label} {ex.explanation}")
    lines.append(f"{t.robot_prefix}{number_steps(ex.steps)}.")
    return "\n".join(lines) + "\n"


def render_examples(template: PromptTemplate) -> str:
    head = template.preamble + ("\n" if template.preamble and not template.preamble.endswith("\n") else "")
    return head + "".join(_render_example(template, ex) for ex in template.examples)


def _robot_turn(template: PromptTemplate, history: Sequence[str]) -> str:
    if DONE in history:
        raise ValueError("history must not contain 'done'")
    done = number_steps(history)
    nxt = f"{len(history) + 1}."
    return f"{template.robot_prefix}{done + ', ' if done else ''}{nxt}"


def build_prompt(template: PromptTemplate, instruction: Instruction, history: Sequence[str]) -> str:
    return (
        render_examples(template)
        + f"{template.human_prefix}{instruction.text}\n"
        + _robot_turn(template, history)
    )


def build_cot_prompt(
    template: PromptTemplate,
    instruction: Instruction,
    history: Sequence[str],
    explanation: str | None = None,
) -> str:
    """Prompt ending at the explanation slot (generation) or at the next step (scoring)."""
    if not template.cot_enabled:
        raise ValueError(f"template {template.name!r} is not a chain-of-thought template")
    head = render_examples(template) + f"{template.human_prefix}{instruction.text}\n"
    if explanation is None:
        if DONE in history:
            raise ValueError("history must not contain 'done'")
        return head + template.explanation_label
    return head + f"{template.explanation_label} {explanation}\n" + _robot_turn(template, history)


# ---------------------------------------------------------------------------
# Parsing (used by the table scorer and the generative baseline)
# ---------------------------------------------------------------------------

_STEP_RE = re.compile(r"(?:^|(?<=[,\n])|(?<=\s))\s*(\d+)\.(?=\s|$)")


def parse_numbered_steps(text: str) -> list[str]:
    """Split ``"1. a, 2. b\\n3. done."`` into ``["a", "b", "done"]``.

    Text before the first number is treated as step 1 (a continuation of a
    prompt that already ended with ``1.``). Empty trailing steps are dropped.
    """
    text = text.strip()
    if not text:
        return []
    marks = list(_STEP_RE.finditer(text))
    pieces: list[str] = []
    if not marks or text[: marks[0].start()].strip():
        end = marks[0].start() if marks else len(text)
        pieces.append(text[:end])
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(text)
        pieces.append(text[m.end() : end])
    steps = [p.strip().strip(",").strip().rstrip(".").strip() for p in pieces]
    while steps and not steps[-1]:
        steps.pop()
    return steps


@dataclass(frozen=True)
class LiveQuery:
    instruction: str
    history: tuple[str, ...]
    explanation: str | None = None
    awaiting_explanation: bool = False
    extra: dict[str, Any] = field(default_factory=dict)


def parse_live_query(
    prompt: str,
    human_prefix: str = "Human: ",
    robot_prefix: str = "Robot: ",
    explanation_label: str = "Explanation:",
) -> LiveQuery:
    """Recover instruction, explanation and completed steps from the final dialog turn."""
    idx = prompt.rfind(human_prefix)
    if idx < 0:
        return LiveQuery(instruction=prompt.strip(), history=())
    live = prompt[idx + len(human_prefix) :]
    instruction, _, rest = live.partition("\n")
    explanation = None
    awaiting = False
    if rest.startswith(explanation_label):
        exp_line, sep, rest = rest.partition("\n")
        if not sep:
            awaiting = True
        else:
            explanation = exp_line[len(explanation_label) :].strip()
    history: tuple[str, ...] = ()
    if rest.startswith(robot_prefix):
        steps = parse_numbered_steps(rest[len(robot_prefix) :])
        history = tuple(steps)
    return LiveQuery(instruction.strip(), history, explanation, awaiting)
