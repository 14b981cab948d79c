"""Build deterministic "perfect language model" tables from known solutions.

For every prefix of a solution the oracle puts mass 1 on the next step and
geometrically decaying mass on the steps after it, ending with ``done``.
Decaying mass on later steps matters when planning starts part-way through
a task: steps already satisfied by the world are capped to zero by the
affordance layer, and the earliest remaining step wins.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .domain import DONE
from .prompting import number_steps
from .scoring import CannedGeneration, ScorerTable, TableRule


def _suffix_key(plan: Sequence[str], t: int) -> tuple[str, ...]:
    """Shortest suffix of plan[:t] that no other prefix of ``plan`` ends with."""
    hist = tuple(plan[:t])
    if t == 0:
        return ()
    for k in range(1, t + 1):
        key = hist[-k:]
        clash = any(p != t and p >= k and tuple(plan[p - k : p]) == key for p in range(len(plan) + 1))
        if not clash:
            return key
    return hist


def next_step_distribution(plan: Sequence[str], t: int, decay: float = 0.5) -> dict[str, float]:
    dist: dict[str, float] = {}
    for j, label in enumerate([*plan[t:], DONE]):
        dist.setdefault(label, decay**j)
    return dist


def oracle_rules(
    instruction: str,
    plan: Sequence[str],
    decay: float = 0.5,
    explanation_contains: str | None = None,
) -> list[TableRule]:
    rules = [
        TableRule(
            distribution=next_step_distribution(plan, t, decay),
            instruction=instruction,
            explanation_contains=explanation_contains,
            history_suffix=_suffix_key(plan, t),
        )
        for t in range(len(plan) + 1)
    ]
    # longest keys first so the most specific context wins
    rules.sort(key=lambda r: -len(r.history_suffix or ()))
    return rules


def build_oracle_table(
    solutions: Iterable[tuple[str, Sequence[str]]],
    decay: float = 0.5,
    floor: float = 1e-9,
) -> ScorerTable:
    """Oracle table for (instruction, plan) pairs; the first plan seen per instruction wins."""
    seen: dict[str, Sequence[str]] = {}
    for instruction, plan in solutions:
        seen.setdefault(instruction, plan)
    rules: list[TableRule] = []
    gens: list[CannedGeneration] = []
    for instruction, plan in seen.items():
        rules.extend(oracle_rules(instruction, plan, decay))
        gens.append(CannedGeneration(text=number_steps([*plan, DONE]), instruction=instruction))
    return ScorerTable(rules=tuple(rules), generations=tuple(gens), floor=floor)
