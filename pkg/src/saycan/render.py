"""Plain-text rendering of plan traces and world states."""

from __future__ import annotations

from .domain import DONE, DecisionRecord, PlanTrace, WorldState
from .prompting import number_steps


def _top(record: DecisionRecord, k: int):
    total = sum(c.llm_prob for c in record.candidates) or 1.0
    rows = sorted(record.candidates, key=lambda c: (-c.combined, -c.llm_prob, c.skill_id))
    top = rows[:k]
    if k > 0 and all(c.skill_id != record.chosen_skill_id for c in top):
        # the chosen row is always shown, replacing the last one
        top = [*top[:-1], record.chosen]
    return total, top


def render_step(record: DecisionRecord, top_k: int = 5) -> str:
    total, rows = _top(record, top_k)
    width = max([len(c.label) for c in rows] + [len("skill")])
    lines = [
        f"step {record.step_index + 1}",
        f"     {'skill':<{width}}  {'LM':>7}  {'affordance':>10}  {'combined':>9}",
    ]
    for c in rows:
        mark = " -> " if c.skill_id == record.chosen_skill_id else "    "
        lm = c.llm_prob / total
        lines.append(
            f"{mark} {c.label:<{width}}  {100 * lm:>6.2f}%  {c.affordance_prob:>10.3f}  {lm * c.affordance_prob:>9.4f}"
        )
    if record.tie_broken:
        lines.append("     (tie broken by skill id)")
    return "\n".join(lines)


def render_trace(trace: PlanTrace, top_k: int = 5) -> str:
    """Per-step top-k table (normalized LM probability, affordance, product) and the final plan."""
    parts = [f"instruction: {trace.instruction.text}"]
    parts.extend(render_step(r, top_k) for r in trace.records)
    steps = [*trace.labels, DONE] if trace.termination.value == "done_token" else list(trace.labels)
    parts.append(f"plan: {number_steps(steps) if steps else '(empty)'}")
    parts.append(f"termination: {trace.termination.value}")
    for n in trace.notes:
        parts.append(f"note: {n}")
    return "\n".join(parts) + "\n"


def render_state(state: WorldState) -> str:
    lines = [f"robot at: {state.robot_location}", f"holding: {state.gripper_contents or 'nothing'}"]
    by_place: dict[str, list[str]] = {}
    for obj, where in sorted(state.object_placement.items()):
        if where == "gripper":
            continue
        by_place.setdefault(where, []).append(obj)
    for where in sorted(by_place):
        lines.append(f"{where}: {', '.join(by_place[where])}")
    for d, is_open in sorted(state.drawer_open.items()):
        lines.append(f"{d}: {'open' if is_open else 'closed'}")
    return "\n".join(lines) + "\n"
