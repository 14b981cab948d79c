"""Seeded symbolic environments: the mock kitchen and the tabletop blocks domain.

Skills execute with per-family success probabilities. Goal predicates are
small JSON trees so instruction suites can be stored as data::

    {"all": [{"at": ["coke_can", "user"]}, {"gripper_empty": true}]}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .domain import (
    GRIPPER,
    InstructionCase,
    Skill,
    SkillFamily,
    WorldState,
    validate_world_state,
)


@dataclass(frozen=True)
class Scenario:
    id: str
    initial_state: WorldState
    kind: str = "kitchen"
    success_prob: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("kitchen", "tabletop"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        for fam, p in self.success_prob.items():
            SkillFamily(fam)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"success probability for {fam} outside [0, 1]: {p}")
        problems = validate_world_state(self.initial_state)
        if problems:
            raise ValueError(f"scenario {self.id}: invalid initial state: {'; '.join(map(str, problems))}")

    def success_for(self, family: SkillFamily) -> float:
        return self.success_prob.get(family.value, 1.0)

    def with_success_prob(self, p: float | Mapping[str, float]) -> Scenario:
        if isinstance(p, Mapping):
            probs = {**self.success_prob, **p}
        else:
            probs = {f.value: float(p) for f in SkillFamily}
        return Scenario(self.id, self.initial_state, self.kind, probs)


@dataclass(frozen=True)
class StepOutcome:
    skill_id: str
    success: bool
    reason: str
    state_after: WorldState


def reset(scenario: Scenario) -> WorldState:
    return copy.deepcopy(scenario.initial_state).with_changes(step_count=0)


def feasible(state: WorldState, skill: Skill) -> tuple[bool, str]:
    """Preconditions by family; returns (ok, reason)."""
    fam = skill.family
    obj = skill.object_arg
    held = state.gripper_contents
    if obj is not None and obj not in state.object_placement:
        return False, f"unknown object {obj!r}"

    if fam is SkillFamily.PICK:
        if held is not None:
            return False, "gripper occupied"
        if state.object_placement[obj] != state.robot_location:
            return False, "object not here"
        return True, "ok"
    if fam is SkillFamily.PLACE:
        return (True, "ok") if held == obj else (False, "not holding object")
    if fam is SkillFamily.GO_TO:
        if state.location_coords and skill.location_arg not in state.location_coords:
            return False, "unknown location"
        return True, "ok"
    if fam in (SkillFamily.FIND, SkillFamily.TERMINATE):
        return True, "ok"

    if fam is SkillFamily.PICK_PLACE:
        if held is not None:
            return False, "gripper occupied"
        if state.object_placement[obj] == GRIPPER:
            return False, "object not on table"
        return True, "ok"

    drawer = skill.location_arg
    if drawer not in state.drawer_open:
        return False, "unknown drawer"
    if state.robot_location != state.drawer_locations.get(drawer):
        return False, "not at drawer"
    is_open = state.drawer_open[drawer]
    if fam is SkillFamily.OPEN_DRAWER:
        return (False, "drawer already open") if is_open else (True, "ok")
    if fam is SkillFamily.CLOSE_DRAWER:
        return (True, "ok") if is_open else (False, "drawer already closed")
    if not is_open:
        return False, "drawer closed"
    if fam is SkillFamily.PUT_IN_DRAWER:
        return (True, "ok") if held == obj else (False, "not holding object")
    if fam is SkillFamily.TAKE_FROM_DRAWER:
        if held is not None:
            return False, "gripper occupied"
        if state.object_placement[obj] != drawer:
            return False, "object not in drawer"
        return True, "ok"
    raise ValueError(f"unknown skill family {fam!r}")


def _apply_effects(state: WorldState, skill: Skill) -> WorldState:
    fam = skill.family
    obj = skill.object_arg
    if fam is SkillFamily.PICK or fam is SkillFamily.TAKE_FROM_DRAWER:
        return state.move_object(obj, GRIPPER)
    if fam is SkillFamily.PLACE:
        return state.move_object(obj, state.robot_location)
    if fam is SkillFamily.GO_TO:
        return state.with_changes(robot_location=skill.location_arg)
    if fam is SkillFamily.FIND:
        return state.with_changes(robot_location=state.effective_location(obj))
    if fam is SkillFamily.OPEN_DRAWER or fam is SkillFamily.CLOSE_DRAWER:
        drawers = dict(state.drawer_open)
        drawers[skill.location_arg] = fam is SkillFamily.OPEN_DRAWER
        return state.with_changes(drawer_open=drawers)
    if fam is SkillFamily.PUT_IN_DRAWER:
        return state.move_object(obj, skill.location_arg)
    if fam is SkillFamily.PICK_PLACE:
        return state.move_object(obj, skill.location_arg)
    return state


def execute(
    state: WorldState,
    skill: Skill,
    rng: np.random.Generator,
    scenario: Scenario,
) -> StepOutcome:
    """Attempt ``skill``; failures (infeasible or unlucky) leave the world untouched.

    One uniform draw is consumed per call whether or not the skill is
    feasible, so episodes with the same seed stay coupled across success
    probabilities.
    """
    u = float(rng.random())
    ok, reason = feasible(state, skill)
    bumped = state.with_changes(step_count=state.step_count + 1)
    if not ok:
        return StepOutcome(skill.id, False, reason, bumped)
    if u >= scenario.success_for(skill.family):
        return StepOutcome(skill.id, False, "execution failure", bumped)
    return StepOutcome(skill.id, True, "ok", _apply_effects(bumped, skill))


def apply_nominal(state: WorldState, skill: Skill) -> WorldState:
    """Deterministic success-if-feasible transition, used when planning without execution."""
    ok, _ = feasible(state, skill)
    bumped = state.with_changes(step_count=state.step_count + 1)
    return _apply_effects(bumped, skill) if ok else bumped


# ---------------------------------------------------------------------------
# Goal predicates
# ---------------------------------------------------------------------------


def eval_predicate(pred: Mapping[str, Any], state: WorldState) -> bool:
    if len(pred) != 1:
        raise ValueError(f"predicate must have exactly one key: {pred!r}")
    (op, arg), = pred.items()
    if op == "all":
        return all(eval_predicate(p, state) for p in arg)
    if op == "any":
        return any(eval_predicate(p, state) for p in arg)
    if op == "not":
        return not eval_predicate(arg, state)
    if op == "at":
        # physically at a location, in hand counts
        obj, loc = arg
        return state.effective_location(obj) == loc
    if op == "placed":
        obj, loc = arg
        return state.object_placement[obj] == loc
    if op == "holding":
        return state.gripper_contents == arg
    if op == "gripper_empty":
        return (state.gripper_contents is None) == bool(arg)
    if op == "robot_at":
        return state.robot_location == arg
    if op == "near":
        return state.effective_location(arg) == state.robot_location
    if op == "placed_at_robot":
        return state.object_placement[arg] == state.robot_location
    if op == "drawer_open":
        return state.drawer_open[arg]
    if op == "drawer_closed":
        return not state.drawer_open[arg]
    if op == "in_drawer":
        obj, drawer = arg
        return state.object_placement[obj] == drawer
    raise ValueError(f"unknown predicate operator {op!r}")


def predicate_objects(pred: Mapping[str, Any]) -> set[str]:
    """Object ids mentioned by a predicate (for suite validation)."""
    (op, arg), = pred.items()
    if op in ("all", "any"):
        return set().union(*(predicate_objects(p) for p in arg)) if arg else set()
    if op == "not":
        return predicate_objects(arg)
    if op in ("at", "placed", "in_drawer"):
        return {arg[0]}
    if op in ("holding", "near", "placed_at_robot"):
        return {arg}
    return set()


def check_goal(state: WorldState, case: InstructionCase) -> bool:
    return eval_predicate(case.goal_predicate, state)
