"""Core value types shared by the planner, environments and evaluation harness.

Every type here is a frozen dataclass. Mapping-valued fields are plain dicts
that are never mutated after construction; use the ``with_*`` helpers on
:class:`WorldState` to derive new states.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping, Sequence

DONE = "done"
GRIPPER = "gripper"


class SkillFamily(str, Enum):
    PICK = "pick"
    GO_TO = "go_to"
    FIND = "find"
    PLACE = "place"
    OPEN_DRAWER = "open_drawer"
    CLOSE_DRAWER = "close_drawer"
    PUT_IN_DRAWER = "put_in_drawer"
    TAKE_FROM_DRAWER = "take_from_drawer"
    PICK_PLACE = "pick_place"  # tabletop composite skill
    TERMINATE = "terminate"


DRAWER_FAMILIES = frozenset(
    {
        SkillFamily.OPEN_DRAWER,
        SkillFamily.CLOSE_DRAWER,
        SkillFamily.PUT_IN_DRAWER,
        SkillFamily.TAKE_FROM_DRAWER,
    }
)


class InstructionFamily(str, Enum):
    NL_SINGLE_PRIMITIVE = "nl_single_primitive"
    NL_NOUNS = "nl_nouns"
    NL_VERBS = "nl_verbs"
    STRUCTURED_LANGUAGE = "structured_language"
    EMBODIMENT = "embodiment"
    CROWD_SOURCED = "crowd_sourced"
    LONG_HORIZON = "long_horizon"

    @property
    def display(self) -> str:
        return _FAMILY_DISPLAY[self]


_FAMILY_DISPLAY = {
    InstructionFamily.NL_SINGLE_PRIMITIVE: "NL Single Primitive",
    InstructionFamily.NL_NOUNS: "NL Nouns",
    InstructionFamily.NL_VERBS: "NL Verbs",
    InstructionFamily.STRUCTURED_LANGUAGE: "Structured Language",
    InstructionFamily.EMBODIMENT: "Embodiment",
    InstructionFamily.CROWD_SOURCED: "Crowd-Sourced",
    InstructionFamily.LONG_HORIZON: "Long-Horizon",
}


class Termination(str, Enum):
    DONE_TOKEN = "done_token"
    MAX_STEPS = "max_steps"
    NO_FEASIBLE = "no_feasible"


def slugify(name: str) -> str:
    """Lowercase snake-case identifier derived from a display name."""
    slug = re.sub(r"[^0-9a-z]+", "_", name.strip().lower()).strip("_")
    if not slug:
        raise ValueError(f"cannot derive an id from {name!r}")
    return slug


# ---------------------------------------------------------------------------
# Skills and instructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Skill:
    """An atomic capability with its natural-language label.

    ``location_arg`` holds the target location for go_to/pick_place and the
    drawer id for the drawer families.
    """

    id: str
    label: str
    family: SkillFamily
    object_arg: str | None = None
    location_arg: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("skill id must be non-empty")
        if not self.label:
            raise ValueError(f"skill {self.id}: label must be non-empty")
        fam = SkillFamily(self.family)
        object.__setattr__(self, "family", fam)
        if fam is SkillFamily.TERMINATE:
            if self.label != DONE or self.object_arg or self.location_arg:
                raise ValueError("terminate skill must be labelled 'done' with no arguments")
            return
        if self.label == DONE:
            raise ValueError("the label 'done' is reserved for the terminate skill")
        needs_object = {
            SkillFamily.PICK,
            SkillFamily.FIND,
            SkillFamily.PLACE,
            SkillFamily.PUT_IN_DRAWER,
            SkillFamily.TAKE_FROM_DRAWER,
            SkillFamily.PICK_PLACE,
        }
        needs_location = {SkillFamily.GO_TO, SkillFamily.PICK_PLACE} | DRAWER_FAMILIES
        if fam in needs_object and not self.object_arg:
            raise ValueError(f"skill {self.id}: family {fam.value} requires object_arg")
        if fam in needs_location and not self.location_arg:
            raise ValueError(f"skill {self.id}: family {fam.value} requires location_arg")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label,
            "family": self.family.value,
            "object_arg": self.object_arg,
            "location_arg": self.location_arg,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Skill:
        return cls(
            id=d["id"],
            label=d["label"],
            family=SkillFamily(d["family"]),
            object_arg=d.get("object_arg"),
            location_arg=d.get("location_arg"),
        )


TERMINATE_SKILL = Skill(id=DONE, label=DONE, family=SkillFamily.TERMINATE)


def check_skill_set(skills: Sequence[Skill]) -> None:
    """Raise ValueError unless ids and labels are unique and exactly one terminate exists."""
    ids = [s.id for s in skills]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate skill ids in skill set")
    labels = [s.label for s in skills]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate skill labels in skill set")
    n_term = sum(s.family is SkillFamily.TERMINATE for s in skills)
    if n_term != 1:
        raise ValueError(f"skill set must contain exactly one terminate skill, found {n_term}")


@dataclass(frozen=True)
class Instruction:
    text: str
    language_tag: str | None = None

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("instruction text must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"text": self.text, "language_tag": self.language_tag}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Instruction:
        return cls(text=d["text"], language_tag=d.get("language_tag"))


# ---------------------------------------------------------------------------
# World state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorldState:
    """Full simulated environment plus robot state.

    ``object_placement`` maps each object to a location id, a drawer id, or
    ``"gripper"``. ``drawer_locations`` records where each drawer sits so that
    objects stored inside one still have a navigable position.
    """

    robot_location: str
    gripper_contents: str | None
    object_placement: dict[str, str]
    drawer_open: dict[str, bool] = field(default_factory=dict)
    step_count: int = 0
    location_coords: dict[str, tuple[float, float]] = field(default_factory=dict)
    drawer_locations: dict[str, str] = field(default_factory=dict)

    def effective_location(self, obj: str) -> str:
        """Location id where ``obj`` physically is (gripper and drawers resolved)."""
        where = self.object_placement[obj]
        if where == GRIPPER:
            return self.robot_location
        if where in self.drawer_locations:
            return self.drawer_locations[where]
        return where

    def distance(self, a: str, b: str) -> float:
        ax, ay = self.location_coords[a]
        bx, by = self.location_coords[b]
        return ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5

    def with_changes(self, **changes: Any) -> WorldState:
        return replace(self, **changes)

    def move_object(self, obj: str, where: str) -> WorldState:
        placement = dict(self.object_placement)
        placement[obj] = where
        gripper = self.gripper_contents
        if where == GRIPPER:
            gripper = obj
        elif gripper == obj:
            gripper = None
        return replace(self, object_placement=placement, gripper_contents=gripper)

    def to_dict(self) -> dict[str, Any]:
        return {
            "robot_location": self.robot_location,
            "gripper_contents": self.gripper_contents,
            "object_placement": dict(self.object_placement),
            "drawer_open": dict(self.drawer_open),
            "step_count": self.step_count,
            "location_coords": {k: [v[0], v[1]] for k, v in self.location_coords.items()},
            "drawer_locations": dict(self.drawer_locations),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> WorldState:
        return cls(
            robot_location=d["robot_location"],
            gripper_contents=d.get("gripper_contents"),
            object_placement=dict(d["object_placement"]),
            drawer_open={k: bool(v) for k, v in d.get("drawer_open", {}).items()},
            step_count=int(d.get("step_count", 0)),
            location_coords={
                k: (float(v[0]), float(v[1])) for k, v in d.get("location_coords", {}).items()
            },
            drawer_locations=dict(d.get("drawer_locations", {})),
        )


@dataclass(frozen=True)
class Violation:
    path: str
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.kind}: {self.message}"


def validate_world_state(state: WorldState) -> list[Violation]:
    """Return every invariant violation found in ``state``; empty means valid."""
    out: list[Violation] = []
    known = set(state.location_coords) | set(state.drawer_open) | {GRIPPER}

    if state.location_coords and state.robot_location not in state.location_coords:
        out.append(
            Violation("robot_location", "unknown location", f"{state.robot_location!r} has no coordinates")
        )
    if state.step_count < 0:
        out.append(Violation("step_count", "negative", f"step_count={state.step_count}"))

    in_gripper = sorted(o for o, w in state.object_placement.items() if w == GRIPPER)
    if len(in_gripper) > 1:
        out.append(
            Violation("object_placement", "gripper capacity", f"objects {in_gripper} all marked as in gripper")
        )
    g = state.gripper_contents
    if g is not None:
        if g not in state.object_placement:
            out.append(Violation("gripper_contents", "unknown object", f"{g!r} has no placement"))
        elif state.object_placement[g] != GRIPPER:
            out.append(
                Violation(
                    f"object_placement.{g}",
                    "duplicate placement",
                    f"{g!r} is in the gripper and also at {state.object_placement[g]!r}",
                )
            )
    for obj in in_gripper:
        if obj != g:
            out.append(
                Violation(
                    f"object_placement.{obj}",
                    "gripper mismatch",
                    f"{obj!r} marked as in gripper but gripper_contents={g!r}",
                )
            )
    if state.location_coords or state.drawer_open:
        for obj, where in sorted(state.object_placement.items()):
            if where not in known:
                out.append(Violation(f"object_placement.{obj}", "unknown location", f"{where!r}"))
    for drawer, loc in sorted(state.drawer_locations.items()):
        if drawer not in state.drawer_open:
            out.append(Violation(f"drawer_locations.{drawer}", "unknown drawer", f"{drawer!r}"))
        if state.location_coords and loc not in state.location_coords:
            out.append(Violation(f"drawer_locations.{drawer}", "unknown location", f"{loc!r}"))
    return out


# ---------------------------------------------------------------------------
# Scores, decisions and traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffordanceEstimate:
    skill_id: str
    raw_value: float
    probability: float
    capped: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"{self.skill_id}: affordance probability {self.probability} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "skill_id": self.skill_id,
            "raw_value": self.raw_value,
            "probability": self.probability,
            "capped": self.capped,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> AffordanceEstimate:
        return cls(d["skill_id"], float(d["raw_value"]), float(d["probability"]), bool(d["capped"]))


@dataclass(frozen=True)
class CandidateScore:
    skill_id: str
    label: str
    llm_logprob: float
    llm_prob: float
    affordance_prob: float
    combined: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "skill_id": self.skill_id,
            "label": self.label,
            "llm_logprob": self.llm_logprob,
            "llm_prob": self.llm_prob,
            "affordance_prob": self.affordance_prob,
            "combined": self.combined,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> CandidateScore:
        return cls(
            skill_id=d["skill_id"],
            label=d["label"],
            llm_logprob=float(d["llm_logprob"]),
            llm_prob=float(d["llm_prob"]),
            affordance_prob=float(d["affordance_prob"]),
            combined=float(d["combined"]),
        )


@dataclass(frozen=True)
class DecisionRecord:
    step_index: int
    prompt_snapshot: str
    candidates: tuple[CandidateScore, ...]
    chosen_skill_id: str
    tie_broken: bool = False

    @property
    def chosen(self) -> CandidateScore:
        for c in self.candidates:
            if c.skill_id == self.chosen_skill_id:
                return c
        raise KeyError(self.chosen_skill_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_index": self.step_index,
            "prompt_snapshot": self.prompt_snapshot,
            "candidates": [c.to_dict() for c in self.candidates],
            "chosen_skill_id": self.chosen_skill_id,
            "tie_broken": self.tie_broken,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> DecisionRecord:
        return cls(
            step_index=int(d["step_index"]),
            prompt_snapshot=d["prompt_snapshot"],
            candidates=tuple(CandidateScore.from_dict(c) for c in d["candidates"]),
            chosen_skill_id=d["chosen_skill_id"],
            tie_broken=bool(d["tie_broken"]),
        )


@dataclass(frozen=True)
class PlanTrace:
    instruction: Instruction
    records: tuple[DecisionRecord, ...]
    labels: tuple[str, ...]
    termination: Termination
    mode: str = "saycan"
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "instruction": self.instruction.to_dict(),
            "records": [r.to_dict() for r in self.records],
            "labels": list(self.labels),
            "termination": self.termination.value,
            "mode": self.mode,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PlanTrace:
        return cls(
            instruction=Instruction.from_dict(d["instruction"]),
            records=tuple(DecisionRecord.from_dict(r) for r in d["records"]),
            labels=tuple(d["labels"]),
            termination=Termination(d["termination"]),
            mode=d.get("mode", "saycan"),
            notes=tuple(d.get("notes", ())),
        )


@dataclass(frozen=True)
class Episode:
    trace: PlanTrace
    step_outcomes: tuple[bool, ...]
    final_state: WorldState
    plan_success: bool
    execution_success: bool
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace": self.trace.to_dict(),
            "step_outcomes": list(self.step_outcomes),
            "final_state": self.final_state.to_dict(),
            "plan_success": self.plan_success,
            "execution_success": self.execution_success,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Episode:
        return cls(
            trace=PlanTrace.from_dict(d["trace"]),
            step_outcomes=tuple(bool(x) for x in d["step_outcomes"]),
            final_state=WorldState.from_dict(d["final_state"]),
            plan_success=bool(d["plan_success"]),
            execution_success=bool(d["execution_success"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class InstructionCase:
    """An instruction with its referee: acceptable plans plus a goal predicate.

    ``goal_predicate`` is a JSON-able predicate tree evaluated by
    :func:`saycan.simenv.check_goal`.
    """

    case_id: str
    instruction: Instruction
    family: InstructionFamily
    acceptable_plans: tuple[tuple[str, ...], ...]
    goal_predicate: dict[str, Any]
    initial_scenario: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", InstructionFamily(self.family))
        if not self.acceptable_plans:
            raise ValueError(f"case {self.case_id}: acceptable_plans must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "instruction": self.instruction.text,
            "language_tag": self.instruction.language_tag,
            "family": self.family.value,
            "acceptable_plans": [list(p) for p in self.acceptable_plans],
            "goal": self.goal_predicate,
            "scenario": self.initial_scenario,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> InstructionCase:
        return cls(
            case_id=str(d["case_id"]),
            instruction=Instruction(d["instruction"], d.get("language_tag")),
            family=InstructionFamily(d["family"]),
            acceptable_plans=tuple(tuple(p) for p in d["acceptable_plans"]),
            goal_predicate=d["goal"],
            initial_scenario=d["scenario"],
        )
