from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from saycan.domain import (
    DONE,
    GRIPPER,
    TERMINATE_SKILL,
    AffordanceEstimate,
    CandidateScore,
    DecisionRecord,
    Episode,
    Instruction,
    InstructionCase,
    InstructionFamily,
    PlanTrace,
    Skill,
    SkillFamily,
    Termination,
    WorldState,
    check_skill_set,
    slugify,
    validate_world_state,
)


def _state(**kw) -> WorldState:
    base = dict(
        robot_location="a",
        gripper_contents=None,
        object_placement={"x": "a", "y": "b"},
        location_coords={"a": (0.0, 0.0), "b": (3.0, 4.0)},
    )
    base.update(kw)
    return WorldState(**base)


def test_slugify():
    assert slugify("Coke Can") == "coke_can"
    assert slugify("7up can") == "7up_can"


def test_skill_requires_arguments():
    with pytest.raises(ValueError):
        Skill("pick_x", "pick up the x", SkillFamily.PICK)
    with pytest.raises(ValueError):
        Skill("go", "go to", SkillFamily.GO_TO)
    with pytest.raises(ValueError):
        Skill("", "label", SkillFamily.FIND, object_arg="x")


def test_done_label_is_reserved():
    with pytest.raises(ValueError):
        Skill("fake", DONE, SkillFamily.FIND, object_arg="x")
    with pytest.raises(ValueError):
        Skill("done", "finish", SkillFamily.TERMINATE)
    assert TERMINATE_SKILL.label == DONE


def test_skill_set_checks():
    a = Skill("pick_x", "pick up the x", SkillFamily.PICK, object_arg="x")
    check_skill_set([a, TERMINATE_SKILL])
    with pytest.raises(ValueError, match="terminate"):
        check_skill_set([a])
    with pytest.raises(ValueError, match="ids"):
        check_skill_set([a, a, TERMINATE_SKILL])
    b = Skill("pick_y", "pick up the x", SkillFamily.PICK, object_arg="y")
    with pytest.raises(ValueError, match="labels"):
        check_skill_set([a, b, TERMINATE_SKILL])


def test_instruction_must_be_non_empty():
    with pytest.raises(ValueError):
        Instruction("   ")


def test_effective_location_resolves_gripper_and_drawers():
    s = _state(
        gripper_contents="x",
        object_placement={"x": GRIPPER, "y": "drawer"},
        drawer_open={"drawer": False},
        drawer_locations={"drawer": "b"},
    )
    assert s.effective_location("x") == "a"
    assert s.effective_location("y") == "b"
    assert s.distance("a", "b") == 5.0


def test_move_object_keeps_gripper_consistent():
    s = _state().move_object("x", GRIPPER)
    assert s.gripper_contents == "x"
    s = s.move_object("x", "b")
    assert s.gripper_contents is None
    assert validate_world_state(s) == []


def test_validate_reports_each_violation():
    s = _state(gripper_contents="x", object_placement={"x": "a", "y": GRIPPER, "z": "moon"}, step_count=-1)
    kinds = {v.kind for v in validate_world_state(s)}
    assert {"negative", "duplicate placement", "gripper mismatch", "unknown location"} <= kinds
    assert validate_world_state(_state(robot_location="nowhere"))[0].path == "robot_location"


def test_affordance_estimate_range():
    with pytest.raises(ValueError):
        AffordanceEstimate("s", 1.0, 1.5)


def test_decision_record_chosen():
    c = CandidateScore("a", "A", -1.0, 0.36, 1.0, 0.36)
    rec = DecisionRecord(0, "p", (c,), "a")
    assert rec.chosen is c
    with pytest.raises(KeyError):
        DecisionRecord(0, "p", (c,), "b").chosen


def test_case_needs_a_plan():
    with pytest.raises(ValueError):
        InstructionCase("c", Instruction("x"), InstructionFamily.NL_NOUNS, (), {"all": []}, "kitchen")


def test_family_display_names():
    assert InstructionFamily.CROWD_SOURCED.display == "Crowd-Sourced"
    assert len(InstructionFamily) == 7


names = st.text(alphabet="abcdefgh", min_size=1, max_size=5)


@given(
    objs=st.dictionaries(names, st.sampled_from(["a", "b"]), max_size=5),
    loc=st.sampled_from(["a", "b"]),
    steps=st.integers(0, 100),
)
def test_world_state_round_trips_through_json(objs, loc, steps):
    s = _state(robot_location=loc, object_placement=objs, step_count=steps)
    again = WorldState.from_dict(json.loads(json.dumps(s.to_dict())))
    assert again == s


@given(
    lp=st.floats(-50, 0),
    aff=st.floats(0, 1),
    text=st.text(min_size=1).filter(lambda t: t.strip()),
    term=st.sampled_from(list(Termination)),
    outcomes=st.lists(st.booleans(), max_size=4),
)
def test_episode_round_trips_through_json(lp, aff, text, term, outcomes):
    c = CandidateScore("a", "A", lp, 2.0**lp, aff, aff * 2.0**lp)
    trace = PlanTrace(Instruction(text, "en"), (DecisionRecord(0, "p", (c,), "a", True),), ("A",), term, "saycan", ("n",))
    ep = Episode(trace, tuple(outcomes), _state(), True, False, 7)
    assert Episode.from_dict(json.loads(json.dumps(ep.to_dict()))) == ep


def test_skill_and_case_round_trip():
    s = Skill("put_x", "put down the x", SkillFamily.PLACE, object_arg="x")
    assert Skill.from_dict(s.to_dict()) == s
    case = InstructionCase(
        "c1", Instruction("put x down"), InstructionFamily.NL_SINGLE_PRIMITIVE, (("put down the x",),),
        {"gripper_empty": True}, "kitchen",
    )
    assert InstructionCase.from_dict(json.loads(json.dumps(case.to_dict()))) == case
