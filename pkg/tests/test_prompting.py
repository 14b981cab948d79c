from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from saycan.domain import Instruction
from saycan.prompting import (
    PromptExample,
    PromptTemplate,
    build_cot_prompt,
    build_prompt,
    number_steps,
    parse_live_query,
    parse_numbered_steps,
    truncate_examples,
    with_examples,
)

TEMPLATE = PromptTemplate(
    (PromptExample("open the drawer", ("go to the drawers", "open the drawer", "done")),)
)


def test_prompt_shape_golden():
    got = build_prompt(TEMPLATE, Instruction("bring me a coke can"), ["find a coke can"])
    assert got == (
        "Human: open the drawer\n"
        "Robot: 1. go to the drawers, 2. open the drawer, 3. done.\n"
        "Human: bring me a coke can\n"
        "Robot: 1. find a coke can, 2."
    )


def test_empty_history_ends_with_first_slot():
    assert build_prompt(PromptTemplate(()), Instruction("x"), []) == "Human: x\nRobot: 1."


def test_done_in_history_rejected():
    with pytest.raises(ValueError):
        build_prompt(TEMPLATE, Instruction("x"), ["done"])


def test_truncation(default_template):
    assert len(default_template.examples) == 17
    assert truncate_examples(default_template, 4).examples == default_template.examples[:4]
    assert truncate_examples(default_template, 0).examples == ()
    with pytest.raises(ValueError):
        truncate_examples(default_template, 18)
    extra = PromptExample("q", ("a",))
    assert with_examples(TEMPLATE, [extra]).examples[-1] == extra


def test_cot_prompt_slots(cot_template):
    ins = Instruction("bring me a snack that is not chips")
    gen = build_cot_prompt(cot_template, ins, [])
    assert gen.endswith("Human: bring me a snack that is not chips\nExplanation:")
    assert "Explanation: The user wants a fruit" in gen
    scored = build_cot_prompt(cot_template, ins, ["find an energy bar"], "An energy bar is not chips.")
    assert scored.endswith("Explanation: An energy bar is not chips.\nRobot: 1. find an energy bar, 2.")
    with pytest.raises(ValueError):
        build_cot_prompt(TEMPLATE, ins, [])


def test_parse_numbered_steps():
    assert parse_numbered_steps("1. a, 2. b\n3. done.") == ["a", "b", "done"]
    assert parse_numbered_steps(" find a sponge, 2. pick up the sponge") == ["find a sponge", "pick up the sponge"]
    assert parse_numbered_steps("") == []
    assert parse_numbered_steps("1. go to the 7up can area, 2.") == ["go to the 7up can area"]


def test_live_query_recovers_context(cot_template):
    p = build_prompt(TEMPLATE, Instruction("bring me a coke can"), ["find a coke can", "pick up the coke can"])
    q = parse_live_query(p)
    assert q.instruction == "bring me a coke can"
    assert q.history == ("find a coke can", "pick up the coke can")
    assert q.explanation is None and not q.awaiting_explanation
    gen = parse_live_query(build_cot_prompt(cot_template, Instruction("x y"), []))
    assert gen.awaiting_explanation and gen.instruction == "x y"
    scored = parse_live_query(build_cot_prompt(cot_template, Instruction("x y"), ["a"], "because"))
    assert scored.explanation == "because" and scored.history == ("a",)


label = st.text(alphabet="abcdefghij ", min_size=1, max_size=20).map(str.strip).filter(bool)


@given(st.lists(label, max_size=8), label)
def test_prompt_history_round_trips(history, text):
    p = build_prompt(TEMPLATE, Instruction(text), history)
    q = parse_live_query(p)
    assert q.history == tuple(history)
    assert q.instruction == text


@given(st.lists(label, min_size=1, max_size=8))
def test_number_steps_round_trips(steps):
    assert parse_numbered_steps(number_steps(steps) + ".") == steps


def test_template_round_trip(cot_template):
    assert PromptTemplate.from_dict(cot_template.to_dict()) == cot_template
