"""Regenerate the packaged data files under src/saycan/data.

Run from the repository root::

    python3 tools/build_assets.py            # write files
    python3 tools/build_assets.py --check    # fail if shipped files differ
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import permutations
from pathlib import Path
from typing import Any

from saycan.domain import Instruction, InstructionCase, InstructionFamily
from saycan.evalharness import dump_suite
from saycan.oracle import build_oracle_table
from saycan.prompting import PromptExample, PromptTemplate
from saycan.scoring import ScorerTable, TableRule
from saycan.world import world_from_dict

DATA = Path(__file__).resolve().parents[1] / "src" / "saycan" / "data"

# ---------------------------------------------------------------------------
# Kitchen world
# ---------------------------------------------------------------------------

OBJECTS = [
    ("coke can", ["drink", "soda", "caffeinated"], "far_counter"),
    ("pepsi can", ["drink", "soda", "caffeinated"], "far_counter"),
    ("multigrain chips", ["snack", "chips"], "far_counter"),
    ("7up can", ["drink", "soda"], "far_counter"),
    ("water bottle", ["drink", "healthy"], "far_counter"),
    ("apple", ["fruit", "snack", "healthy"], "close_counter"),
    ("orange", ["fruit", "snack", "healthy"], "close_counter"),
    ("rice chips", ["snack", "chips"], "close_counter"),
    ("lime soda", ["drink", "soda"], "close_counter"),
    ("sponge", ["cleaning"], "close_counter"),
    ("redbull can", ["drink", "caffeinated", "energy drink"], "table"),
    ("energy bar", ["snack", "healthy"], "table"),
    ("jalapeno chips", ["snack", "chips", "spicy"], "table"),
    ("tea can", ["drink", "caffeinated"], "table"),
    ("grapefruit soda", ["drink", "soda"], "table"),
]

LOCATIONS = [
    {"id": "start", "name": "start", "xy": [0.0, 0.0], "navigable": False},
    {"id": "user", "name": "user", "xy": [1.0, 0.5], "label": "bring it to you"},
    {"id": "table", "name": "table", "xy": [3.0, 0.0]},
    {"id": "close_counter", "name": "close counter", "xy": [2.0, 3.0]},
    {"id": "far_counter", "name": "far counter", "xy": [6.0, 3.0]},
    {"id": "trash_can", "name": "trash can", "xy": [0.0, 3.0]},
    {"id": "drawers", "name": "drawers", "xy": [4.0, -2.0]},
]

SCENARIOS: dict[str, dict[str, Any]] = {
    "kitchen": {},
    "at_table": {"robot_location": "table"},
    "at_close_counter": {"robot_location": "close_counter"},
    "at_far_counter": {"robot_location": "far_counter"},
    "at_user": {"robot_location": "user"},
    "at_trash_can": {"robot_location": "trash_can"},
    "at_drawers": {"robot_location": "drawers"},
    "holding_coke_at_far_counter": {"robot_location": "far_counter", "gripper": "coke_can"},
    "holding_coke_at_close_counter": {"robot_location": "close_counter", "gripper": "coke_can"},
    "holding_coke_at_user": {"robot_location": "user", "gripper": "coke_can"},
    "holding_apple_at_close_counter": {"robot_location": "close_counter", "gripper": "apple"},
    "holding_apple_at_user": {"robot_location": "user", "gripper": "apple"},
    "holding_sponge_at_close_counter": {"robot_location": "close_counter", "gripper": "sponge"},
    "holding_rice_chips_at_drawers": {"robot_location": "drawers", "gripper": "rice_chips"},
    "drawer_open_at_drawers": {"robot_location": "drawers", "drawers": {"drawer": True}},
    "coke_on_table": {"placements": {"coke_can": "table"}},
    "energy_bar_in_drawer": {"placements": {"energy_bar": "drawer"}},
}


def kitchen_config() -> dict[str, Any]:
    return {
        "format_version": 1,
        "kind": "kitchen",
        "objects": [{"name": n, "article": art(n.replace(" ", "_")), "categories": c} for n, c, _ in OBJECTS],
        "locations": LOCATIONS,
        "drawers": [{"id": "drawer", "name": "drawer", "location": "drawers"}],
        "families": ["find", "pick", "place", "go_to", "open_drawer", "close_drawer", "put_in_drawer", "take_from_drawer"],
        "initial": {
            "robot_location": "start",
            "placements": {n.replace(" ", "_"): loc for n, _, loc in OBJECTS},
            "drawers": {"drawer": False},
        },
        "default_scenario": "kitchen",
        "scenarios": SCENARIOS,
    }


def tabletop_config() -> dict[str, Any]:
    return {
        "format_version": 1,
        "kind": "tabletop",
        "tabletop": {"seed": 0, "grid": [4, 4], "n_blocks": 3, "n_bowls": 3},
        "default_scenario": "tabletop",
    }


# ---------------------------------------------------------------------------
# Prompts
# ---------------------------------------------------------------------------


def _ex(query: str, *steps: str, explanation: str | None = None) -> PromptExample:
    return PromptExample(query, (*steps, "done"), explanation)


def default_prompt() -> PromptTemplate:
    examples = (
        _ex("bring me a lime soda", "find a lime soda", "pick up the lime soda", "bring it to you"),
        _ex("put the apple on the table", "find an apple", "pick up the apple", "go to the table", "put down the apple"),
        _ex("throw away the sponge", "find a sponge", "pick up the sponge", "go to the trash can", "put down the sponge"),
        _ex("go to the close counter", "go to the close counter"),
        _ex("let go of the tea can", "put down the tea can"),
        _ex("bring me something to drink", "find a water bottle", "pick up the water bottle", "bring it to you"),
        _ex(
            "move the grapefruit soda from the table to the far counter",
            "find a grapefruit soda",
            "pick up the grapefruit soda",
            "go to the far counter",
            "put down the grapefruit soda",
        ),
        _ex("I am hungry, bring me a snack", "find an energy bar", "pick up the energy bar", "bring it to you"),
        _ex("pick up the orange", "pick up the orange"),
        _ex("find the multigrain chips", "find some multigrain chips"),
        _ex(
            "bring me a fruit and a soda",
            "find an apple",
            "pick up the apple",
            "bring it to you",
            "put down the apple",
            "find a lime soda",
            "pick up the lime soda",
            "bring it to you",
        ),
        _ex(
            "restock the jalapeno chips on the close counter",
            "find some jalapeno chips",
            "pick up the jalapeno chips",
            "go to the close counter",
            "put down the jalapeno chips",
        ),
        _ex("I spilled my drink, can you help?", "find a sponge", "pick up the sponge", "bring it to you"),
        _ex(
            "put the energy bar in the trash",
            "find an energy bar",
            "pick up the energy bar",
            "go to the trash can",
            "put down the energy bar",
        ),
        _ex(
            "bring the tea can to the table",
            "find a tea can",
            "pick up the tea can",
            "go to the table",
            "put down the tea can",
        ),
        _ex("go to the table", "go to the table"),
        _ex(
            "put away the redbull can on the far counter",
            "find a redbull can",
            "pick up the redbull can",
            "go to the far counter",
            "put down the redbull can",
        ),
    )
    return PromptTemplate(examples, name="default")


def cot_prompt() -> PromptTemplate:
    examples = (
        _ex(
            "bring me a fruit that is not an apple",
            "find an orange",
            "pick up the orange",
            "bring it to you",
            explanation="The user wants a fruit but not an apple, an orange is a fruit, so I will bring an orange.",
        ),
        _ex(
            "I am thirsty but I do not want soda",
            "find a water bottle",
            "pick up the water bottle",
            "bring it to you",
            explanation="The user wants a drink that is not soda, water is not soda, so I will bring the water bottle.",
        ),
        _ex(
            "throw away the snack that is not chips",
            "find an energy bar",
            "pick up the energy bar",
            "go to the trash can",
            "put down the energy bar",
            explanation="The energy bar is a snack and is not chips, so I will throw away the energy bar.",
        ),
    )
    return PromptTemplate(examples, cot_enabled=True, name="cot")


def drawer_prompt() -> PromptTemplate:
    examples = (
        _ex("open the drawer", "go to the drawers", "open the drawer"),
        _ex(
            "restock the apple into the drawer",
            "find an apple",
            "pick up the apple",
            "go to the drawers",
            "open the drawer",
            "put the apple in the drawer",
            "close the drawer",
        ),
        _ex("close the drawer", "go to the drawers", "close the drawer"),
    )
    return PromptTemplate(examples, name="drawer")


# ---------------------------------------------------------------------------
# Instruction suite
# ---------------------------------------------------------------------------

NAMES = {n.replace(" ", "_"): n for n, _, _ in OBJECTS}
LOC_NAMES = {loc["id"]: loc["name"] for loc in LOCATIONS}


def art(o: str) -> str:
    name = NAMES[o]
    if name.endswith("chips"):
        return "some"
    return "an" if name[0] in "aeiou" else "a"


def find(o: str) -> str:
    return f"find {art(o)} {NAMES[o]}"


def pick(o: str) -> str:
    return f"pick up the {NAMES[o]}"


def put(o: str) -> str:
    return f"put down the {NAMES[o]}"


def goto(loc: str) -> str:
    return "bring it to you" if loc == "user" else f"go to the {LOC_NAMES[loc]}"


def fetch(o: str) -> list[str]:
    return [find(o), pick(o), goto("user")]


def move(o: str, loc: str) -> list[str]:
    return [find(o), pick(o), goto(loc), put(o)]


def at(o: str, loc: str) -> dict:
    return {"at": [o, loc]}


def placed(o: str, loc: str) -> dict:
    return {"placed": [o, loc]}


def released(o: str) -> dict:
    return {"all": [{"gripper_empty": True}, {"placed_at_robot": o}]}


def all_(*ps: dict) -> dict:
    return {"all": list(ps)}


def any_(*ps: dict) -> dict:
    return {"any": list(ps)}


def drawer_store(o: str) -> list[str]:
    return [find(o), pick(o), "go to the drawers", "open the drawer", f"put the {NAMES[o]} in the drawer", "close the drawer"]


def stored(o: str) -> dict:
    return all_({"in_drawer": [o, "drawer"]}, {"drawer_closed": "drawer"})


_cases: list[InstructionCase] = []


def case(family: InstructionFamily, text: str, plans: list[list[str]], goal: dict, scenario: str = "kitchen") -> None:
    n = sum(c.family is family for c in _cases) + 1
    _cases.append(
        InstructionCase(
            case_id=f"{family.value}_{n:02d}",
            instruction=Instruction(text),
            family=family,
            acceptable_plans=tuple(tuple(p) for p in plans),
            goal_predicate=goal,
            initial_scenario=scenario,
        )
    )


def orderings(*parts: list[str]) -> list[list[str]]:
    return [sum(p, []) for p in permutations(parts)]


def build_suite() -> list[InstructionCase]:
    _cases.clear()
    F = InstructionFamily

    # single primitives
    S = F.NL_SINGLE_PRIMITIVE
    case(S, "Let go of the coke can", [[put("coke_can")]], released("coke_can"), "holding_coke_at_far_counter")
    case(S, "Pick up the apple", [[pick("apple")]], {"holding": "apple"}, "at_close_counter")
    case(S, "Grab the sponge", [[pick("sponge")]], {"holding": "sponge"}, "at_close_counter")
    case(S, "Go to the far counter", [[goto("far_counter")]], {"robot_at": "far_counter"})
    case(S, "Head over to the table", [[goto("table")]], {"robot_at": "table"})
    case(S, "Find the coke can", [[find("coke_can")]], {"near": "coke_can"})
    case(S, "Locate an orange", [[find("orange")]], {"near": "orange"})
    case(S, "Drop the apple", [[put("apple")]], released("apple"), "holding_apple_at_close_counter")
    case(S, "Go to the trash can", [[goto("trash_can")]], {"robot_at": "trash_can"})
    case(S, "Pick up the redbull can", [[pick("redbull_can")]], {"holding": "redbull_can"}, "at_table")
    case(S, "Find the rice chips", [[find("rice_chips")]], {"near": "rice_chips"})
    case(S, "Come to me", [[goto("user")]], {"robot_at": "user"})
    case(S, "Put down the sponge", [[put("sponge")]], released("sponge"), "holding_sponge_at_close_counter")
    case(S, "Grab the water bottle", [[pick("water_bottle")]], {"holding": "water_bottle"}, "at_far_counter")
    case(S, "Drive to the close counter", [[goto("close_counter")]], {"robot_at": "close_counter"})

    # abstract nouns
    N = F.NL_NOUNS
    case(N, "Bring me a fruit", [fetch("apple"), fetch("orange")], any_(at("apple", "user"), at("orange", "user")))
    case(N, "Bring me a soda", [fetch(o) for o in ("coke_can", "pepsi_can", "7up_can", "lime_soda", "grapefruit_soda")],
         any_(*(at(o, "user") for o in ("coke_can", "pepsi_can", "7up_can", "lime_soda", "grapefruit_soda"))))
    case(N, "Bring me a snack", [fetch(o) for o in ("energy_bar", "rice_chips", "multigrain_chips", "jalapeno_chips", "apple", "orange")],
         any_(*(at(o, "user") for o in ("energy_bar", "rice_chips", "multigrain_chips", "jalapeno_chips", "apple", "orange"))))
    case(N, "Bring me a caffeinated drink", [fetch(o) for o in ("coke_can", "pepsi_can", "redbull_can", "tea_can")],
         any_(*(at(o, "user") for o in ("coke_can", "pepsi_can", "redbull_can", "tea_can"))))
    case(N, "Bring me something with citrus", [fetch("lime_soda"), fetch("orange"), fetch("grapefruit_soda")],
         any_(at("lime_soda", "user"), at("orange", "user"), at("grapefruit_soda", "user")))
    case(N, "Bring me some chips", [fetch(o) for o in ("rice_chips", "multigrain_chips", "jalapeno_chips")],
         any_(*(at(o, "user") for o in ("rice_chips", "multigrain_chips", "jalapeno_chips"))))
    case(N, "Bring me something to clean with", [fetch("sponge")], at("sponge", "user"))
    case(N, "Bring me a healthy snack", [fetch("energy_bar"), fetch("apple"), fetch("orange")],
         any_(at("energy_bar", "user"), at("apple", "user"), at("orange", "user")))
    case(N, "Bring me some water", [fetch("water_bottle")], at("water_bottle", "user"))
    case(N, "Bring me something spicy", [fetch("jalapeno_chips")], at("jalapeno_chips", "user"))
    case(N, "Bring me an energy drink", [fetch("redbull_can")], at("redbull_can", "user"))
    case(N, "Bring me a drink from the table", [fetch(o) for o in ("redbull_can", "tea_can", "grapefruit_soda")],
         any_(at("redbull_can", "user"), at("tea_can", "user"), at("grapefruit_soda", "user")))
    case(N, "Bring me a bar", [fetch("energy_bar")], at("energy_bar", "user"))
    case(N, "Bring me a sweet fruit", [fetch("apple")], at("apple", "user"))
    case(N, "Bring me a drink without caffeine", [fetch(o) for o in ("water_bottle", "7up_can", "lime_soda", "grapefruit_soda")],
         any_(*(at(o, "user") for o in ("water_bottle", "7up_can", "lime_soda", "grapefruit_soda"))))

    # abstract verbs, mirrored by structured phrasings
    V, T = F.NL_VERBS, F.STRUCTURED_LANGUAGE
    verbs = [
        ("Restock the rice chips on the far counter", "Move the rice chips to the far counter.", "rice_chips", "far_counter"),
        ("Throw away the coke can", "Move the coke can to the trash can.", "coke_can", "trash_can"),
        ("Clear the energy bar off the table", "Move the energy bar to the close counter.", "energy_bar", "close_counter"),
        ("Toss the sponge in the trash", "Move the sponge to the trash can.", "sponge", "trash_can"),
        ("Restock the pepsi can on the table", "Move the pepsi can to the table.", "pepsi_can", "table"),
        ("Tidy the apple onto the table", "Move the apple to the table.", "apple", "table"),
        ("Discard the jalapeno chips", "Move the jalapeno chips to the trash can.", "jalapeno_chips", "trash_can"),
        ("Stock the water bottle on the close counter", "Move the water bottle to the close counter.", "water_bottle", "close_counter"),
        ("Relocate the tea can to the far counter", "Move the tea can to the far counter.", "tea_can", "far_counter"),
        ("Return the orange to the table", "Move the orange to the table.", "orange", "table"),
        ("Dispose of the lime soda", "Move the lime soda to the trash can.", "lime_soda", "trash_can"),
        ("Serve the grapefruit soda at the close counter", "Move the grapefruit soda to the close counter.", "grapefruit_soda", "close_counter"),
        ("Put away the multigrain chips on the table", "Move the multigrain chips to the table.", "multigrain_chips", "table"),
        ("Restock the redbull can on the far counter", "Move the redbull can to the far counter.", "redbull_can", "far_counter"),
        ("Get rid of the 7up can", "Move the 7up can to the trash can.", "7up_can", "trash_can"),
    ]
    for verb_text, _, o, loc in verbs:
        case(V, verb_text, [move(o, loc)], placed(o, loc))
    for _, struct_text, o, loc in verbs:
        case(T, struct_text, [move(o, loc)], placed(o, loc))

    # the same request from different completion stages
    E = F.EMBODIMENT
    coke_full = move("coke_can", "close_counter")
    coke_goal = placed("coke_can", "close_counter")
    text = "Put the coke on the close counter"
    for scen in ("kitchen", "at_far_counter", "at_table", "holding_coke_at_far_counter", "holding_coke_at_close_counter"):
        plan = {
            "kitchen": coke_full,
            "at_far_counter": coke_full[1:],
            "at_table": coke_full,
            "holding_coke_at_far_counter": coke_full[2:],
            "holding_coke_at_close_counter": coke_full[3:],
        }[scen]
        case(E, text, [plan], coke_goal, scen)
    apple_full = fetch("apple")
    text = "Bring me an apple"
    for scen, plan in (("kitchen", apple_full), ("at_close_counter", apple_full[1:]), ("holding_apple_at_close_counter", apple_full[2:])):
        case(E, text, [plan], at("apple", "user"), scen)
    text = "Throw away the coke can"
    case(E, text, [move("coke_can", "trash_can")[2:]], placed("coke_can", "trash_can"), "holding_coke_at_user")
    case(E, "Restock the rice chips into the drawer", [drawer_store("rice_chips")[3:]], stored("rice_chips"), "holding_rice_chips_at_drawers")
    case(E, "Bring me the energy bar from the drawer", [["go to the drawers", "open the drawer", "take the energy bar out of the drawer", "bring it to you"]],
         at("energy_bar", "user"), "energy_bar_in_drawer")

    # free-form requests
    C = F.CROWD_SOURCED
    case(C, "My favorite drink is redbull, bring one", [fetch("redbull_can")], at("redbull_can", "user"))
    case(C, "can u get me a coke pls", [fetch("coke_can")], at("coke_can", "user"))
    case(C, "I'm thirsty, grab me a water?", [fetch("water_bottle")], at("water_bottle", "user"))
    case(C, "i want the jalapeno chips, could you fetch them", [fetch("jalapeno_chips")], at("jalapeno_chips", "user"))
    case(C, "the table is messy, take the tea can to the trash", [move("tea_can", "trash_can")], placed("tea_can", "trash_can"))
    case(C, "Would you please bring me an orange", [fetch("orange")], at("orange", "user"))
    case(C, "apple on the far counter thanks", [move("apple", "far_counter")], placed("apple", "far_counter"))
    case(C, "Need something to wipe up a mess", [fetch("sponge")], at("sponge", "user"))
    case(C, "hey robot, pepsi please", [fetch("pepsi_can")], at("pepsi_can", "user"))
    case(C, "I could go for some rice chips", [fetch("rice_chips")], at("rice_chips", "user"))
    case(C, "that lime soda belongs on the table", [move("lime_soda", "table")], placed("lime_soda", "table"))
    case(C, "Put the 7up can in the drawer please", [drawer_store("7up_can")], stored("7up_can"))
    case(C, "get me something to eat that isn't chips", [fetch("energy_bar"), fetch("apple"), fetch("orange")],
         any_(at("energy_bar", "user"), at("apple", "user"), at("orange", "user")))
    case(C, "bring the energy bar over here", [fetch("energy_bar")], at("energy_bar", "user"))
    case(C, "restock the rice chips into the drawer", [drawer_store("rice_chips")], stored("rice_chips"))

    # many-step tasks
    L = F.LONG_HORIZON
    case(L, "I spilled my coke on the table, throw it away and bring me something to clean",
         [move("coke_can", "trash_can") + fetch("sponge"), fetch("sponge") + [put("sponge")] + move("coke_can", "trash_can")],
         all_(placed("coke_can", "trash_can"), at("sponge", "user")), "coke_on_table")
    case(L, "Bring a sponge and throw away the coke can",
         [fetch("sponge") + [put("sponge")] + move("coke_can", "trash_can"), move("coke_can", "trash_can") + fetch("sponge")],
         all_(at("sponge", "user"), placed("coke_can", "trash_can")))
    case(L, "Bring me the water bottle, then put it down and bring me an apple",
         [fetch("water_bottle") + [put("water_bottle")] + fetch("apple")],
         all_(placed("water_bottle", "user"), at("apple", "user")))
    case(L, "Throw away the coke can, the apple and the water bottle, then bring me a sponge",
         [sum(p, []) + fetch("sponge") for p in _perms(move("coke_can", "trash_can"), move("apple", "trash_can"), move("water_bottle", "trash_can"))],
         all_(placed("coke_can", "trash_can"), placed("apple", "trash_can"), placed("water_bottle", "trash_can"), at("sponge", "user")))
    case(L, "Move the rice chips to the far counter and the orange to the table",
         orderings(move("rice_chips", "far_counter"), move("orange", "table")),
         all_(placed("rice_chips", "far_counter"), placed("orange", "table")))
    case(L, "Bring me a fruit and a drink",
         [fetch(f) + [put(f)] + fetch(d) for f in ("apple", "orange") for d in ("water_bottle", "coke_can", "lime_soda")]
         + [fetch(d) + [put(d)] + fetch(f) for f in ("apple", "orange") for d in ("water_bottle", "coke_can", "lime_soda")],
         all_(any_(at("apple", "user"), at("orange", "user")), any_(*(at(d, "user") for d in ("water_bottle", "coke_can", "lime_soda")))))
    case(L, "Put the pepsi can and the 7up can in the drawer",
         [drawer_store("pepsi_can")[:5] + [find("7up_can"), pick("7up_can"), "go to the drawers", "put the 7up can in the drawer", "close the drawer"],
          drawer_store("7up_can")[:5] + [find("pepsi_can"), pick("pepsi_can"), "go to the drawers", "put the pepsi can in the drawer", "close the drawer"]],
         all_({"in_drawer": ["pepsi_can", "drawer"]}, {"in_drawer": ["7up_can", "drawer"]}, {"drawer_closed": "drawer"}))
    case(L, "Clean up the table: throw away the jalapeno chips and the grapefruit soda",
         orderings(move("jalapeno_chips", "trash_can"), move("grapefruit_soda", "trash_can")),
         all_(placed("jalapeno_chips", "trash_can"), placed("grapefruit_soda", "trash_can")))
    case(L, "Bring me the tea can and then the energy bar",
         [fetch("tea_can") + [put("tea_can")] + fetch("energy_bar")],
         all_(placed("tea_can", "user"), at("energy_bar", "user")))
    case(L, "Move all the chips to the close counter",
         [sum(p, []) for p in _perms(move("multigrain_chips", "close_counter"), move("jalapeno_chips", "close_counter"))],
         all_(placed("multigrain_chips", "close_counter"), placed("jalapeno_chips", "close_counter"), placed("rice_chips", "close_counter")))
    # the second object is already in front of the robot, so no find step
    case(L, "Swap the apple and the redbull can between the close counter and the table",
         [move("apple", "table") + move("redbull_can", "close_counter")[1:],
          move("redbull_can", "close_counter") + move("apple", "table")[1:]],
         all_(placed("apple", "table"), placed("redbull_can", "close_counter")))
    case(L, "Bring me a coke, then throw away the sponge",
         [fetch("coke_can") + [put("coke_can")] + move("sponge", "trash_can")],
         all_(placed("coke_can", "user"), placed("sponge", "trash_can")))
    case(L, "Restock the lime soda and the orange on the far counter, then come back to me",
         [sum(p, []) + [goto("user")] for p in _perms(move("lime_soda", "far_counter"), move("orange", "far_counter"))],
         all_(placed("lime_soda", "far_counter"), placed("orange", "far_counter"), {"robot_at": "user"}))
    case(L, "Take the energy bar out of the drawer, bring it to me, then close the drawer",
         [["go to the drawers", "open the drawer", "take the energy bar out of the drawer", "close the drawer", "bring it to you"]],
         all_(at("energy_bar", "user"), {"drawer_closed": "drawer"}), "energy_bar_in_drawer")
    case(L, "Bring me the water bottle and the rice chips and the apple",
         [fetch(a) + [put(a)] + fetch(b) + [put(b)] + fetch(c) for a, b, c in permutations(("water_bottle", "rice_chips", "apple"))],
         all_(at("water_bottle", "user"), at("rice_chips", "user"), at("apple", "user")))
    return list(_cases)


def _perms(*parts: list[str]) -> list[list[list[str]]]:
    return [list(p) for p in permutations(parts)]


MULTILINGUAL = [
    ("bring me a can of coke", "en", fetch("coke_can"), at("coke_can", "user")),
    ("throw away the coke can", "en", move("coke_can", "trash_can"), placed("coke_can", "trash_can")),
    ("I spilled my coke, can you bring me something to help clean", "en", fetch("sponge"), at("sponge", "user")),
    ("拿一罐可乐给我", "zh", fetch("coke_can"), at("coke_can", "user")),
    ("扔掉可乐罐", "zh", move("coke_can", "trash_can"), placed("coke_can", "trash_can")),
    ("我的可乐洒了，你能给我拿点东西来帮忙打扫吗", "zh", fetch("sponge"), at("sponge", "user")),
    ("apporte moi une canette de coca", "fr", fetch("coke_can"), at("coke_can", "user")),
    ("jeter la canette de coca", "fr", move("coke_can", "trash_can"), placed("coke_can", "trash_can")),
    ("J'ai renversé mon coca, peux-tu m'apporter quelque chose pour m'aider à nettoyer", "fr", fetch("sponge"), at("sponge", "user")),
    ("tráeme una lata de coca cola", "es", fetch("coke_can"), at("coke_can", "user")),
    ("tirar la lata de coca cola", "es", move("coke_can", "trash_can"), placed("coke_can", "trash_can")),
    ("Derramé mi coca cola, ¿puedes traerme algo para ayudar a limpiar", "es", fetch("sponge"), at("sponge", "user")),
]


def build_multilingual() -> list[InstructionCase]:
    return [
        InstructionCase(
            case_id=f"multilingual_{i + 1:02d}",
            instruction=Instruction(text, lang),
            family=InstructionFamily.CROWD_SOURCED,
            acceptable_plans=(tuple(plan),),
            goal_predicate=goal,
            initial_scenario="kitchen",
        )
        for i, (text, lang, plan, goal) in enumerate(MULTILINGUAL)
    ]


def canonical_plan(c: InstructionCase) -> list[str]:
    """Longest acceptable plan; for repeated instructions the from-scratch one."""
    return list(max(c.acceptable_plans, key=len))


def oracle_table(cases: list[InstructionCase]) -> ScorerTable:
    by_text: dict[str, list[str]] = {}
    for c in cases:
        plan = canonical_plan(c)
        prev = by_text.get(c.instruction.text)
        if prev is None or len(plan) > len(prev):
            by_text[c.instruction.text] = plan
    return build_oracle_table(by_text.items())


# ---------------------------------------------------------------------------
# Hand-written scorer fixtures
# ---------------------------------------------------------------------------


def spill_table() -> ScorerTable:
    """Plausible language-model masses for a spill request; the first step is ungrounded."""
    text = "I spilled my coke, can you bring me something to help clean"
    rules = (
        TableRule({"done": 0.9, "put down the sponge": 0.05}, instruction=text, history_suffix=("bring it to you",)),
        TableRule({"bring it to you": 0.7, "go to the trash can": 0.1, "put down the sponge": 0.1, "done": 0.05},
                  instruction=text, history_suffix=("pick up the sponge",)),
        TableRule({"pick up the sponge": 0.6, "bring it to you": 0.2, "find a coke can": 0.05},
                  instruction=text, history_suffix=("find a sponge",)),
        TableRule(
            {
                "pick up the sponge": 0.37,
                "find a sponge": 0.30,
                "find a coke can": 0.09,
                "pick up the coke can": 0.08,
                "find a water bottle": 0.04,
                "go to the trash can": 0.03,
                "bring it to you": 0.02,
                "done": 0.01,
            },
            instruction=text,
            history_suffix=(),
        ),
    )
    return ScorerTable(rules, floor=1e-6)


def gating_table() -> ScorerTable:
    """The model prefers picking the coke up before the robot has found it."""
    text = "bring me a coke can"
    rules = (
        TableRule({"done": 0.9, "put down the coke can": 0.05}, instruction=text, history_suffix=("bring it to you",)),
        TableRule({"bring it to you": 0.9, "done": 0.05}, instruction=text, history_suffix=("pick up the coke can",)),
        TableRule({"pick up the coke can": 0.8, "bring it to you": 0.1}, instruction=text, history_suffix=("find a coke can",)),
        TableRule({"pick up the coke can": 0.7, "find a coke can": 0.2, "bring it to you": 0.05, "done": 0.05},
                  instruction=text, history_suffix=()),
    )
    return ScorerTable(rules, floor=1e-6)


def gating_suite() -> list[InstructionCase]:
    return [
        InstructionCase(
            case_id="gating_01",
            instruction=Instruction("bring me a coke can"),
            family=InstructionFamily.NL_NOUNS,
            acceptable_plans=(tuple(fetch("coke_can")),),
            goal_predicate=at("coke_can", "user"),
            initial_scenario="at_trash_can",
        )
    ]


# ---------------------------------------------------------------------------


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"


def render_all() -> dict[str, str]:
    kitchen = kitchen_config()
    world = world_from_dict(kitchen)
    suite = build_suite()
    multi = build_multilingual()
    labels = set(world.labels)
    for c in [*suite, *multi, *gating_suite()]:
        if c.initial_scenario not in world.scenarios:
            raise ValueError(f"{c.case_id}: unknown scenario {c.initial_scenario}")
        for plan in c.acceptable_plans:
            bad = [lab for lab in plan if lab not in labels]
            if bad:
                raise ValueError(f"{c.case_id}: unknown labels {bad}")
    for t in (default_prompt(), cot_prompt(), drawer_prompt()):
        for ex in t.examples:
            bad = [s for s in ex.steps if s not in labels]
            if bad:
                raise ValueError(f"prompt {t.name}: unknown labels {bad}")
    return {
        "kitchen.json": _json(kitchen),
        "tabletop.json": _json(tabletop_config()),
        "prompt_default.json": _json(default_prompt().to_dict()),
        "prompt_cot.json": _json(cot_prompt().to_dict()),
        "prompt_drawer.json": _json(drawer_prompt().to_dict()),
        "suite.json": dump_suite(suite),
        "suite_multilingual.json": dump_suite(multi),
        "suite_gating.json": dump_suite(gating_suite()),
        "oracle_table.json": _json(oracle_table([*suite, *multi]).to_dict()),
        "scorer_spill.json": _json(spill_table().to_dict()),
        "scorer_gating.json": _json(gating_table().to_dict()),
    }


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="compare instead of writing")
    args = ap.parse_args(argv)
    files = render_all()
    if args.check:
        stale = [n for n, text in files.items() if not (DATA / n).exists() or (DATA / n).read_text(encoding="utf-8") != text]
        for n in stale:
            print(f"stale: {n}")
        return 1 if stale else 0
    DATA.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (DATA / name).write_text(text, encoding="utf-8")
        print(f"wrote {DATA / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
