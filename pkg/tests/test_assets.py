from __future__ import annotations

import subprocess
import sys
from pathlib import Path

from saycan.domain import SkillFamily
from saycan.evalharness import load_suite
from saycan.world import data_path

ROOT = Path(__file__).resolve().parents[1]


def test_shipped_data_matches_the_generator():
    r = subprocess.run([sys.executable, str(ROOT / "tools" / "build_assets.py"), "--check"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0, r.stdout + r.stderr


def test_kitchen_inventory(kitchen):
    assert len(kitchen.objects) == 15
    assert len(kitchen.skills) == 84
    fams = {f: sum(s.family is f for s in kitchen.skills) for f in SkillFamily}
    assert fams[SkillFamily.PICK] == fams[SkillFamily.FIND] == fams[SkillFamily.PLACE] == 15
    assert fams[SkillFamily.TERMINATE] == 1
    assert kitchen.skill_by_label("bring it to you").location_arg == "user"
    assert kitchen.skill_by_label("find some rice chips").object_arg == "rice_chips"


def test_every_suite_label_is_a_skill(kitchen):
    labels = set(kitchen.labels)
    for name in ("suite.json", "suite_multilingual.json", "suite_gating.json"):
        for case in load_suite(data_path(name)):
            assert case.initial_scenario in kitchen.scenarios
            for plan in case.acceptable_plans:
                assert set(plan) <= labels, (case.case_id, plan)


def test_prompt_examples_use_skill_labels(kitchen, default_template, cot_template):
    labels = set(kitchen.labels)
    for t in (default_template, cot_template):
        for ex in t.examples:
            assert set(ex.steps) <= labels, ex
            assert ex.steps[-1] == "done"
    assert all(ex.explanation for ex in cot_template.examples)
