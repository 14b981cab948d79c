from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from saycan.affordance import (
    CalibrationConfig,
    affordance_for,
    affordances_for_all,
    calibrate_goto,
    calibrate_pick,
    drawer_affordance,
    is_noop,
    raw_pick_value,
)
from saycan.domain import GRIPPER, SkillFamily


def _frac_clamp(x: Fraction) -> Fraction:
    return min(Fraction(1), max(Fraction(0), x))


@given(st.floats(-10, 10, allow_nan=False))
def test_pick_matches_exact_rational_formula(v):
    want = _frac_clamp((Fraction(v) - Fraction(1, 5)) / Fraction(3, 10))
    assert calibrate_pick(v) == pytest.approx(float(want), abs=1e-12)


@given(st.floats(0, 1e6, allow_nan=False))
def test_goto_matches_exact_rational_formula(d):
    want = _frac_clamp((Fraction(100) - Fraction(d)) / Fraction(100))
    assert calibrate_goto(d) == pytest.approx(float(want), abs=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_pick_is_monotone(a, b):
    lo, hi = sorted((a, b))
    assert calibrate_pick(lo) <= calibrate_pick(hi)


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        calibrate_goto(-1.0)
    with pytest.raises(ValueError):
        calibrate_pick(float("nan"))
    with pytest.raises(ValueError):
        CalibrationConfig(pick_v_min=0.5, pick_v_max=0.5)
    with pytest.raises(ValueError):
        CalibrationConfig.from_dict({"bogus": 1})


def test_every_kitchen_skill_gets_a_probability(kitchen):
    state = kitchen.scenario().initial_state
    est = affordances_for_all(state, kitchen.skills, kitchen.calibration)
    assert [e.skill_id for e in est] == [s.id for s in kitchen.skills]
    assert all(0.0 <= e.probability <= 1.0 for e in est)
    with pytest.raises(ValueError):
        affordances_for_all(state, kitchen.skills[:-1], kitchen.calibration)


def test_pick_needs_object_here_and_empty_hand(kitchen):
    state = kitchen.scenario().initial_state
    pick = kitchen.skill_by_label("pick up the coke can")
    assert affordance_for(state, pick).probability == 0.0
    there = state.with_changes(robot_location=state.object_placement["coke_can"])
    assert affordance_for(there, pick).probability == 1.0
    full = there.move_object("apple", GRIPPER)
    assert affordance_for(full, pick).probability == 0.0


def test_navigation_uses_distance(kitchen):
    state = kitchen.scenario().initial_state
    go = kitchen.skill_by_label("go to the far counter")
    d = state.distance(state.robot_location, "far_counter")
    est = affordance_for(state, go)
    assert est.raw_value == d
    assert est.probability == pytest.approx(1 - d / 100, abs=1e-12)


def test_completed_work_is_capped(kitchen):
    state = kitchen.scenario("at_table").initial_state
    est = affordance_for(state, kitchen.skill_by_label("go to the table"))
    assert est.capped and est.probability == kitchen.calibration.cap_value
    held = state.move_object("apple", GRIPPER)
    assert is_noop(held, kitchen.skill_by_label("pick up the apple"))
    assert not is_noop(held, kitchen.skill_by_label("put down the apple"))
    assert is_noop(held, kitchen.skill_by_label("put down the sponge"))


def test_drawer_heuristic_depends_only_on_position(kitchen):
    state = kitchen.scenario().initial_state
    drawer_skills = [s for s in kitchen.skills if s.family in (SkillFamily.OPEN_DRAWER, SkillFamily.CLOSE_DRAWER)]
    assert drawer_skills
    for s in drawer_skills:
        for loc in state.location_coords:
            st_ = state.with_changes(robot_location=loc)
            assert drawer_affordance(st_, s) == (1.0 if loc == "drawers" else 0.0)


def test_oracle_noise_needs_rng_and_moves_value(kitchen):
    cfg = CalibrationConfig(oracle_noise_sigma=0.05)
    state = kitchen.scenario().initial_state
    pick = kitchen.skill_by_label("pick up the coke can")
    with pytest.raises(ValueError):
        raw_pick_value(state, pick, None, cfg)
    a = raw_pick_value(state, pick, np.random.default_rng(1), cfg)
    b = raw_pick_value(state, pick, np.random.default_rng(1), cfg)
    assert a == b != cfg.pick_v_min
