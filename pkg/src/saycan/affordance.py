"""Affordance probabilities p(completion | state, skill) for every skill.

Raw values come from simulator oracles standing in for trained value
functions; they are turned into probabilities with fixed calibration
constants, then no-op skills are capped so completed work is not redone.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Mapping, Sequence

import numpy as np

from .domain import (
    DRAWER_FAMILIES,
    GRIPPER,
    AffordanceEstimate,
    Skill,
    SkillFamily,
    WorldState,
)


@dataclass(frozen=True)
class CalibrationConfig:
    pick_v_min: float = 0.2
    pick_v_max: float = 0.5
    goto_d_min: float = 0.0
    goto_d_max: float = 100.0
    place_prob: float = 1.0
    terminate_prob: float = 0.1
    cap_value: float = 0.0
    oracle_noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not self.pick_v_min < self.pick_v_max:
            raise ValueError("pick_v_min must be < pick_v_max")
        if not self.goto_d_min < self.goto_d_max:
            raise ValueError("goto_d_min must be < goto_d_max")
        for name in ("place_prob", "terminate_prob", "cap_value"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.oracle_noise_sigma < 0:
            raise ValueError("oracle_noise_sigma must be >= 0")

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any] | None) -> CalibrationConfig:
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown calibration keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


DEFAULT_CALIBRATION = CalibrationConfig()


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def calibrate_pick(v: float, cfg: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    """Normalize a pick value-function output into [0, 1]."""
    if not np.isfinite(v):
        raise ValueError(f"pick value must be finite, got {v}")
    return _clamp01((v - cfg.pick_v_min) / (cfg.pick_v_max - cfg.pick_v_min))


def calibrate_goto(d: float, cfg: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    """Navigation affordance from distance in meters; falls linearly to 0 at goto_d_max."""
    if d < 0:
        raise ValueError(f"distance must be non-negative, got {d}")
    return _clamp01((cfg.goto_d_max - d) / (cfg.goto_d_max - cfg.goto_d_min))


def place_affordance(state: WorldState, skill: Skill, cfg: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    if skill.family is not SkillFamily.PLACE:
        raise ValueError(f"{skill.id} is not a place skill")
    return cfg.place_prob


def terminate_affordance(cfg: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    return cfg.terminate_prob


def drawer_affordance(state: WorldState, skill: Skill, cfg: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    """Heuristic: every drawer skill is possible when standing next to that drawer.

    The no-op cases (opening an open drawer, closing a closed one) are capped
    by :func:`apply_completion_cap`, so this returns the uncapped value.
    """
    if skill.family not in DRAWER_FAMILIES:
        raise ValueError(f"{skill.id} is not a drawer skill")
    drawer_loc = state.drawer_locations.get(skill.location_arg or "")
    return 1.0 if drawer_loc is not None and state.robot_location == drawer_loc else 0.0


def raw_pick_value(
    state: WorldState,
    skill: Skill,
    rng: np.random.Generator | None = None,
    cfg: CalibrationConfig = DEFAULT_CALIBRATION,
) -> float:
    """Oracle value: v_max when the object is reachable here with an empty gripper."""
    if skill.family not in (SkillFamily.PICK, SkillFamily.PICK_PLACE):
        raise ValueError(f"{skill.id} is not a pick skill")
    obj = skill.object_arg
    where = state.object_placement.get(obj or "")
    if skill.family is SkillFamily.PICK_PLACE:
        # tabletop: detector sees the block anywhere on the table
        ok = where is not None and where != GRIPPER and state.gripper_contents is None
    else:
        ok = where == state.robot_location and state.gripper_contents is None
    v = cfg.pick_v_max if ok else cfg.pick_v_min
    if cfg.oracle_noise_sigma > 0:
        if rng is None:
            raise ValueError("oracle noise requires an rng")
        v += float(rng.normal(0.0, cfg.oracle_noise_sigma))
    return v


def is_noop(state: WorldState, skill: Skill) -> bool:
    """True when executing ``skill`` in ``state`` could not change anything."""
    fam = skill.family
    obj = skill.object_arg
    if fam is SkillFamily.GO_TO:
        return state.robot_location == skill.location_arg
    if fam is SkillFamily.FIND:
        return obj in state.object_placement and state.effective_location(obj) == state.robot_location
    if fam is SkillFamily.PICK:
        return state.gripper_contents is not None and state.gripper_contents == obj
    if fam is SkillFamily.PLACE:
        return state.gripper_contents != obj
    if fam is SkillFamily.OPEN_DRAWER:
        return state.drawer_open.get(skill.location_arg or "", False)
    if fam is SkillFamily.CLOSE_DRAWER:
        return not state.drawer_open.get(skill.location_arg or "", False)
    if fam is SkillFamily.PUT_IN_DRAWER:
        return state.gripper_contents != obj
    if fam is SkillFamily.TAKE_FROM_DRAWER:
        return state.object_placement.get(obj or "") != skill.location_arg
    if fam is SkillFamily.PICK_PLACE:
        return state.object_placement.get(obj or "") == skill.location_arg
    return False


def apply_completion_cap(
    state: WorldState,
    skill: Skill,
    p: float,
    cfg: CalibrationConfig = DEFAULT_CALIBRATION,
    raw_value: float | None = None,
) -> AffordanceEstimate:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    raw = p if raw_value is None else raw_value
    if is_noop(state, skill):
        return AffordanceEstimate(skill.id, raw, cfg.cap_value, capped=True)
    return AffordanceEstimate(skill.id, raw, p, capped=False)


def affordance_for(
    state: WorldState,
    skill: Skill,
    cfg: CalibrationConfig = DEFAULT_CALIBRATION,
    rng: np.random.Generator | None = None,
) -> AffordanceEstimate:
    fam = skill.family
    if fam in (SkillFamily.PICK, SkillFamily.PICK_PLACE):
        raw = raw_pick_value(state, skill, rng, cfg)
        p = calibrate_pick(raw, cfg)
    elif fam is SkillFamily.GO_TO:
        raw = state.distance(state.robot_location, skill.location_arg)
        p = calibrate_goto(raw, cfg)
    elif fam is SkillFamily.FIND:
        raw = state.distance(state.robot_location, state.effective_location(skill.object_arg))
        p = calibrate_goto(raw, cfg)
    elif fam is SkillFamily.PLACE:
        raw = p = place_affordance(state, skill, cfg)
    elif fam in DRAWER_FAMILIES:
        raw = p = drawer_affordance(state, skill, cfg)
    elif fam is SkillFamily.TERMINATE:
        p = terminate_affordance(cfg)
        return AffordanceEstimate(skill.id, p, p, capped=False)
    else:
        raise ValueError(f"unknown skill family {fam!r}")
    return apply_completion_cap(state, skill, p, cfg, raw_value=raw)


def affordances_for_all(
    state: WorldState,
    skills: Sequence[Skill],
    cfg: CalibrationConfig = DEFAULT_CALIBRATION,
    rng: np.random.Generator | None = None,
) -> list[AffordanceEstimate]:
    """The affordance space: one estimate per skill, in skill order."""
    n_term = sum(s.family is SkillFamily.TERMINATE for s in skills)
    if n_term != 1:
        raise ValueError(f"skill set must contain exactly one terminate skill, found {n_term}")
    return [affordance_for(state, s, cfg, rng) for s in skills]
