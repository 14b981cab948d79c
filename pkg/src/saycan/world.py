"""World configuration: objects, locations, drawers, skills and named scenarios.

A world file is JSON. Kitchen worlds list their objects and locations
explicitly; tabletop worlds describe a seeded generator of colored blocks
and bowls on a grid. Named scenarios are overrides applied on top of the
base initial state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .affordance import CalibrationConfig
from .domain import (
    GRIPPER,
    TERMINATE_SKILL,
    Skill,
    SkillFamily,
    WorldState,
    check_skill_set,
    slugify,
)
from .simenv import Scenario

KITCHEN_FAMILIES = (
    SkillFamily.FIND,
    SkillFamily.PICK,
    SkillFamily.PLACE,
    SkillFamily.GO_TO,
)


@dataclass(frozen=True)
class ObjectSpec:
    id: str
    name: str
    article: str = "a"
    categories: tuple[str, ...] = ()


@dataclass(frozen=True)
class LocationSpec:
    id: str
    name: str
    xy: tuple[float, float]
    navigable: bool = True
    label: str | None = None


@dataclass(frozen=True)
class DrawerSpec:
    id: str
    name: str
    location: str


@dataclass(frozen=True)
class World:
    kind: str
    objects: tuple[ObjectSpec, ...]
    locations: tuple[LocationSpec, ...]
    drawers: tuple[DrawerSpec, ...]
    skills: tuple[Skill, ...]
    calibration: CalibrationConfig
    scenarios: dict[str, Scenario]
    default_scenario: str
    success_prob: dict[str, float] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.skills]

    def skill_by_label(self, label: str) -> Skill:
        for s in self.skills:
            if s.label == label:
                return s
        raise KeyError(label)

    def skill_by_id(self, skill_id: str) -> Skill:
        for s in self.skills:
            if s.id == skill_id:
                return s
        raise KeyError(skill_id)

    def object(self, obj_id: str) -> ObjectSpec:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise KeyError(obj_id)

    def location(self, loc_id: str) -> LocationSpec:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise KeyError(loc_id)

    def scenario(self, scenario_id: str | None = None) -> Scenario:
        key = scenario_id or self.default_scenario
        try:
            return self.scenarios[key]
        except KeyError:
            raise KeyError(f"unknown scenario {key!r}") from None


def _article(name: str) -> str:
    return "an" if name[:1].lower() in "aeiou" else "a"


def skill_labels_for(obj: ObjectSpec) -> dict[SkillFamily, str]:
    return {
        SkillFamily.PICK: f"pick up the {obj.name}",
        SkillFamily.FIND: f"find {obj.article} {obj.name}",
        SkillFamily.PLACE: f"put down the {obj.name}",
    }


def build_skills(
    objects: tuple[ObjectSpec, ...],
    locations: tuple[LocationSpec, ...],
    drawers: tuple[DrawerSpec, ...],
    families: set[SkillFamily],
    kind: str = "kitchen",
) -> tuple[Skill, ...]:
    """Cross product of templates over objects, locations and drawers, plus ``done``."""
    skills: list[Skill] = []
    for fam in (SkillFamily.FIND, SkillFamily.PICK, SkillFamily.PLACE):
        if fam not in families:
            continue
        for o in objects:
            skills.append(Skill(f"{fam.value}__{o.id}", skill_labels_for(o)[fam], fam, object_arg=o.id))
    if SkillFamily.GO_TO in families:
        for loc in locations:
            if loc.navigable:
                label = loc.label or f"go to the {loc.name}"
                skills.append(Skill(f"go_to__{loc.id}", label, SkillFamily.GO_TO, location_arg=loc.id))
    if SkillFamily.PICK_PLACE in families:
        targets = [loc for loc in locations if loc.navigable]
        for o in objects:
            for loc in targets:
                skills.append(
                    Skill(
                        f"pick_place__{o.id}__{loc.id}",
                        f"pick up the {o.name} and place it in the {loc.name}",
                        SkillFamily.PICK_PLACE,
                        object_arg=o.id,
                        location_arg=loc.id,
                    )
                )
    for d in drawers:
        if SkillFamily.OPEN_DRAWER in families:
            skills.append(Skill(f"open_drawer__{d.id}", f"open the {d.name}", SkillFamily.OPEN_DRAWER, location_arg=d.id))
        if SkillFamily.CLOSE_DRAWER in families:
            skills.append(Skill(f"close_drawer__{d.id}", f"close the {d.name}", SkillFamily.CLOSE_DRAWER, location_arg=d.id))
        for o in objects:
            if SkillFamily.PUT_IN_DRAWER in families:
                skills.append(
                    Skill(
                        f"put_in_drawer__{o.id}__{d.id}",
                        f"put the {o.name} in the {d.name}",
                        SkillFamily.PUT_IN_DRAWER,
                        object_arg=o.id,
                        location_arg=d.id,
                    )
                )
            if SkillFamily.TAKE_FROM_DRAWER in families:
                skills.append(
                    Skill(
                        f"take_from_drawer__{o.id}__{d.id}",
                        f"take the {o.name} out of the {d.name}",
                        SkillFamily.TAKE_FROM_DRAWER,
                        object_arg=o.id,
                        location_arg=d.id,
                    )
                )
    skills.append(TERMINATE_SKILL)
    check_skill_set(skills)
    return tuple(skills)


def _apply_overrides(base: WorldState, ov: Mapping[str, Any]) -> WorldState:
    placement = dict(base.object_placement)
    placement.update(ov.get("placements", {}))
    gripper = base.gripper_contents
    if "gripper" in ov:
        if gripper is not None and placement.get(gripper) == GRIPPER:
            placement[gripper] = base.robot_location
        gripper = ov["gripper"]
        if gripper is not None:
            placement[gripper] = GRIPPER
    drawers = dict(base.drawer_open)
    drawers.update({k: bool(v) for k, v in ov.get("drawers", {}).items()})
    return base.with_changes(
        robot_location=ov.get("robot_location", base.robot_location),
        gripper_contents=gripper,
        object_placement=placement,
        drawer_open=drawers,
    )


def _parse_objects(raw: list) -> tuple[ObjectSpec, ...]:
    out = []
    for entry in raw:
        if isinstance(entry, str):
            entry = {"name": entry}
        name = entry["name"]
        out.append(
            ObjectSpec(
                id=entry.get("id") or slugify(name),
                name=name,
                article=entry.get("article") or _article(name),
                categories=tuple(entry.get("categories", ())),
            )
        )
    return tuple(out)


def _parse_locations(raw: list) -> tuple[LocationSpec, ...]:
    return tuple(
        LocationSpec(
            id=e.get("id") or slugify(e["name"]),
            name=e["name"],
            xy=(float(e["xy"][0]), float(e["xy"][1])),
            navigable=bool(e.get("navigable", True)),
            label=e.get("label"),
        )
        for e in raw
    )


def _tabletop_layout(spec: Mapping[str, Any]) -> tuple[tuple[ObjectSpec, ...], tuple[LocationSpec, ...], dict[str, str]]:
    """Seeded blocks-and-bowls layout: bowls and blocks on distinct grid cells."""
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    colors = list(spec.get("colors", ["blue", "red", "green", "yellow", "purple", "orange"]))
    rows, cols = spec.get("grid", [4, 4])
    n_blocks = int(spec.get("n_blocks", 3))
    n_bowls = int(spec.get("n_bowls", 3))
    if n_blocks + n_bowls > rows * cols:
        raise ValueError("grid too small for the requested blocks and bowls")
    block_colors = [colors[i] for i in sorted(rng.choice(len(colors), n_blocks, replace=False))]
    bowl_colors = [colors[i] for i in sorted(rng.choice(len(colors), n_bowls, replace=False))]
    cells = rng.permutation(rows * cols)[: n_blocks + n_bowls]
    cell = 0.1  # meters per grid cell

    def xy(c: int) -> tuple[float, float]:
        return (float(c % cols) * cell, float(c // cols) * cell)

    locations = [LocationSpec("table", "table", (0.0, 0.0), navigable=False)]
    for col, c in zip(bowl_colors, cells[n_blocks:]):
        locations.append(LocationSpec(f"{col}_bowl", f"{col} bowl", xy(int(c))))
    objects = []
    placement = {}
    for col, c in zip(block_colors, cells[:n_blocks]):
        cid = f"cell_{int(c) // cols}_{int(c) % cols}"
        locations.append(LocationSpec(cid, cid.replace("_", " "), xy(int(c)), navigable=False))
        objects.append(ObjectSpec(f"{col}_block", f"{col} block"))
        placement[f"{col}_block"] = cid
    return tuple(objects), tuple(locations), placement


def world_from_dict(cfg: Mapping[str, Any]) -> World:
    kind = cfg.get("kind", "kitchen")
    calibration = CalibrationConfig.from_dict(cfg.get("calibration"))
    success_prob = {SkillFamily(k).value: float(v) for k, v in cfg.get("success_prob", {}).items()}

    if kind == "tabletop":
        objects, locations, placement = _tabletop_layout(cfg.get("tabletop", {}))
        drawers: tuple[DrawerSpec, ...] = ()
        families = {SkillFamily.PICK_PLACE}
        base = WorldState(
            robot_location="table",
            gripper_contents=None,
            object_placement=placement,
            location_coords={loc.id: loc.xy for loc in locations},
        )
    elif kind == "kitchen":
        objects = _parse_objects(cfg["objects"])
        locations = _parse_locations(cfg["locations"])
        drawers = tuple(
            DrawerSpec(d.get("id") or slugify(d["name"]), d["name"], d["location"]) for d in cfg.get("drawers", [])
        )
        families = {SkillFamily(f) for f in cfg.get("families", [f.value for f in KITCHEN_FAMILIES])}
        init = cfg["initial"]
        placement = {slugify(k) if k not in {o.id for o in objects} else k: v for k, v in init["placements"].items()}
        gripper = init.get("gripper")
        if gripper:
            placement[gripper] = GRIPPER
        base = WorldState(
            robot_location=init["robot_location"],
            gripper_contents=gripper,
            object_placement=placement,
            drawer_open={d.id: bool(init.get("drawers", {}).get(d.id, False)) for d in drawers},
            location_coords={loc.id: loc.xy for loc in locations},
            drawer_locations={d.id: d.location for d in drawers},
        )
    else:
        raise ValueError(f"unknown world kind {kind!r}")

    missing = {o.id for o in objects} - set(base.object_placement)
    if missing:
        raise ValueError(f"objects without an initial placement: {sorted(missing)}")
    skills = build_skills(objects, locations, drawers, families, kind)

    default = cfg.get("default_scenario", kind)
    raw_scenarios = dict(cfg.get("scenarios", {}))
    raw_scenarios.setdefault(default, {})
    scenarios = {
        sid: Scenario(sid, _apply_overrides(base, ov), kind, dict(success_prob))
        for sid, ov in raw_scenarios.items()
    }
    return World(
        kind=kind,
        objects=objects,
        locations=locations,
        drawers=drawers,
        skills=skills,
        calibration=calibration,
        scenarios=scenarios,
        default_scenario=default,
        success_prob=success_prob,
    )


def load_world(path: str | Path) -> World:
    with open(path, encoding="utf-8") as f:
        return world_from_dict(json.load(f))


def data_path(name: str) -> Path:
    """Path of a packaged data asset (worlds, prompts, suites, scorer tables)."""
    return Path(str(resources.files("saycan") / "data" / name))


def default_world(name: str = "kitchen.json") -> World:
    return load_world(data_path(name))
