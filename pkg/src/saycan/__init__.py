"""Grounded skill selection for instruction following."""

from .domain import (
    DONE,
    Instruction,
    InstructionCase,
    InstructionFamily,
    PlanTrace,
    Skill,
    SkillFamily,
    Termination,
    WorldState,
)
from .planner import PlannerConfig, PlannerDeps, PlannerMode, run_mode, run_saycan

__all__ = [
    "DONE",
    "Instruction",
    "InstructionCase",
    "InstructionFamily",
    "PlanTrace",
    "PlannerConfig",
    "PlannerDeps",
    "PlannerMode",
    "Skill",
    "SkillFamily",
    "Termination",
    "WorldState",
    "run_mode",
    "run_saycan",
]

__version__ = "0.1.0"
