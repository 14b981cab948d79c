"""Language-only simulator for tuning prompts without a world.

Each generated case pairs an instruction with a known solution and a
per-step affordance schedule: the correct next skill and a few distractor
skills are feasible, everything else is not, and ``done`` keeps the
terminate constant. The planner reads the schedule through the same
affordance-source interface it uses for a live environment.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .affordance import DEFAULT_CALIBRATION
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
from .oracle import build_oracle_table
from .planner import FixedAffordances, PlannerConfig, PlannerDeps, derive_seed, run_saycan
from .prompting import PromptTemplate, truncate_examples
from .scoring import Scorer, TableScorer

K_VALUES = (0, 1, 2, 4, 8, 17)

# Reference planning rates reported for the 540B model; not reproducible here.
REFERENCE_RATES = {
    0: (0.10, 0.52),
    1: (0.64, 0.74),
    2: (0.68, 0.76),
    4: (0.82, 0.84),
    8: (0.80, 0.80),
    17: (0.88, 0.88),
}

FEASIBLE = 1.0


@dataclass(frozen=True)
class GeneratedCase:
    case: InstructionCase
    affordance_schedule: tuple[dict[str, float], ...]
    distractor_skills: frozenset[str]
    # skill ids of the solution, in order
    solution_ids: tuple[str, ...] = ()
    terminate_prob: float = DEFAULT_CALIBRATION.terminate_prob

    def __post_init__(self) -> None:
        if len(self.affordance_schedule) != len(self.solution_ids):
            raise ValueError("schedule length must equal solution length")
        for t, sid in enumerate(self.solution_ids):
            if self.affordance_schedule[t].get(sid, 0.0) < FEASIBLE:
                raise ValueError(f"step {t}: solution skill {sid} is not feasible")

    @property
    def solution(self) -> tuple[str, ...]:
        return self.case.acceptable_plans[0]

    def final_affordances(self) -> dict[str, float]:
        """After the last step only distractors and ``done`` remain possible."""
        out = {sid: FEASIBLE for sid in self.distractor_skills}
        out[DONE] = self.terminate_prob
        return out

    def source(self) -> FixedAffordances:
        return FixedAffordances((*self.affordance_schedule, self.final_affordances()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "case": self.case.to_dict(),
            "solution_ids": list(self.solution_ids),
            "distractors": sorted(self.distractor_skills),
            "schedule": [dict(sorted(s.items())) for s in self.affordance_schedule],
            "terminate_prob": self.terminate_prob,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> GeneratedCase:
        return cls(
            case=InstructionCase.from_dict(d["case"]),
            affordance_schedule=tuple(dict(s) for s in d["schedule"]),
            distractor_skills=frozenset(d["distractors"]),
            solution_ids=tuple(d["solution_ids"]),
            terminate_prob=float(d.get("terminate_prob", DEFAULT_CALIBRATION.terminate_prob)),
        )


# ---------------------------------------------------------------------------
# Family templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Vocab:
    objects: tuple[str, ...]  # object ids with find/pick/place skills
    locations: tuple[str, ...]  # go_to targets other than the user
    names: dict[str, str]
    by_key: dict[tuple[str, str], Skill]

    def skill(self, family: SkillFamily, arg: str) -> Skill:
        return self.by_key[(family.value, arg)]


def _vocab(skills: Sequence[Skill]) -> _Vocab:
    by_key: dict[tuple[str, str], Skill] = {}
    names: dict[str, str] = {}
    for s in skills:
        if s.family in (SkillFamily.FIND, SkillFamily.PICK, SkillFamily.PLACE):
            by_key[(s.family.value, s.object_arg)] = s
            if s.family is SkillFamily.PICK:
                names[s.object_arg] = s.label.removeprefix("pick up the ")
        elif s.family is SkillFamily.GO_TO:
            by_key[(s.family.value, s.location_arg)] = s
            if s.label.startswith("go to the "):
                names[s.location_arg] = s.label.removeprefix("go to the ")
    objects = tuple(
        sorted(o for o in names if all((f, o) in by_key for f in ("find", "pick", "place")))
    )
    locations = tuple(sorted(loc for loc in names if ("go_to", loc) in by_key and loc not in objects))
    if not objects or not locations:
        raise ValueError("skill set lacks the find/pick/place/go_to skills the templates need")
    return _Vocab(objects, locations, names, by_key)


def _fetch(v: _Vocab, obj: str, to: str) -> list[Skill]:
    return [v.skill(SkillFamily.FIND, obj), v.skill(SkillFamily.PICK, obj), v.skill(SkillFamily.GO_TO, to)]


def _move(v: _Vocab, obj: str, loc: str) -> list[Skill]:
    return _fetch(v, obj, loc) + [v.skill(SkillFamily.PLACE, obj)]


def _user_location(v: _Vocab) -> str:
    for (fam, arg), s in v.by_key.items():
        if fam == "go_to" and s.label == "bring it to you":
            return arg
    raise ValueError("skill set has no 'bring it to you' skill")


def _sample_case(
    rng: np.random.Generator, family: InstructionFamily, v: _Vocab
) -> tuple[str, list[Skill]]:
    o, o2 = (v.objects[i] for i in rng.choice(len(v.objects), 2, replace=False))
    loc = v.locations[int(rng.integers(len(v.locations)))]
    on, on2, ln = v.names[o], v.names[o2], v.names[loc]
    user = _user_location(v)
    if family is InstructionFamily.NL_SINGLE_PRIMITIVE:
        return f"Pick up the {on}", [v.skill(SkillFamily.PICK, o)]
    if family is InstructionFamily.NL_NOUNS:
        return f"Bring me the {on}", _fetch(v, o, user)
    if family is InstructionFamily.NL_VERBS:
        return f"Restock the {on} on the {ln}", _move(v, o, loc)
    if family is InstructionFamily.STRUCTURED_LANGUAGE:
        return f"Move the {on} to the {ln}.", _move(v, o, loc)
    if family is InstructionFamily.EMBODIMENT:
        # the object is already in hand
        return f"Put the {on} on the {ln}", [v.skill(SkillFamily.GO_TO, loc), v.skill(SkillFamily.PLACE, o)]
    if family is InstructionFamily.CROWD_SOURCED:
        return f"Could you bring me the {on} please?", _fetch(v, o, user)
    if family is InstructionFamily.LONG_HORIZON:
        return f"Move the {on} to the {ln} and then bring me the {on2}", _move(v, o, loc) + _fetch(v, o2, user)
    raise ValueError(f"no template for family {family!r}")


def generate_case(
    rng: np.random.Generator,
    family: InstructionFamily | str,
    skill_set: Sequence[Skill],
    n_distractors: int = 3,
    case_id: str | None = None,
    terminate_prob: float = DEFAULT_CALIBRATION.terminate_prob,
) -> GeneratedCase:
    family = InstructionFamily(family)
    v = _vocab(skill_set)
    text, solution = _sample_case(rng, family, v)
    sol_ids = {s.id for s in solution}
    pool = sorted(s.id for s in skill_set if s.id not in sol_ids and s.family is not SkillFamily.TERMINATE)
    if n_distractors > len(pool):
        raise ValueError(f"only {len(pool)} skills available as distractors")
    picks = rng.choice(len(pool), n_distractors, replace=False) if n_distractors else []
    distractors = frozenset(pool[int(i)] for i in picks)
    schedule = []
    for s in solution:
        step = {sid: FEASIBLE for sid in distractors}
        step[s.id] = FEASIBLE
        step[DONE] = terminate_prob
        schedule.append(step)
    labels = tuple(s.label for s in solution)
    case = InstructionCase(
        case_id=case_id or f"gen_{family.value}",
        instruction=Instruction(text),
        family=family,
        acceptable_plans=(labels,),
        goal_predicate={"all": []},
        initial_scenario="",
    )
    return GeneratedCase(case, tuple(schedule), distractors, tuple(s.id for s in solution), terminate_prob)


def generate_batch(
    seed: int,
    skill_set: Sequence[Skill],
    n: int = 50,
    families: Sequence[InstructionFamily] = tuple(InstructionFamily),
    n_distractors: int = 3,
    max_attempts: int = 100,
) -> list[GeneratedCase]:
    """``n`` cases with distinct instructions, families in round-robin order."""
    out: list[GeneratedCase] = []
    seen: set[str] = set()
    i = 0
    while len(out) < n:
        fam = InstructionFamily(families[len(out) % len(families)])
        for attempt in range(max_attempts):
            rng = np.random.default_rng(derive_seed(seed, i, attempt))
            gc = generate_case(rng, fam, skill_set, n_distractors, case_id=f"gen_{len(out):03d}")
            if gc.case.instruction.text not in seen:
                break
        else:
            raise ValueError(f"could not find a new instruction for family {fam.value}")
        seen.add(gc.case.instruction.text)
        out.append(gc)
        i += 1
    return out


def save_batch(cases: Sequence[GeneratedCase], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"format_version": 1, "cases": [c.to_dict() for c in cases]}, f, indent=1)
        f.write("\n")


def load_batch(path: str | Path) -> list[GeneratedCase]:
    with open(path, encoding="utf-8") as f:
        return [GeneratedCase.from_dict(d) for d in json.load(f)["cases"]]


def oracle_scorer(cases: Sequence[GeneratedCase]) -> TableScorer:
    """Scorer that knows every solution: mass on the next step, then ``done``."""
    return TableScorer(build_oracle_table((c.case.instruction.text, c.solution) for c in cases))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

PlannerFn = Callable[[GeneratedCase], PlanTrace]


def saycan_planner(
    skills: Sequence[Skill],
    scorer: Scorer,
    template: PromptTemplate | None = None,
    cfg: PlannerConfig = PlannerConfig(),
) -> PlannerFn:
    deps = PlannerDeps(tuple(skills), scorer, template or PromptTemplate(()))

    def plan(gc: GeneratedCase) -> PlanTrace:
        return run_saycan(
            gc.case.instruction, None, deps, cfg, source=gc.source(), execute=False, initial_state=_EMPTY_STATE
        ).trace

    return plan


# schedules ignore the world, so planning runs against a placeholder state
_EMPTY_STATE = WorldState(robot_location="nowhere", gripper_contents=None, object_placement={})


def plan_correct(trace: PlanTrace, case: InstructionCase, require_termination: bool) -> bool:
    labels = tuple(trace.labels)
    if require_termination:
        return trace.termination is Termination.DONE_TOKEN and labels in case.acceptable_plans
    return any(labels[: len(p)] == tuple(p) for p in case.acceptable_plans)


def evaluate_planner(
    planner_fn: PlannerFn, cases: Sequence[GeneratedCase], require_termination: bool
) -> float:
    """Fraction of cases planned correctly.

    Without the termination requirement a plan counts when it starts with an
    acceptable solution, whatever it does after.
    """
    if not cases:
        raise ValueError("cases must be non-empty")
    hits = sum(plan_correct(planner_fn(gc), gc.case, require_termination) for gc in cases)
    return hits / len(cases)


def evaluate_both(planner_fn: PlannerFn, cases: Sequence[GeneratedCase]) -> tuple[float, float]:
    """(rate requiring termination, rate without) from one planning pass per case."""
    if not cases:
        raise ValueError("cases must be non-empty")
    traces = [planner_fn(gc) for gc in cases]
    with_t = sum(plan_correct(t, gc.case, True) for t, gc in zip(traces, cases)) / len(cases)
    without = sum(plan_correct(t, gc.case, False) for t, gc in zip(traces, cases)) / len(cases)
    return with_t, without


@dataclass(frozen=True)
class KSweepRow:
    k: int
    rate_require_termination: float
    rate_no_termination: float
    reference_require_termination: float | None
    reference_no_termination: float | None


def k_sweep(
    cases: Sequence[GeneratedCase],
    skills: Sequence[Skill],
    scorer: Scorer,
    template: PromptTemplate,
    k_values: Sequence[int] = K_VALUES,
    cfg: PlannerConfig = PlannerConfig(),
) -> list[KSweepRow]:
    rows = []
    for k in k_values:
        fn = saycan_planner(skills, scorer, truncate_examples(template, k), cfg)
        with_t, without = evaluate_both(fn, cases)
        ref = REFERENCE_RATES.get(k, (None, None))
        rows.append(KSweepRow(k, with_t, without, ref[0], ref[1]))
    return rows


def k_sweep_csv(rows: Sequence[KSweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["format_version", "k", "rate_require_termination", "rate_no_termination",
                "reference_require_termination", "reference_no_termination"])
    for r in rows:
        w.writerow([1, r.k, f"{r.rate_require_termination:.4f}", f"{r.rate_no_termination:.4f}",
                    "" if r.reference_require_termination is None else f"{r.reference_require_termination:.2f}",
                    "" if r.reference_no_termination is None else f"{r.reference_no_termination:.2f}"])
    return buf.getvalue()
