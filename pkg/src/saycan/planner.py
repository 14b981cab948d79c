"""Grounded skill selection and the ablation planners.

Each step scores every skill label (plus ``done``) with the language model,
multiplies by the skill's affordance probability, and picks the argmax. The
chosen label is appended to the robot's response and, when execution is on,
the skill runs in the environment before the next step.

Baselines share the same trace format:

* ``no_vf`` -- affordances forced to 1 (language model only).
* ``generative`` -- one free-text plan, each step projected onto the nearest
  skill label by embedding cosine, executed open loop.
* ``bc_use`` -- the instruction projected onto the nearest label sequence.
* ``bc_nl`` -- the raw instruction handed to the policy as a skill label.
* ``cot`` -- generate an explanation once, then score with it in the prompt.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .affordance import DEFAULT_CALIBRATION, CalibrationConfig, affordances_for_all
from .domain import (
    DONE,
    AffordanceEstimate,
    CandidateScore,
    DecisionRecord,
    Instruction,
    PlanTrace,
    Skill,
    SkillFamily,
    Termination,
    WorldState,
    check_skill_set,
)
from .embedding import TIE_TOL, Embedder, HashingEmbedder, cosine, project_to_nearest, tokenize
from .prompting import (
    PromptTemplate,
    build_cot_prompt,
    build_prompt,
    number_steps,
    parse_numbered_steps,
)
from .scoring import (
    Scorer,
    ScorerError,
    ScoreRequest,
    ScorerProtocolError,
    generate,
    score_candidates,
)
from .simenv import Scenario, apply_nominal, execute as env_execute, reset


class PlannerMode(str, Enum):
    SAYCAN = "saycan"
    NO_VF = "no_vf"
    GENERATIVE = "generative"
    BC_USE = "bc_use"
    BC_NL = "bc_nl"
    COT = "cot"

    @classmethod
    def parse(cls, name: str) -> PlannerMode:
        return cls(name.strip().lower().replace("-", "_"))


@dataclass(frozen=True)
class PlannerConfig:
    max_steps: int = 20
    tie_break: str = "lexicographic_id"
    mode: PlannerMode = PlannerMode.SAYCAN
    bc_use_max_len: int = 2
    generate_max_length: int = 512

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.tie_break != "lexicographic_id":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")
        if self.bc_use_max_len < 1:
            raise ValueError("bc_use_max_len must be >= 1")
        object.__setattr__(self, "mode", PlannerMode(self.mode))


# ---------------------------------------------------------------------------
# Affordance sources
# ---------------------------------------------------------------------------


class AffordanceSource(Protocol):
    def estimates(
        self,
        state: WorldState,
        skills: Sequence[Skill],
        step_index: int,
        rng: np.random.Generator | None,
    ) -> list[AffordanceEstimate]: ...


@dataclass(frozen=True)
class EnvAffordances:
    """Affordances computed from the simulated world state."""

    calibration: CalibrationConfig = DEFAULT_CALIBRATION

    def estimates(self, state, skills, step_index, rng):
        return affordances_for_all(state, skills, self.calibration, rng)


@dataclass(frozen=True)
class UnitAffordances:
    """Every skill equally possible; disables grounding and the completion cap."""

    def estimates(self, state, skills, step_index, rng):
        return [AffordanceEstimate(s.id, 1.0, 1.0) for s in skills]


@dataclass(frozen=True)
class FixedAffordances:
    """Per-step affordances given as data: ``steps[t][skill_id]``; the last entry repeats."""

    steps: tuple[Mapping[str, float], ...]
    default: float = 0.0

    def estimates(self, state, skills, step_index, rng):
        table = self.steps[min(step_index, len(self.steps) - 1)] if self.steps else {}
        return [
            AffordanceEstimate(s.id, p, p) for s in skills for p in (float(table.get(s.id, self.default)),)
        ]


# ---------------------------------------------------------------------------
# Single step
# ---------------------------------------------------------------------------


def combine_scores(
    skills: Sequence[Skill],
    logprobs: Sequence[float],
    affordances: Sequence[float],
) -> tuple[tuple[CandidateScore, ...], str, bool]:
    """Product of language and affordance probabilities, argmax with id tie-break.

    Returns (candidates, chosen_skill_id, tie_broken). When every combined
    score is zero the terminate skill is chosen.
    """
    cands = []
    for s, lp, p in zip(skills, logprobs, affordances, strict=True):
        if lp > 700:
            raise ScorerProtocolError(f"logprob {lp} for {s.label!r} would overflow")
        llm = math.exp(lp)
        cands.append(CandidateScore(s.id, s.label, lp, llm, p, llm * p))
    best = max(c.combined for c in cands)
    if best <= 0.0:
        term = next(s.id for s in skills if s.family is SkillFamily.TERMINATE)
        return tuple(cands), term, False
    top = [c.skill_id for c in cands if c.combined == best]
    return tuple(cands), min(top), len(top) > 1


def all_zero(record: DecisionRecord) -> bool:
    return all(c.combined <= 0.0 for c in record.candidates)


def plan_step(
    state: WorldState,
    instruction: Instruction,
    history: Sequence[str],
    skills: Sequence[Skill],
    scorer: Scorer,
    cfg: PlannerConfig | None = None,
    calibration: CalibrationConfig = DEFAULT_CALIBRATION,
    rng: np.random.Generator | None = None,
    *,
    template: PromptTemplate | None = None,
    source: AffordanceSource | None = None,
    prompt: str | None = None,
) -> DecisionRecord:
    if DONE in history:
        raise ValueError("history must not contain 'done'")
    if prompt is None:
        prompt = build_prompt(template or PromptTemplate(()), instruction, history)
    response = score_candidates(scorer, ScoreRequest(prompt, tuple(s.label for s in skills)))
    src = source or EnvAffordances(calibration)
    aff = src.estimates(state, skills, len(history), rng)
    cands, chosen, tied = combine_scores(skills, response.logprobs, [a.probability for a in aff])
    return DecisionRecord(len(history), prompt, cands, chosen, tied)


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------


@dataclass
class PlannerDeps:
    skills: tuple[Skill, ...]
    scorer: Scorer
    template: PromptTemplate = field(default_factory=lambda: PromptTemplate(()))
    calibration: CalibrationConfig = DEFAULT_CALIBRATION
    embedder: Embedder = field(default_factory=HashingEmbedder)
    cot_template: PromptTemplate | None = None

    def __post_init__(self) -> None:
        self.skills = tuple(self.skills)
        check_skill_set(self.skills)
        self._by_id = {s.id: s for s in self.skills}
        self._by_label = {s.label: s for s in self.skills}

    def skill(self, skill_id: str) -> Skill:
        return self._by_id[skill_id]

    def by_label(self, label: str) -> Skill | None:
        return self._by_label.get(label)


@dataclass(frozen=True)
class Rollout:
    trace: PlanTrace
    step_outcomes: tuple[bool, ...]
    final_state: WorldState
    seed: int


def episode_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Independent 63-bit seed for a sub-stream identified by ``indices``."""
    ss = np.random.SeedSequence([master_seed % 2**64, *indices])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class _Runner:
    """Mutable per-episode bookkeeping shared by all modes."""

    def __init__(self, scenario: Scenario | None, state: WorldState, seed: int, execute: bool) -> None:
        self.scenario = scenario
        self.state = state
        self.seed = seed
        self.rng = episode_rng(seed)
        self.execute = execute and scenario is not None
        self.outcomes: list[bool] = []

    def act(self, skill: Skill) -> None:
        if self.execute:
            out = env_execute(self.state, skill, self.rng, self.scenario)
            self.outcomes.append(out.success)
            self.state = out.state_after
        else:
            self.state = apply_nominal(self.state, skill)

    def finish(self, instruction, records, labels, termination, mode, notes=()) -> Rollout:
        trace = PlanTrace(instruction, tuple(records), tuple(labels), termination, mode, tuple(notes))
        return Rollout(trace, tuple(self.outcomes), self.state, self.seed)


def _start(scenario: Scenario | None, initial_state: WorldState | None, seed: int, execute: bool) -> _Runner:
    if initial_state is None:
        if scenario is None:
            raise ValueError("need a scenario or an initial state")
        initial_state = reset(scenario)
    return _Runner(scenario, initial_state, seed, execute)


def _closed_loop(
    instruction: Instruction,
    runner: _Runner,
    deps: PlannerDeps,
    cfg: PlannerConfig,
    source: AffordanceSource,
    make_prompt: Callable[[list[str]], str],
    mode: str,
    notes: Sequence[str] = (),
) -> Rollout:
    history: list[str] = []
    records: list[DecisionRecord] = []
    termination = Termination.MAX_STEPS
    for _ in range(cfg.max_steps):
        rec = plan_step(
            runner.state,
            instruction,
            history,
            deps.skills,
            deps.scorer,
            cfg,
            deps.calibration,
            runner.rng,
            source=source,
            prompt=make_prompt(history),
        )
        records.append(rec)
        skill = deps.skill(rec.chosen_skill_id)
        if skill.family is SkillFamily.TERMINATE:
            termination = Termination.NO_FEASIBLE if all_zero(rec) else Termination.DONE_TOKEN
            break
        history.append(skill.label)
        runner.act(skill)
    return runner.finish(instruction, records, history, termination, mode, notes)


def run_saycan(
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    *,
    seed: int = 0,
    execute: bool = True,
    source: AffordanceSource | None = None,
    initial_state: WorldState | None = None,
) -> Rollout:
    """Closed-loop grounded planning until ``done``, ``max_steps`` or nothing is feasible."""
    runner = _start(scenario, initial_state, seed, execute)
    src = source or EnvAffordances(deps.calibration)
    return _closed_loop(
        instruction, runner, deps, cfg, src, lambda h: build_prompt(deps.template, instruction, h), "saycan"
    )


def run_no_vf(
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    *,
    seed: int = 0,
    execute: bool = True,
    initial_state: WorldState | None = None,
) -> Rollout:
    runner = _start(scenario, initial_state, seed, execute)
    return _closed_loop(
        instruction,
        runner,
        deps,
        cfg,
        UnitAffordances(),
        lambda h: build_prompt(deps.template, instruction, h),
        "no_vf",
    )


def run_cot(
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    *,
    seed: int = 0,
    execute: bool = True,
    source: AffordanceSource | None = None,
    initial_state: WorldState | None = None,
) -> Rollout:
    """Generate an explanation once, then run grounded scoring with it embedded in every prompt.

    Generation errors fall back to plain grounded planning and are noted in
    the trace; an empty explanation behaves exactly like plain planning.
    """
    runner = _start(scenario, initial_state, seed, execute)
    src = source or EnvAffordances(deps.calibration)
    template = deps.cot_template
    notes: list[str] = []
    explanation = ""
    if template is None:
        notes.append("cot_fallback: no chain-of-thought template configured")
    else:
        try:
            raw = generate(deps.scorer, build_cot_prompt(template, instruction, []), cfg.generate_max_length)
            explanation = raw.strip().splitlines()[0].strip() if raw.strip() else ""
        except ScorerError as exc:
            notes.append(f"cot_fallback: {type(exc).__name__}: {exc}")
    if explanation:
        make = lambda h: build_cot_prompt(template, instruction, h, explanation)  # noqa: E731
        mode = "cot"
    else:
        make = lambda h: build_prompt(deps.template, instruction, h)  # noqa: E731
        mode = "cot" if not notes else "cot_fallback"
    return _closed_loop(instruction, runner, deps, cfg, src, make, mode, notes)


# ---------------------------------------------------------------------------
# Open-loop projection baselines
# ---------------------------------------------------------------------------


def _projection_record(
    step_index: int, prompt: str, step_text: str, deps: PlannerDeps
) -> DecisionRecord:
    """Decision record whose 'language' score is the cosine of ``step_text`` to each label."""
    labels = [s.label for s in deps.skills]
    winner, best = project_to_nearest(step_text, labels, deps.embedder)
    q = deps.embedder.embed(step_text)
    cands = []
    n_top = 0
    for s in deps.skills:
        sim = cosine(q, deps.embedder.embed(s.label))
        if best - sim <= TIE_TOL:
            sim = best
            n_top += 1
        sim = max(sim, 1e-12)
        lp = math.log(sim)
        cands.append(CandidateScore(s.id, s.label, lp, sim, 1.0, sim))
    return DecisionRecord(step_index, prompt, tuple(cands), deps.by_label(winner).id, n_top > 1)


def _open_loop(
    instruction: Instruction,
    runner: _Runner,
    deps: PlannerDeps,
    cfg: PlannerConfig,
    prompt: str,
    step_texts: Sequence[str],
    mode: str,
    notes: list[str],
) -> Rollout:
    records: list[DecisionRecord] = []
    labels: list[str] = []
    termination = Termination.NO_FEASIBLE
    for text in step_texts[: cfg.max_steps]:
        rec = _projection_record(len(labels), prompt, text, deps)
        records.append(rec)
        skill = deps.skill(rec.chosen_skill_id)
        if skill.family is SkillFamily.TERMINATE:
            termination = Termination.DONE_TOKEN
            break
        labels.append(skill.label)
        runner.act(skill)
    else:
        if len(step_texts) > cfg.max_steps:
            termination = Termination.MAX_STEPS
        elif step_texts:
            notes.append("plan ended without a termination step")
        else:
            notes.append("no steps produced")
    return runner.finish(instruction, records, labels, termination, mode, notes)


def run_generative(
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    *,
    seed: int = 0,
    execute: bool = True,
    initial_state: WorldState | None = None,
) -> Rollout:
    """Plan once in free text, project each step onto a skill label, execute open loop."""
    runner = _start(scenario, initial_state, seed, execute)
    prompt = build_prompt(deps.template, instruction, [])
    text = generate(deps.scorer, prompt, cfg.generate_max_length)
    steps = parse_numbered_steps(text)
    return _open_loop(instruction, runner, deps, cfg, prompt, steps, "generative", [])


def render_sequence(labels: Sequence[str]) -> str:
    return labels[0] if len(labels) == 1 else number_steps(labels)


def bc_use_candidates(n_skills: int, max_len: int) -> int:
    return sum(n_skills**k for k in range(1, max_len + 1))


def nearest_sequence(
    instruction: str,
    labels: Sequence[str],
    max_len: int = 2,
    embedder: Embedder | None = None,
) -> tuple[tuple[str, ...], float]:
    """Label sequence (length 1..max_len) whose rendering is most cosine-similar to ``instruction``.

    For the hashing embedder, bag-of-words counts are additive over the
    rendered sequence, so each block of sequences sharing a prefix is scored
    in one vectorized pass.
    """
    embedder = embedder or HashingEmbedder()
    if not isinstance(embedder, HashingEmbedder):
        return _nearest_sequence_slow(instruction, labels, max_len, embedder)
    q = embedder.counts(instruction)
    qn = float(np.linalg.norm(q))
    C = np.stack([embedder.counts(lab) for lab in labels])
    n = len(labels)
    best_val = -np.inf
    pool: list[tuple[float, tuple[str, ...]]] = []
    for length in range(1, max_len + 1):
        numbers = np.zeros(embedder.dim)
        if length > 1:
            for i in range(1, length + 1):
                numbers += embedder.counts(str(i))
        for prefix in itertools.product(range(n), repeat=length - 1):
            M = C + numbers + (C[list(prefix)].sum(axis=0) if prefix else 0.0)
            norms = np.linalg.norm(M, axis=1)
            denom = norms * qn
            cos = np.divide(M @ q, denom, out=np.zeros(n), where=denom > 0)
            top = float(cos.max())
            if top < best_val - TIE_TOL:
                continue
            best_val = max(best_val, top)
            for j in np.flatnonzero(cos >= best_val - TIE_TOL):
                pool.append((float(cos[j]), tuple(labels[i] for i in prefix) + (labels[int(j)],)))
    tied = [seq for v, seq in pool if v >= best_val - TIE_TOL]
    winner = (instruction,) if (instruction,) in tied else min(tied, key=render_sequence)
    return winner, float(min(1.0, best_val))


def _nearest_sequence_slow(instruction, labels, max_len, embedder):
    q = embedder.embed(instruction)
    scored = []
    for length in range(1, max_len + 1):
        for seq in itertools.product(labels, repeat=length):
            scored.append((cosine(q, embedder.embed(render_sequence(seq))), seq))
    best = max(s for s, _ in scored)
    tied = [seq for s, seq in scored if best - s <= TIE_TOL]
    winner = (instruction,) if (instruction,) in tied else min(tied, key=render_sequence)
    return winner, best


def run_bc_use(
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    *,
    seed: int = 0,
    execute: bool = True,
    initial_state: WorldState | None = None,
) -> Rollout:
    runner = _start(scenario, initial_state, seed, execute)
    labels = [s.label for s in deps.skills if s.family is not SkillFamily.TERMINATE]
    seq, _ = nearest_sequence(instruction.text, labels, cfg.bc_use_max_len, deps.embedder)
    return _open_loop(instruction, runner, deps, cfg, instruction.text, [*seq, DONE], "bc_use", [])


def _normalize_command(text: str) -> str:
    return " ".join(tokenize(text))


def run_bc_nl(
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    *,
    seed: int = 0,
    execute: bool = True,
    initial_state: WorldState | None = None,
) -> Rollout:
    """Hand the raw instruction to the language-conditioned policy.

    The policy only knows its training commands, so anything that is not
    (up to case and punctuation) a skill label does nothing.
    """
    runner = _start(scenario, initial_state, seed, execute)
    wanted = _normalize_command(instruction.text)
    match = next(
        (s for s in deps.skills if s.family is not SkillFamily.TERMINATE and _normalize_command(s.label) == wanted),
        None,
    )
    if match is None:
        return runner.finish(
            instruction, [], [], Termination.NO_FEASIBLE, "bc_nl", ["instruction matches no skill"]
        )
    return _open_loop(instruction, runner, deps, cfg, instruction.text, [match.label, DONE], "bc_nl", [])


PLANNERS = {
    PlannerMode.SAYCAN: run_saycan,
    PlannerMode.NO_VF: run_no_vf,
    PlannerMode.GENERATIVE: run_generative,
    PlannerMode.BC_USE: run_bc_use,
    PlannerMode.BC_NL: run_bc_nl,
    PlannerMode.COT: run_cot,
}


def run_mode(
    mode: PlannerMode | str,
    instruction: Instruction,
    scenario: Scenario | None,
    deps: PlannerDeps,
    cfg: PlannerConfig = PlannerConfig(),
    **kwargs,
) -> Rollout:
    return PLANNERS[PlannerMode(mode)](instruction, scenario, deps, cfg, **kwargs)
