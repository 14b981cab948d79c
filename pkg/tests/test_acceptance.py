"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the summary."""

from __future__ import annotations

import io
import math
import time
from collections import Counter
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from saycan.affordance import calibrate_goto, calibrate_pick, place_affordance, terminate_affordance
from saycan.cli import main
from saycan.domain import DONE, Instruction, InstructionFamily, SkillFamily, Termination, validate_world_state
from saycan.embedding import cosine, embed, project_to_nearest
from saycan.evalharness import load_suite, run_suite
from saycan.langsim import REFERENCE_RATES, evaluate_both, generate_batch, k_sweep_csv, KSweepRow, oracle_scorer, saycan_planner
from saycan.planner import (
    PlannerConfig,
    PlannerDeps,
    combine_scores,
    derive_seed,
    episode_rng,
    plan_step,
    run_no_vf,
    run_saycan,
)
from saycan.prompting import load_template
from saycan.scoring import ScorerTable, StaticScorer, TableRule, TableScorer
from saycan.simenv import apply_nominal, check_goal, execute, reset
from saycan.world import data_path, default_world, world_from_dict


@pytest.fixture
def criterion(acceptance_log):
    @contextmanager
    def run(name: str, budget: float | None = None):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            acceptance_log.append(f"FAIL  {name}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            raise
        dt = time.perf_counter() - t0
        if budget is not None and dt >= budget:
            acceptance_log.append(f"FAIL  {name}: took {dt:.2f}s, budget {budget:g}s")
            pytest.fail(f"{name} exceeded its {budget}s budget ({dt:.2f}s)")
        acceptance_log.append(f"PASS  {name} ({dt:.2f}s)")

    return run


def test_calibration_exactness(criterion):
    with criterion("calibration exactness", budget=1.0):
        # midpoints from the exact rational formulas: (0.35-0.2)/0.3 and (100-25)/100
        pairs = [
            (calibrate_pick(0.5), 1.0),
            (calibrate_pick(0.2), 0.0),
            (calibrate_pick(0.35), 0.5),
            (calibrate_goto(0.0), 1.0),
            (calibrate_goto(100.0), 0.0),
            (calibrate_goto(25.0), 0.75),
            (terminate_affordance(), 0.1),
        ]
        w = default_world()
        put = next(s for s in w.skills if s.family is SkillFamily.PLACE)
        pairs.append((place_affordance(w.scenario().initial_state, put), 1.0))
        for got, want in pairs:
            assert abs(got - want) <= 1e-12, (got, want)


_SCALE_CASES = []
_SHIFT_CASES = []

# affordances stay in the normal float range so products cannot underflow to zero
scores = st.lists(
    st.tuples(st.floats(-50, 0), st.one_of(st.just(0.0), st.floats(1e-6, 1))), min_size=2, max_size=30
)


def _skills(n: int):
    from saycan.domain import TERMINATE_SKILL, Skill

    return [Skill(f"s{i:02d}", f"find the o{i}", SkillFamily.FIND, object_arg=f"o{i}") for i in range(n - 1)] + [TERMINATE_SKILL]


@settings(max_examples=1000, derandomize=True, deadline=None, suppress_health_check=list(HealthCheck))
@given(scores, st.floats(1e-6, 10))
def _check_scale(pairs, c):
    sk = _skills(len(pairs))
    lps = [p[0] for p in pairs]
    aff = [p[1] for p in pairs]
    _, a, _ = combine_scores(sk, lps, aff)
    _, b, _ = combine_scores(sk, lps, [x * c for x in aff])
    _SCALE_CASES.append(1)
    assert a == b


@settings(max_examples=1000, derandomize=True, deadline=None, suppress_health_check=list(HealthCheck))
@given(scores, st.floats(-50, 50))
def _check_shift(pairs, k):
    sk = _skills(len(pairs))
    lps = [p[0] for p in pairs]
    aff = [p[1] for p in pairs]
    _, a, _ = combine_scores(sk, lps, aff)
    _, b, _ = combine_scores(sk, [x + k for x in lps], aff)
    _SHIFT_CASES.append(1)
    assert a == b


def test_argmax_invariances(criterion):
    with criterion("argmax invariances (affordance scaling, logprob shift)", budget=30.0):
        _check_scale()
        _check_shift()
        assert len(_SCALE_CASES) >= 1000 and len(_SHIFT_CASES) >= 1000, (len(_SCALE_CASES), len(_SHIFT_CASES))


def test_zero_gating(criterion, kitchen):
    with criterion("zero-gating over randomized steps"):
        rng = np.random.default_rng(20240)
        labels = kitchen.labels
        steps = 0
        gated = 0
        while steps < 1000:
            scen = kitchen.scenarios[sorted(kitchen.scenarios)[int(rng.integers(len(kitchen.scenarios)))]]
            state = reset(scen)
            for _ in range(int(rng.integers(0, 6))):
                state = apply_nominal(state, kitchen.skills[int(rng.integers(len(kitchen.skills)))])
            scorer = StaticScorer({lab: float(rng.uniform(-15, 0)) for lab in labels})
            rec = plan_step(state, Instruction("do something"), [], kitchen.skills, scorer,
                            calibration=kitchen.calibration, rng=rng)
            steps += 1
            best_lm = max(rec.candidates, key=lambda c: c.llm_prob)
            gated += best_lm.affordance_prob == 0.0
            if any(c.combined > 0 for c in rec.candidates):
                assert rec.chosen.affordance_prob > 0.0, rec.chosen
        # the property was exercised, not vacuous
        assert gated > 100


def test_oracle_recovery(criterion, kitchen):
    with criterion("oracle recovery on 50 generated cases", budget=10.0):
        cases = generate_batch(0, kitchen.skills, n=50)
        fn = saycan_planner(kitchen.skills, oracle_scorer(cases))
        with_t, without = evaluate_both(fn, cases)
        assert (with_t, without) == (1.0, 1.0)


def test_gating_versus_no_vf(criterion, kitchen):
    with criterion("grounding gates an infeasible LM favourite; No-VF does not"):
        case = load_suite(data_path("suite_gating.json"))[0]
        deps = PlannerDeps(kitchen.skills, TableScorer.from_file(data_path("scorer_gating.json")))
        scen = kitchen.scenario(case.initial_scenario)
        state = scen.initial_state
        # nothing to pick up where the robot stands
        assert not [o for o, w in state.object_placement.items() if w == state.robot_location]
        nv = run_no_vf(case.instruction, scen, deps)
        sc = run_saycan(case.instruction, scen, deps)
        assert nv.trace.labels[0] == "pick up the coke can"
        assert nv.step_outcomes[0] is False
        assert "pick up the coke can" != sc.trace.labels[0]
        assert sc.trace.records[0].chosen.affordance_prob > 0
        assert sc.trace.labels in case.acceptable_plans
        assert check_goal(sc.final_state, case)


def _random_world(rng: np.random.Generator):
    n_obj = int(rng.integers(1, 5))
    n_loc = int(rng.integers(2, 5))
    locs = [{"id": f"l{i}", "name": f"place {i}", "xy": [float(rng.uniform(0, 250)), float(rng.uniform(0, 250))]}
            for i in range(n_loc)]
    objs = [{"id": f"o{i}", "name": f"thing {i}"} for i in range(n_obj)]
    families = ["find", "pick", "place", "go_to"]
    calibration = {"terminate_prob": 0.0} if rng.random() < 0.3 else {}
    drawers = []
    if rng.random() < 0.5:
        drawers = [{"id": "box", "name": "box", "location": "l0"}]
        families += ["open_drawer", "close_drawer", "put_in_drawer", "take_from_drawer"]
    cfg = {
        "kind": "kitchen",
        "calibration": calibration,
        "objects": objs,
        "locations": locs,
        "drawers": drawers,
        "families": families,
        "initial": {
            "robot_location": f"l{int(rng.integers(n_loc))}",
            "placements": {o["id"]: f"l{int(rng.integers(n_loc))}" for o in objs},
            "drawers": {d["id"]: bool(rng.random() < 0.5) for d in drawers},
        },
    }
    return world_from_dict(cfg)


def _random_table(rng: np.random.Generator, labels: list[str]) -> ScorerTable:
    rules = []
    for _ in range(int(rng.integers(0, 6))):
        picked = rng.choice(len(labels), int(rng.integers(1, len(labels) + 1)), replace=False)
        dist = {labels[int(i)]: float(rng.uniform(0, 1)) + 1e-6 for i in picked}
        h = [labels[int(i)] for i in rng.choice(len(labels) - 1, int(rng.integers(0, 3)))]
        rules.append(TableRule(dist, history_suffix=tuple(h) if rng.random() < 0.7 else None))
    return ScorerTable(tuple(rules), floor=float(10 ** rng.uniform(-12, -1)))


def test_termination_totality(criterion):
    with criterion("termination totality over 10,000 fuzzed episodes", budget=120.0):
        rng = np.random.default_rng(7)
        counts: Counter = Counter()
        n = 0
        while n < 10_000:
            world = _random_world(rng)
            scen = world.scenario()
            non_done = [lab for lab in world.labels if lab != DONE]
            for _ in range(25):
                table = _random_table(rng, [*non_done, DONE])
                deps = PlannerDeps(world.skills, TableScorer(table), calibration=world.calibration)
                cfg = PlannerConfig(max_steps=int(rng.integers(1, 21)))
                p = scen.with_success_prob(float(rng.uniform(0.5, 1.0)))
                r = run_saycan(Instruction("do the task"), p, deps, cfg, seed=int(rng.integers(2**32)))
                t = r.trace
                assert isinstance(t.termination, Termination)
                assert 1 <= len(t.records) <= cfg.max_steps
                last = t.records[-1]
                if t.termination is Termination.MAX_STEPS:
                    assert len(t.records) == cfg.max_steps and len(t.labels) == cfg.max_steps
                else:
                    assert last.chosen_skill_id == DONE and len(t.labels) == len(t.records) - 1
                    zero = all(c.combined <= 0 for c in last.candidates)
                    assert zero == (t.termination is Termination.NO_FEASIBLE)
                assert validate_world_state(r.final_state) == []
                counts[t.termination] += 1
                n += 1
        assert n == 10_000
        assert all(counts[t] > 0 for t in Termination), counts


def test_execution_statistics(criterion, kitchen):
    with criterion("execution statistics: 3 steps at 0.9 succeed together 0.729 +/- 0.02", budget=30.0):
        scen = kitchen.scenario().with_success_prob(0.9)
        plan = [kitchen.skill_by_label(x) for x in ("find an apple", "pick up the apple", "bring it to you")]
        episodes = 10_000
        wins = 0
        for i in range(episodes):
            rng = episode_rng(derive_seed(2024, i))
            state = reset(scen)
            ok = True
            for skill in plan:
                out = execute(state, skill, rng, scen)
                ok &= out.success
                state = out.state_after
            wins += ok
        freq = wins / episodes
        assert abs(freq - 0.9**3) <= 0.02, freq


def test_projection_identity(criterion):
    with criterion("projection identity over shipped labels"):
        for name in ("kitchen.json", "tabletop.json"):
            labels = default_world(name).labels
            for c in labels:
                assert project_to_nearest(c, labels)[0] == c
                v = embed(c)
                assert v.norm > 0
                assert abs(cosine(v, v) - 1.0) <= 1e-12


def test_suite_shape(criterion, kitchen, oracle_deps):
    with criterion("suite shape 101 cases, 15/15/15/15/11/15/15, oracle at 100%", budget=60.0):
        suite = load_suite(data_path("suite.json"))
        assert len(suite) == 101
        counts = Counter(c.family for c in suite)
        assert [counts[f] for f in InstructionFamily] == [15, 15, 15, 15, 11, 15, 15]
        rep = run_suite(suite, "saycan", oracle_deps, kitchen.scenarios)
        for row in rep.rows:
            assert row.plan_rate == 1.0 and row.execution_rate == 1.0, row


def test_drawer_sequencing(criterion, kitchen, oracle_scorer):
    with criterion("drawer sequencing open -> put -> close; heuristic 0 away from drawers"):
        suite = load_suite(data_path("suite.json"))
        case = next(c for c in suite if c.instruction.text == "restock the rice chips into the drawer")
        assert case.family is InstructionFamily.CROWD_SOURCED
        deps = PlannerDeps(kitchen.skills, oracle_scorer, load_template(data_path("prompt_drawer.json")),
                           kitchen.calibration)
        r = run_saycan(case.instruction, kitchen.scenario(case.initial_scenario), deps)
        labels = list(r.trace.labels)
        order = [labels.index(x) for x in ("open the drawer", "put the rice chips in the drawer", "close the drawer")]
        assert order == sorted(order)
        assert check_goal(r.final_state, case)
        from saycan.affordance import affordance_for

        state = kitchen.scenario().initial_state
        drawer_skills = [s for s in kitchen.skills if s.family in (SkillFamily.OPEN_DRAWER, SkillFamily.PUT_IN_DRAWER,
                                                                    SkillFamily.TAKE_FROM_DRAWER, SkillFamily.CLOSE_DRAWER)]
        for loc in state.location_coords:
            if loc == "drawers":
                continue
            here = state.with_changes(robot_location=loc)
            assert all(affordance_for(here, s).probability == 0.0 for s in drawer_skills)


def _cli(*argv: str) -> str:
    out = io.StringIO()
    main(list(argv), out=out)
    return out.getvalue()


def test_determinism(criterion, tmp_path):
    with criterion("determinism: identical config and seed give byte-identical logs and reports"):
        files = []
        for d in ("a", "b"):
            base = tmp_path / d
            base.mkdir()
            stdout = _cli("run", "Bring me a snack", "--success-prob", "0.7", "--seed", "11", "--log", str(base / "run.jsonl"))
            stdout += _cli("eval", "--modes", "saycan,generative", "--success-prob", "0.8", "--repeats", "2",
                           "--seed", "11", "--report-dir", str(base / "reports"))
            stdout += _cli("ksweep", "--n", "10", "--seed", "11", "--out", str(base / "k.csv"))
            snap = {p.relative_to(base).as_posix(): p.read_bytes() for p in sorted(base.rglob("*")) if p.is_file()}
            files.append((stdout, snap))
        assert files[0] == files[1]
        assert len(files[0][1]) >= 6


def test_unreproducible_reference_numbers_are_only_recorded(criterion, acceptance_log):
    with criterion("reference numbers needing a real LLM and robot: recorded, not reproduced"):
        # the harness emits the same report shapes so a real scorer can be plugged in
        text = k_sweep_csv([KSweepRow(k, math.nan, math.nan, *REFERENCE_RATES[k]) for k in sorted(REFERENCE_RATES)])
        assert "reference_require_termination" in text.splitlines()[0]
    acceptance_log.append(
        "NOTE  not reproduced (needs a large LM and a physical robot): planning/execution 84%/74%, "
        "the FLAN comparison, the model-size table, 33% drawer execution, multilingual results"
    )
