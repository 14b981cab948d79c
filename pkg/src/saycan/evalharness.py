"""Instruction-suite evaluation: plan and execution success by family.

A case's plan succeeds when its label sequence is one of the acceptable
plans; its execution succeeds when the goal predicate holds in the final
world state. Reports aggregate per family plus a totals row and carry a
fingerprint of the configuration that produced them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .domain import Episode, InstructionCase, InstructionFamily, PlanTrace
from .planner import PlannerConfig, PlannerDeps, PlannerMode, derive_seed, run_mode
from .prompting import truncate_examples
from .simenv import Scenario, check_goal

FORMAT_VERSION = 1
TOTAL = "total"


class SuiteLoadError(ValueError):
    pass


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def parse_suite(text: str, source: str = "<suite>") -> list[InstructionCase]:
    """Parse a JSON array of cases, reporting the line of any malformed case."""
    if not text.strip():
        return []
    dec = json.JSONDecoder()
    pos = len(text) - len(text.lstrip())
    if text[pos] != "[":
        raise SuiteLoadError(f"{source}:{_line_of(text, pos)}: suite must be a JSON array")
    pos += 1
    cases: list[InstructionCase] = []
    while True:
        while pos < len(text) and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= len(text):
            raise SuiteLoadError(f"{source}:{_line_of(text, pos)}: unterminated array")
        if text[pos] == "]":
            break
        start = pos
        try:
            obj, pos = dec.raw_decode(text, pos)
        except json.JSONDecodeError as exc:
            raise SuiteLoadError(f"{source}:{exc.lineno}: {exc.msg}") from None
        try:
            cases.append(InstructionCase.from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            msg = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            raise SuiteLoadError(f"{source}:{_line_of(text, start)}: malformed case: {msg}") from None
    ids = [c.case_id for c in cases]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise SuiteLoadError(f"{source}: duplicate case ids {sorted(dup)}")
    return cases


def load_suite(path: str | Path) -> list[InstructionCase]:
    with open(path, encoding="utf-8") as f:
        return parse_suite(f.read(), str(path))


def dump_suite(cases: Sequence[InstructionCase]) -> str:
    """One case per line so load errors point at a useful line."""
    body = ",\n".join(json.dumps(c.to_dict(), ensure_ascii=False) for c in cases)
    return f"[\n{body}\n]\n" if cases else "[]\n"


def rate_plan(trace: PlanTrace, case: InstructionCase) -> bool:
    return tuple(trace.labels) in case.acceptable_plans


def run_case(
    case: InstructionCase,
    mode: PlannerMode | str,
    deps: PlannerDeps,
    scenarios: Mapping[str, Scenario],
    cfg: PlannerConfig = PlannerConfig(),
    seed: int = 0,
) -> Episode:
    scenario = scenarios[case.initial_scenario]
    r = run_mode(mode, case.instruction, scenario, deps, cfg, seed=seed)
    return Episode(
        trace=r.trace,
        step_outcomes=r.step_outcomes,
        final_state=r.final_state,
        plan_success=rate_plan(r.trace, case),
        execution_success=check_goal(r.final_state, case),
        seed=seed,
    )


@dataclass(frozen=True)
class FamilyRow:
    family: str
    count: int
    plan_rate: float | None
    execution_rate: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "count": self.count,
            "plan_rate": self.plan_rate,
            "execution_rate": self.execution_rate,
        }


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    family: str
    plan_rate: float
    execution_rate: float
    error: str | None = None


@dataclass(frozen=True)
class SuiteReport:
    mode: str
    k_examples: int | None
    seed: int
    repeats: int
    rows: tuple[FamilyRow, ...]
    cases: tuple[CaseResult, ...]
    fingerprint: str
    errors: tuple[str, ...] = ()

    @property
    def total(self) -> FamilyRow:
        return next(r for r in self.rows if r.family == TOTAL)

    def row(self, family: InstructionFamily | str) -> FamilyRow:
        key = InstructionFamily(family).value if family != TOTAL else TOTAL
        return next(r for r in self.rows if r.family == key)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "mode": self.mode,
            "k_examples": self.k_examples,
            "seed": self.seed,
            "repeats": self.repeats,
            "fingerprint": self.fingerprint,
            "rows": [r.to_dict() for r in self.rows],
            "cases": [
                {
                    "case_id": c.case_id,
                    "family": c.family,
                    "plan_rate": c.plan_rate,
                    "execution_rate": c.execution_rate,
                    **({"error": c.error} if c.error else {}),
                }
                for c in self.cases
            ],
            "errors": list(self.errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        return reports_csv([self])


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def reports_csv(reports: Sequence[SuiteReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["format_version", "mode", "k_examples", "family", "count", "plan_rate", "execution_rate", "seed", "repeats", "fingerprint"])
    for rep in reports:
        for r in rep.rows:
            w.writerow([
                FORMAT_VERSION,
                rep.mode,
                "" if rep.k_examples is None else rep.k_examples,
                r.family,
                r.count,
                _fmt(r.plan_rate),
                _fmt(r.execution_rate),
                rep.seed,
                rep.repeats,
                rep.fingerprint,
            ])
    return buf.getvalue()


def config_fingerprint(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _mean(xs: Sequence[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def aggregate(results: Sequence[CaseResult]) -> tuple[FamilyRow, ...]:
    rows = []
    for fam in InstructionFamily:
        sub = [r for r in results if r.family == fam.value]
        if sub:
            rows.append(FamilyRow(fam.value, len(sub), _mean([r.plan_rate for r in sub]), _mean([r.execution_rate for r in sub])))
    rows.append(
        FamilyRow(
            TOTAL,
            len(results),
            _mean([r.plan_rate for r in results]),
            _mean([r.execution_rate for r in results]),
        )
    )
    return tuple(rows)


def run_suite(
    suite: Sequence[InstructionCase],
    mode: PlannerMode | str,
    deps: PlannerDeps,
    scenarios: Mapping[str, Scenario],
    seed: int = 0,
    repeats: int = 1,
    cfg: PlannerConfig = PlannerConfig(),
    k_examples: int | None = None,
    extra_config: Mapping[str, Any] | None = None,
) -> SuiteReport:
    """Run every case ``repeats`` times; a failing case is recorded, never fatal."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    mode = PlannerMode.parse(mode) if isinstance(mode, str) else mode
    results: list[CaseResult] = []
    errors: list[str] = []
    for ci, case in enumerate(suite):
        plans: list[float] = []
        execs: list[float] = []
        err = None
        for rep in range(repeats):
            try:
                ep = run_case(case, mode, deps, scenarios, cfg, derive_seed(seed, ci, rep))
            except Exception as exc:  # recorded per case
                err = f"{type(exc).__name__}: {exc}"
                errors.append(f"{case.case_id}: {err}")
                break
            plans.append(float(ep.plan_success))
            execs.append(float(ep.execution_success))
        if err is not None:
            results.append(CaseResult(case.case_id, case.family.value, 0.0, 0.0, err))
        else:
            results.append(CaseResult(case.case_id, case.family.value, _mean(plans), _mean(execs)))
    results.sort(key=lambda r: r.case_id)
    config = {
        "mode": mode.value,
        "k_examples": k_examples,
        "seed": seed,
        "repeats": repeats,
        "planner": {"max_steps": cfg.max_steps, "tie_break": cfg.tie_break, "bc_use_max_len": cfg.bc_use_max_len},
        "calibration": deps.calibration.to_dict(),
        "template": deps.template.to_dict(),
        "skills": [s.id for s in deps.skills],
        "suite": [c.to_dict() for c in suite],
        **(dict(extra_config) if extra_config else {}),
    }
    return SuiteReport(
        mode=mode.value,
        k_examples=k_examples,
        seed=seed,
        repeats=repeats,
        rows=aggregate(results),
        cases=tuple(results),
        fingerprint=config_fingerprint(config),
        errors=tuple(sorted(errors)),
    )


def ablation_matrix(
    suite: Sequence[InstructionCase],
    modes: Sequence[PlannerMode | str],
    k_values: Sequence[int | None],
    deps: PlannerDeps,
    scenarios: Mapping[str, Scenario],
    seed: int = 0,
    repeats: int = 1,
    cfg: PlannerConfig = PlannerConfig(),
) -> list[SuiteReport]:
    """One report per (mode, k); ``k=None`` keeps the full prompt."""
    reports = []
    for mode in modes:
        for k in k_values:
            d = deps if k is None else replace(deps, template=truncate_examples(deps.template, k))
            reports.append(run_suite(suite, mode, d, scenarios, seed, repeats, cfg, k_examples=k))
    return reports


def format_table(report: SuiteReport) -> str:
    """Console table of per-family rates."""
    lines = [f"mode={report.mode} k={report.k_examples if report.k_examples is not None else 'full'} "
             f"seed={report.seed} repeats={report.repeats} fingerprint={report.fingerprint}"]
    lines.append(f"{'family':<22}{'count':>6}{'plan':>9}{'execution':>11}")
    for r in report.rows:
        name = "Total" if r.family == TOTAL else InstructionFamily(r.family).display
        plan = "n/a" if r.plan_rate is None else f"{100 * r.plan_rate:.0f}%"
        exe = "n/a" if r.execution_rate is None else f"{100 * r.execution_rate:.0f}%"
        lines.append(f"{name:<22}{r.count:>6}{plan:>9}{exe:>11}")
    for e in report.errors:
        lines.append(f"error: {e}")
    return "\n".join(lines) + "\n"
