"""Command-line entry point: run, eval, repl, ksweep and serve.

Exit codes: 0 success, 1 the episode ran but its goal was not met, 2 bad
configuration, unreadable input or an unreachable scorer.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import IO, Any, Sequence

from .domain import Instruction, InstructionCase, Termination, WorldState
from .evalharness import (
    SuiteLoadError,
    ablation_matrix,
    format_table,
    load_suite,
    reports_csv,
)
from .langsim import K_VALUES, generate_batch, k_sweep, k_sweep_csv, oracle_scorer
from .planner import PlannerConfig, PlannerDeps, PlannerMode, Rollout, run_mode
from .prompting import load_template, truncate_examples
from .render import render_state, render_trace
from .scoring import RemoteScorer, Scorer, ScorerError, ScoreRequest, TableScorer, UniformScorer
from .simenv import Scenario, check_goal, reset
from .world import World, data_path, load_world

FORMAT_VERSION = 1
EXIT_OK, EXIT_GOAL_UNMET, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    world_path: Path
    scenario: str | None
    scorer: str  # oracle | table | uniform | remote
    scorer_table: Path | None
    scorer_url: str | None
    mode: PlannerMode
    seed: int
    max_steps: int
    k_examples: int | None
    prompt_path: Path
    cot_prompt_path: Path
    log_path: Path | None
    report_dir: Path | None
    top_k_display: int = 5
    success_prob: float | None = None

    def validate(self) -> None:
        for p in (self.world_path, self.prompt_path, self.cot_prompt_path, self.scorer_table):
            if p is not None and not p.exists():
                raise ConfigError(f"no such file: {p}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.max_steps < 1:
            raise ConfigError("--max-steps must be >= 1")
        if self.top_k_display < 1:
            raise ConfigError("--top-k must be >= 1")
        if self.scorer == "remote" and not self.scorer_url:
            raise ConfigError("--scorer remote needs --url")
        if self.success_prob is not None and not 0.0 <= self.success_prob <= 1.0:
            raise ConfigError("--success-prob must be in [0, 1]")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--world", type=Path, default=None, help="world JSON (default: shipped kitchen)")
    p.add_argument("--scenario", default=None, help="named scenario inside the world file")
    p.add_argument("--scorer", choices=["oracle", "table", "uniform", "remote"], default="oracle")
    p.add_argument("--table", "--scorer-table", dest="table", type=Path, default=None, help="scorer table JSON for --scorer table")
    p.add_argument("--url", "--scorer-url", dest="url", default=None, help="base URL for --scorer remote")
    p.add_argument("--mode", default="saycan", help="saycan, no-vf, generative, bc-use, bc-nl or cot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=20)
    p.add_argument("--k", "--k-examples", dest="k", type=int, default=None, help="keep only the first k prompt examples")
    p.add_argument("--prompt", type=Path, default=None)
    p.add_argument("--cot-prompt", type=Path, default=None)
    p.add_argument("--log", type=Path, default=None, help="JSONL decision log")
    p.add_argument("--report-dir", type=Path, default=None)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--success-prob", type=float, default=None, help="per-skill execution success probability")


def _config(args: argparse.Namespace) -> RunConfig:
    try:
        mode = PlannerMode.parse(args.mode)
    except ValueError:
        raise ConfigError(f"unknown mode {args.mode!r}") from None
    cfg = RunConfig(
        world_path=args.world or data_path("kitchen.json"),
        scenario=args.scenario,
        scorer=args.scorer,
        scorer_table=args.table if args.scorer == "table" else None,
        scorer_url=args.url,
        mode=mode,
        seed=args.seed,
        max_steps=args.max_steps,
        k_examples=args.k,
        prompt_path=args.prompt or data_path("prompt_default.json"),
        cot_prompt_path=args.cot_prompt or data_path("prompt_cot.json"),
        log_path=args.log,
        report_dir=args.report_dir,
        top_k_display=args.top_k,
        success_prob=args.success_prob,
    )
    if args.scorer == "table" and args.table is None:
        raise ConfigError("--scorer table needs --table")
    cfg.validate()
    return cfg


def make_scorer(cfg: RunConfig) -> Scorer:
    if cfg.scorer == "oracle":
        return TableScorer.from_file(data_path("oracle_table.json"))
    if cfg.scorer == "table":
        return TableScorer.from_file(cfg.scorer_table)
    if cfg.scorer == "uniform":
        return UniformScorer()
    return RemoteScorer(cfg.scorer_url)


def _load(cfg: RunConfig) -> tuple[World, PlannerDeps, PlannerConfig]:
    try:
        world = load_world(cfg.world_path)
        template = load_template(cfg.prompt_path)
        cot = load_template(cfg.cot_prompt_path)
        if cfg.k_examples is not None:
            template = truncate_examples(template, cfg.k_examples)
        if cfg.scenario is not None:
            world.scenario(cfg.scenario)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    deps = PlannerDeps(world.skills, make_scorer(cfg), template, world.calibration, cot_template=cot)
    return world, deps, PlannerConfig(max_steps=cfg.max_steps, mode=cfg.mode)


def _scenarios(world: World, cfg: RunConfig) -> dict[str, Scenario]:
    if cfg.success_prob is None:
        return dict(world.scenarios)
    return {k: s.with_success_prob(cfg.success_prob) for k, s in world.scenarios.items()}


def _check_scorer(deps: PlannerDeps) -> None:
    """Fail fast (exit 2) when the scorer cannot be reached."""
    try:
        deps.scorer.score(ScoreRequest("Human: ping\nRobot: 1.", (deps.skills[-1].label,)))
    except ScorerError as exc:
        raise ConfigError(f"scorer unreachable: {exc}") from None


class DecisionLog:
    """JSONL: one line per decision record, one trailer line per episode."""

    def __init__(self, path: Path | None) -> None:
        try:
            self._f: IO[str] | None = open(path, "w", encoding="utf-8") if path else None
        except OSError as exc:
            raise ConfigError(f"cannot open log: {exc}") from None
        self.episode = 0

    def write(self, obj: dict[str, Any]) -> None:
        if self._f:
            self._f.write(json.dumps({"format_version": FORMAT_VERSION, **obj}, sort_keys=True, ensure_ascii=False) + "\n")

    def episode_done(self, r: Rollout, goal_met: bool | None) -> None:
        for rec in r.trace.records:
            self.write({"type": "decision", "episode": self.episode, **rec.to_dict()})
        self.write(
            {
                "type": "trailer",
                "episode": self.episode,
                "instruction": r.trace.instruction.to_dict(),
                "mode": r.trace.mode,
                "labels": list(r.trace.labels),
                "termination": r.trace.termination.value,
                "notes": list(r.trace.notes),
                "step_outcomes": list(r.step_outcomes),
                "final_state": r.final_state.to_dict(),
                "goal_met": goal_met,
                "seed": r.seed,
            }
        )
        self.episode += 1

    def close(self) -> None:
        if self._f:
            self._f.close()
            self._f = None


def read_log(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _matching_case(text: str, scenario: str) -> InstructionCase | None:
    try:
        suite = load_suite(data_path("suite.json"))
    except (OSError, SuiteLoadError):
        return None
    for c in suite:
        if c.instruction.text == text and c.initial_scenario == scenario:
            return c
    return None


def _goal_met(r: Rollout, case: InstructionCase | None) -> bool:
    # without a known goal, a plan that ends with "done" counts as success
    if case is not None:
        return check_goal(r.final_state, case)
    return r.trace.termination is Termination.DONE_TOKEN


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace, out: IO[str]) -> int:
    cfg = _config(args)
    world, deps, pcfg = _load(cfg)
    _check_scorer(deps)
    scen_id = cfg.scenario or world.default_scenario
    scenario = _scenarios(world, cfg)[scen_id]
    instruction = Instruction(args.instruction)
    log = DecisionLog(cfg.log_path)
    try:
        r = run_mode(cfg.mode, instruction, scenario, deps, pcfg, seed=cfg.seed)
    except ScorerError as exc:
        log.close()
        print(f"error: scorer failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    case = _matching_case(instruction.text, scen_id)
    met = _goal_met(r, case)
    log.episode_done(r, met)
    log.close()
    out.write(render_trace(r.trace, cfg.top_k_display))
    out.write(f"goal: {'met' if met else 'not met'}\n")
    return EXIT_OK if met else EXIT_GOAL_UNMET


def cmd_eval(args: argparse.Namespace, out: IO[str]) -> int:
    cfg = _config(args)
    try:
        suite = load_suite(args.suite or data_path("suite.json"))
    except (OSError, SuiteLoadError) as exc:
        print(f"error: cannot load suite: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    world, deps, pcfg = _load(cfg)
    _check_scorer(deps)
    try:
        modes = [PlannerMode.parse(m) for m in (args.modes or cfg.mode.value).split(",")]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ks = [int(k) for k in args.k_values.split(",")] if args.k_values else [cfg.k_examples]
    full = load_template(cfg.prompt_path)
    base = replace(deps, template=full)
    try:
        reports = ablation_matrix(suite, modes, ks, base, _scenarios(world, cfg), cfg.seed, args.repeats, pcfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for rep in reports:
        out.write(format_table(rep))
        out.write("\n")
    if cfg.report_dir is not None:
        cfg.report_dir.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            stem = f"report_{rep.mode}" + ("" if rep.k_examples is None else f"_k{rep.k_examples}")
            (cfg.report_dir / f"{stem}.csv").write_text(rep.to_csv(), encoding="utf-8")
            (cfg.report_dir / f"{stem}.json").write_text(rep.to_json(), encoding="utf-8")
        if len(reports) > 1:
            (cfg.report_dir / "ablation.csv").write_text(reports_csv(reports), encoding="utf-8")
    return EXIT_OK


def cmd_repl(args: argparse.Namespace, out: IO[str], inp: IO[str]) -> int:
    cfg = _config(args)
    world, deps, pcfg = _load(cfg)
    scen_id = cfg.scenario or world.default_scenario
    scenario = _scenarios(world, cfg)[scen_id]
    log = DecisionLog(cfg.log_path)
    state: WorldState = reset(scenario)
    seed = cfg.seed
    try:
        for raw in inp:
            line = raw.strip()
            if not line:
                continue
            if line == ":quit":
                break
            if line == ":reset":
                state = reset(scenario)
                out.write("environment reset\n")
                continue
            if line == ":state":
                out.write(render_state(state))
                continue
            if line.startswith(":seed"):
                try:
                    seed = int(line.split()[1])
                except (IndexError, ValueError):
                    out.write("usage: :seed N\n")
                continue
            if line.startswith(":"):
                out.write(f"unknown command {line}\n")
                continue
            start = reset(scenario) if args.fresh else state
            try:
                r = run_mode(cfg.mode, Instruction(line), scenario, deps, pcfg, seed=seed, initial_state=start)
            except ScorerError as exc:
                out.write(f"error: {exc}\n")
                continue
            state = r.final_state
            log.episode_done(r, None)
            out.write(render_trace(r.trace, cfg.top_k_display))
            out.write(render_state(state))
            seed += 1
    except KeyboardInterrupt:
        pass
    finally:
        log.close()
    return EXIT_OK


def cmd_ksweep(args: argparse.Namespace, out: IO[str]) -> int:
    cfg = _config(args)
    world, deps, pcfg = _load(cfg)
    cases = generate_batch(cfg.seed, world.skills, n=args.n, n_distractors=args.distractors)
    scorer = oracle_scorer(cases) if cfg.scorer == "oracle" else deps.scorer
    full = load_template(cfg.prompt_path)
    ks = [int(k) for k in args.k_values.split(",")] if args.k_values else list(K_VALUES)
    ks = [k for k in ks if k <= len(full.examples)]
    text = k_sweep_csv(k_sweep(cases, world.skills, scorer, full, ks, pcfg))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    out.write(text)
    return EXIT_OK


def make_handler(scorer: TableScorer) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        def _reply(self, code: int, body: dict[str, Any]) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_POST(self) -> None:  # noqa: N802
            try:
                n = int(self.headers.get("Content-Length", "0"))
                req = json.loads(self.rfile.read(n) or b"{}")
                if self.path == "/score":
                    resp = scorer.score(ScoreRequest(req["prompt"], tuple(req["candidates"])))
                    self._reply(200, {"logprobs": list(resp.logprobs)})
                elif self.path == "/generate":
                    self._reply(200, {"text": scorer.generate(req["prompt"], int(req.get("max_tokens", 256)))})
                else:
                    self._reply(404, {"error": "not found"})
            except (KeyError, ValueError, TypeError) as exc:
                self._reply(400, {"error": str(exc)})

        def log_message(self, *args: Any) -> None:
            pass

    return Handler


def serve(table: Path, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), make_handler(TableScorer.from_file(table)))


def cmd_serve(args: argparse.Namespace, out: IO[str]) -> int:
    table = args.table or data_path("oracle_table.json")
    if not Path(table).exists():
        raise ConfigError(f"no such file: {table}")
    server = serve(Path(table), args.host, args.port)
    out.write(f"serving {table} on http://{server.server_address[0]}:{server.server_address[1]}\n")
    out.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saycan", description="Grounded skill planning with language-model scoring.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="plan and execute one instruction")
    p.add_argument("instruction")
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate an instruction suite")
    _add_common(p)
    p.add_argument("--suite", type=Path, default=None)
    p.add_argument("--modes", default=None, help="comma-separated planner modes")
    p.add_argument("--k-values", default=None, help="comma-separated prompt sizes")
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("repl", help="interactive session on a persistent world")
    _add_common(p)
    p.add_argument("--fresh", action="store_true", help="reset the world before every instruction")

    p = sub.add_parser("ksweep", help="planning rate against prompt size on generated cases (CSV)")
    _add_common(p)
    p.add_argument("--n", type=int, default=50, help="number of generated cases")
    p.add_argument("--distractors", type=int, default=3)
    p.add_argument("--k-values", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("serve", help="serve a scorer table over HTTP")
    p.add_argument("--table", type=Path, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    return ap


def main(argv: Sequence[str] | None = None, out: IO[str] | None = None, inp: IO[str] | None = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args, out)
        if args.command == "eval":
            return cmd_eval(args, out)
        if args.command == "repl":
            return cmd_repl(args, out, inp or sys.stdin)
        if args.command == "ksweep":
            return cmd_ksweep(args, out)
        return cmd_serve(args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
