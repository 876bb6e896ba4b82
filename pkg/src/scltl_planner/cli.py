"""Command line entry point: compile, plan, run, bench."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bench import BenchScenario, candidates_for, map_generate, run_benchmark
from .dfa import StateExplosionError, compile_formula
from .executor import RunConfig, run_episode
from .formula import FormulaError, parse
from .mapfile import MapFileError, load_map, load_scenario
from .planner import ConvergenceError, PlannerConfig, is_satisfying, min_nonterminal_value, value_iteration
from .product import build
from .render import render_trace

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4

OUTCOME_EXIT = {"accepted": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "violated": EXIT_INFEASIBLE,
                "step_cap_exceeded": EXIT_LIMIT}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.payload = {"error": kind, "message": message, **extra}


def _write_json(path: str | None, data) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _alphabet(text: str) -> list[str]:
    return [a.strip() for a in text.split(",") if a.strip()]


def _planner_config(args, defaults: dict | None = None, beta: float | None = None) -> PlannerConfig:
    d = defaults or {}
    gamma = args.gamma if getattr(args, "gamma", None) is not None else d.get("gamma", 0.99)
    eps = args.eps if getattr(args, "eps", None) is not None else d.get("eps", 0.01)
    b = args.beta if getattr(args, "beta", None) is not None else d.get("beta", beta if beta is not None else 1.0)
    try:
        return PlannerConfig(gamma=gamma, beta=b, eps=eps)
    except ValueError as err:
        raise CliError(EXIT_SCHEMA, "config", str(err)) from None


def cmd_compile(args) -> int:
    alphabet = _alphabet(args.alphabet)
    dfa = compile_formula(parse(args.formula, alphabet), alphabet)
    data = dfa.to_json()
    if args.dot:
        Path(args.dot).write_text(dfa.to_dot(), encoding="utf-8")
    if args.json or not args.dot:
        _write_json(args.json, data)
    return EXIT_OK


def cmd_plan(args) -> int:
    bundle = load_map(args.map)
    m = bundle.mdp
    cfg = _planner_config(args, beta=m.beta)
    dfa = compile_formula(parse(args.formula, m.alphabet), m.alphabet)
    product = build(m, bundle.belief, dfa)
    plan = value_iteration(product, cfg)
    env = bundle.environment
    first = env.truth[bundle.start] if env is not None else bundle.belief.mode(bundle.start)
    start = product.encode(bundle.start, dfa.step(dfa.initial, first))
    satisfying = is_satisfying(plan, product, cfg, start=start)
    _write_json(
        args.out,
        {
            "values": plan.values,
            "policy": [None if a is None else m.actions[a] for a in plan.policy],
            "min_nonterminal_value": min_nonterminal_value(plan.values, product),
            "satisfying": satisfying,
            "sweeps": plan.sweeps,
            "residual": plan.residual,
        },
    )
    return EXIT_OK if satisfying else EXIT_INFEASIBLE


def cmd_run(args) -> int:
    bundle = load_map(args.map)
    m = bundle.mdp
    cfg = _planner_config(args, beta=m.beta)
    dfa = compile_formula(parse(args.formula, m.alphabet), m.alphabet)
    env = bundle.environment
    if env is None:
        # no ground truth in the map: sample one from the belief
        required = [(bit, candidates_for(bundle.belief, bit)) for bit in range(m.num_letters.bit_length() - 1)]
        required = [(bit, c) for bit, c in required if c]
        env = map_generate(bundle.belief, required, np.random.default_rng(args.seed), args.h)
    try:
        rc = RunConfig(step_cap=args.step_cap, replan=args.replan, h=args.h, seed=args.seed)
    except ValueError as err:
        raise CliError(EXIT_SCHEMA, "config", str(err)) from None
    trace = run_episode(m, bundle.belief, env, dfa, cfg, rc, bundle.start)
    _write_json(args.trace, trace.to_json(m))
    if args.svg:
        Path(args.svg).write_text(render_trace(trace, bundle), encoding="utf-8")
    return OUTCOME_EXIT.get(trace.outcome, EXIT_LIMIT)


def cmd_bench(args) -> int:
    sc = load_scenario(args.scenario)
    cfg = _planner_config(args, sc.planner, beta=sc.map.mdp.beta)
    run = sc.run
    bench = sc.bench
    strategies = tuple(bench.get("strategies", ("trigger", "never")))
    required = tuple(bench["required"]) if "required" in bench else None
    if required is not None:
        unknown = [r for r in required if r not in sc.map.mdp.alphabet]
        if unknown:
            raise CliError(EXIT_SCHEMA, "schema", f"unknown observations {unknown}", pointer="/bench/required")
    scenario = BenchScenario(
        mdp=sc.map.mdp,
        belief=sc.map.belief,
        formula=sc.formula,
        start=sc.map.start,
        worlds=bench.get("worlds", 200),
        seed=args.seed,
        strategies=strategies,
        required=required,
        h=run.get("h", 1),
        step_cap=run.get("step_cap"),
    )
    report = run_benchmark(scenario, cfg)
    _write_json(args.out, report.to_json())
    if args.csv:
        rows = report.csv_rows()
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scltl-plan", description="Temporal-logic planning on probabilistic maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a formula to a total DFA")
    p.add_argument("--formula", required=True)
    p.add_argument("--alphabet", required=True, help="comma-separated observation names")
    p.add_argument("--dot", help="write Graphviz output here")
    p.add_argument("--json", help="write JSON here (stdout if neither --json nor --dot)")
    p.set_defaults(func=cmd_compile)

    def planner_flags(q):
        q.add_argument("--gamma", type=float)
        q.add_argument("--eps", type=float)
        q.add_argument("--beta", type=float)

    p = sub.add_parser("plan", help="compute values and a policy for the initial belief")
    p.add_argument("--map", required=True)
    p.add_argument("--formula", required=True)
    planner_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="simulate one episode")
    p.add_argument("--map", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replan", default="trigger", choices=["trigger", "every", "every_step", "never"])
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--step-cap", type=int)
    planner_flags(p)
    p.add_argument("--trace")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="Monte Carlo comparison of replanning strategies")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--csv")
    planner_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            sys.stderr.write(json.dumps({"error": "usage", "message": "invalid command line"}) + "\n")
            return EXIT_SCHEMA
        return EXIT_OK
    try:
        return args.func(args)
    except CliError as err:
        payload, code = err.payload, err.code
    except MapFileError as err:
        payload, code = {"error": "schema", "message": str(err), "pointer": err.pointer}, EXIT_SCHEMA
    except FormulaError as err:
        payload = {"error": "formula", "kind": err.kind, "message": str(err), "position": err.position}
        code = EXIT_SCHEMA
    except ConvergenceError as err:
        payload = {"error": "convergence", "message": str(err), "sweeps": err.sweeps}
        code = EXIT_LIMIT
    except StateExplosionError as err:
        payload, code = {"error": "state_explosion", "message": str(err)}, EXIT_LIMIT
    except OSError as err:
        payload, code = {"error": "io", "message": str(err)}, EXIT_SCHEMA
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
