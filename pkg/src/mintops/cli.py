"""Command-line interface: run one episode, drive benchmarks, generate
scenario suites, or host a live operator session.

Every flag can be preset through the environment as MINTOPS_<FLAG> (uppercase,
dashes to underscores); explicit flags win over the environment.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .elicitation import ConsoleOperator, ScriptedOracle
from .generate import GenParams, generate_scenario
from .mint import Config, MintError
from .runner import Policy, run_benchmark, run_episode, write_report
from .suites import load_suite_dir, make_suite_a, make_suite_b, make_suite_c
from .world import ScenarioError, dump_scenario, load_scenario


class CliError(Exception):
    """Bad arguments or inputs; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); keep 2 for I/O only
        raise CliError(message)


def _env(flag: str, fallback=None):
    return os.environ.get("MINTOPS_" + flag.upper().replace("-", "_"), fallback)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delta-c", type=float, default=float(_env("delta-c", 2.0)))
    parser.add_argument("--delta-d", type=float, default=float(_env("delta-d", 2.0)))
    parser.add_argument("--h-min", type=float, default=float(_env("h-min", 0.5)))
    parser.add_argument("--eps-ig", type=float, default=float(_env("eps-ig", 1e-6)))
    parser.add_argument("--max-queries", type=int, default=int(_env("max-queries", 5)))
    parser.add_argument("--max-branch-gaps", type=int, default=int(_env("max-branch-gaps", 6)))


def _config_from(args: argparse.Namespace) -> Config:
    return Config(
        delta_c=args.delta_c,
        delta_d=args.delta_d,
        h_min=args.h_min,
        eps_ig=args.eps_ig,
        max_queries=args.max_queries,
        max_branch_gaps=args.max_branch_gaps,
    )


def _parse_gen_params(spec: str) -> tuple[dict, GenParams]:
    raw: dict[str, str] = {}
    if spec:
        for pair in spec.split(","):
            if not pair:
                continue
            if "=" not in pair:
                raise CliError(f"bad params entry {pair!r}; expected key=value")
            key, value = pair.split("=", 1)
            raw[key.strip()] = value.strip()
    known = {
        "width": int,
        "height": int,
        "regions": int,
        "off_path": float,
        "candidates": int,
        "steps": int,
        "prior": float,
        "detour": lambda v: v.lower() not in ("0", "false", "no"),
        "min_gap": int,
        "budget_factor": int,
    }
    rename = {
        "off_path": "off_path_fraction",
        "candidates": "goal_candidates",
        "steps": "goal_steps",
        "prior": "region_prior",
        "min_gap": "min_cost_gap",
    }
    kwargs = {}
    for key, value in raw.items():
        if key in ("preset", "count"):
            continue
        if key not in known:
            raise CliError(f"unknown generation param {key!r}")
        kwargs[rename.get(key, key)] = known[key](value)
    return raw, GenParams(**kwargs)


def _load_suite(spec: str, seed: int):
    if spec.startswith("gen:"):
        raw, params = _parse_gen_params(spec.removeprefix("gen:"))
        preset = raw.get("preset", "").lower()
        if preset == "a":
            return make_suite_a(seed)
        if preset == "b":
            return make_suite_b(seed)
        if preset == "c":
            return make_suite_c(seed)
        count = int(raw.get("count", 20))
        return [(f"gen-{i:03d}", generate_scenario(seed + i, params)) for i in range(count)]
    if not os.path.isdir(spec):
        raise CliError(f"suite path {spec!r} is not a directory")
    suite = load_suite_dir(spec)
    if not suite:
        raise CliError(f"suite directory {spec!r} holds no scenario documents")
    return suite


def _cmd_run(args: argparse.Namespace) -> int:
    with open(args.scenario, encoding="utf-8") as handle:
        scenario = load_scenario(handle.read())
    policy = Policy(args.policy)
    operator = ScriptedOracle(scenario) if args.operator == "oracle" else ConsoleOperator()
    result = run_episode(scenario, policy, operator, _config_from(args))
    doc = {
        "policy": policy.value,
        "success": result.success,
        "queries_asked": result.queries_asked,
        "executed_cost": None if math.isinf(result.executed_cost) else result.executed_cost,
        "failure_reason": None if result.failure_reason is None else result.failure_reason.value,
        "asked_query_ids": list(result.asked_query_ids),
    }
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    suite = _load_suite(args.suite, args.seed)
    policies = [Policy(p.strip()) for p in args.policies.split(",") if p.strip()]
    if not policies:
        raise CliError("--policies must name at least one policy")
    report = run_benchmark(suite, policies, _config_from(args), args.seed)
    if args.csv:
        write_report(report, "csv", args.csv)
    if args.json:
        write_report(report, "json", args.json)
    for policy, summary in sorted(report.summary.items()):
        avg_cost = "n/a" if summary.avg_cost is None else f"{summary.avg_cost:.2f}"
        sys.stdout.write(
            f"{policy}: success_rate={summary.success_rate:.3f} "
            f"avg_queries={summary.avg_queries:.3f} avg_cost={avg_cost}\n"
        )
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    raw, params = _parse_gen_params(args.params)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        scenario = generate_scenario(args.seed + i, params)
        with open(os.path.join(args.out, f"scenario-{i:03d}.json"), "w", encoding="utf-8") as handle:
            handle.write(dump_scenario(scenario))
    sys.stdout.write(f"wrote {args.count} scenarios to {args.out}\n")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve  # imported lazily; pulls in websockets

    with open(args.scenario, encoding="utf-8") as handle:
        scenario = load_scenario(handle.read())
    serve(scenario, _config_from(args), args.port, host=args.host, sessions=args.sessions)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mintops", description="Active knowledge-gap elicitation planner")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one episode")
    run.add_argument("--scenario", required=True)
    run.add_argument(
        "--policy",
        default=_env("policy", "mint"),
        choices=[p.value for p in Policy],
    )
    run.add_argument("--operator", default=_env("operator", "oracle"), choices=["oracle", "interactive"])
    run.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    run.add_argument("--out", default=_env("out"))
    _add_config_flags(run)
    run.set_defaults(handler=_cmd_run)

    bench = commands.add_parser("bench", help="run a benchmark suite")
    bench.add_argument("--suite", required=True, help="scenario directory or gen:<k=v,...> (preset=a|b|c)")
    bench.add_argument("--policies", default=_env("policies", ",".join(p.value for p in Policy)))
    bench.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    bench.add_argument("--csv", default=_env("csv"))
    bench.add_argument("--json", default=_env("json"))
    _add_config_flags(bench)
    bench.set_defaults(handler=_cmd_bench)

    gen = commands.add_parser("gen", help="generate a scenario suite")
    gen.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    gen.add_argument("--count", type=int, default=int(_env("count", 20)))
    gen.add_argument("--params", default=_env("params", ""))
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=_cmd_gen)

    serve_cmd = commands.add_parser("serve", help="host a live operator session")
    serve_cmd.add_argument("--scenario", required=True)
    serve_cmd.add_argument("--port", type=int, default=int(_env("port", 8765)))
    serve_cmd.add_argument("--host", default=_env("host", "127.0.0.1"))
    serve_cmd.add_argument("--sessions", type=int, default=int(_env("sessions", 1)))
    _add_config_flags(serve_cmd)
    serve_cmd.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except (CliError, ScenarioError, MintError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
