"""Command-line interface.

Subcommands:
  generate   Draw a randomized scenario from a config and write it out.
  solve      Run one algorithm (ilp / gco / nfco / dco) on a scenario.
  export-lp  Write the binary linear model of a scenario in LP format.
  sweep      Run a parameter sweep from a sweep-spec file.
  compare    Run several algorithms / decision files on one scenario.

All inputs and outputs are JSON except the LP export. Failures print a
machine-readable JSON error to stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments, serialize
from .costs import check_feasibility, dco_normalizers, evaluate
from .ilp import build_model, export_lp
from .model import GenerationConfig, generate_scenario, validate_scenario
from .solver import SolveLimits, solve_scenario
from . import heuristics


def _read_config(path: str | None) -> GenerationConfig:
    if path is None:
        return GenerationConfig()
    return serialize.config_from_json(Path(path).read_text(encoding="utf-8"))


def _read_scenario(path: str):
    scenario = serialize.scenario_from_json(Path(path).read_text(encoding="utf-8"))
    problems = validate_scenario(scenario)
    if problems:
        raise ValueError("invalid scenario: " + "; ".join(problems))
    return scenario


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    scenario = generate_scenario(config, seed)
    text = serialize.scenario_to_json(scenario)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    normalizers = dco_normalizers(scenario)
    if args.algo == "ilp":
        limits = SolveLimits(max_nodes=args.node_limit, time_limit_s=args.time_limit)
        result = solve_scenario(scenario, limits)
        decision = result.decision
        payload = result.to_dict()
    else:
        decision = getattr(heuristics, args.algo)(scenario)
        payload = {"status": "ok", "decision": serialize.decision_to_dict(decision)}
    breakdown = evaluate(scenario, decision, normalizers)
    payload["algorithm"] = args.algo
    payload["normalized_total"] = breakdown.normalized_total
    payload["normalized_per_terminal"] = breakdown.normalized_per_terminal
    payload["feasibility"] = check_feasibility(scenario, decision).to_dict()
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_export_lp(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    text = export_lp(build_model(scenario))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = experiments.spec_from_json(Path(args.spec).read_text(encoding="utf-8"))
    table = experiments.run_sweep(spec)
    paths = experiments.emit_results(table, args.out_dir, figures=not args.no_figures)
    sys.stdout.write(json.dumps({"written": [str(p) for p in paths]}, indent=2) + "\n")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    items = []
    for spec in args.algos:
        if spec.startswith("file:"):
            path = spec[len("file:"):]
            decision = serialize.decision_from_json(Path(path).read_text(encoding="utf-8"))
            items.append((spec, decision))
        else:
            items.append(spec)
    limits = SolveLimits(max_nodes=args.node_limit, time_limit_s=args.time_limit)
    report = experiments.compare_single(scenario, items, limits)
    sys.stdout.write(report.render_text())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satedge", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a randomized scenario")
    p.add_argument("--config", help="generation config JSON (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="RNG seed (defaults to the config's seed field)")
    p.add_argument("--out", help="output scenario path (stdout when omitted)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="run one algorithm on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--algo", required=True, choices=["ilp", "gco", "nfco", "dco"])
    p.add_argument("--out", help="output result path (stdout when omitted)")
    p.add_argument("--node-limit", type=int, default=SolveLimits().max_nodes)
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("export-lp", help="export the binary linear model in LP format")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="output .lp path (stdout when omitted)")
    p.set_defaults(func=_cmd_export_lp)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--spec", required=True, help="sweep spec JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="compare algorithms / decision files on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--algos", nargs="+", required=True, help="algorithm names or file:<decision.json>")
    p.add_argument("--out", help="optional JSON report path")
    p.add_argument("--node-limit", type=int, default=SolveLimits().max_nodes)
    p.add_argument("--time-limit", type=float, default=None)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a machine-readable error contract
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
