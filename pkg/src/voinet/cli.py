"""Command-line front end.

    voinet pendulum --out scenario.json
    voinet simulate --scenario scenario.json --runs 10 --seed 0 --out-dir results/
    voinet compare --scenario scenario.json --baseline periodic:1 --runs 500
    voinet calibrate --scenario scenario.json --hop 1 --target-rate 19 --low 1 --high 200

VOINET_SEED in the environment overrides --seed. Failures exit nonzero with a
machine-readable error category on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .scheduling import calibrate_lambda

EXIT_CODES = {"invalid-config": 2, "io-error": 3, "internal": 4}


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES.get(category, 4)


def _resolve_seed(args) -> int:
    env = os.environ.get("VOINET_SEED")
    if env is not None:
        return int(env)
    return args.seed


def _load_scenario(args) -> harness.ScenarioConfig:
    config = harness.load_scenario(args.scenario)
    if getattr(args, "policy", None):
        config = config.with_policies([p.strip() for p in args.policy.split(",")])
    if getattr(args, "input_mode", None):
        config = config.with_input_mode(args.input_mode)
    problems = harness.validate_scenario(config)
    if problems:
        raise ValueError("; ".join(problems))
    return config


def cmd_simulate(args) -> int:
    config = _load_scenario(args)
    seed = _resolve_seed(args)
    os.makedirs(args.out_dir, exist_ok=True)
    metrics = harness.monte_carlo(config, runs=args.runs, base_seed=seed)
    harness.export_summary(metrics, os.path.join(args.out_dir, "summary.json"))
    if args.export_traces != "none":
        seeds = metrics.seeds if args.export_traces == "all" else metrics.seeds[:1]
        ctx = None
        for s in seeds:
            trace = harness.run_episode(config, s)
            harness.export_trace(trace, os.path.join(args.out_dir, f"trace_seed{s}.csv"))
    print(json.dumps(metrics.to_dict(), indent=2))
    return 0


def cmd_compare(args) -> int:
    config = _load_scenario(args)
    seed = _resolve_seed(args)
    report = harness.compare_policies(
        config, config.policies, args.baseline, runs=args.runs, base_seed=seed
    )
    payload = report.to_dict()
    payload["policy_a"] = [str(p) for p in config.policies]
    payload["policy_b"] = args.baseline
    print(json.dumps(payload, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    return 0


def cmd_calibrate(args) -> int:
    config = _load_scenario(args)
    seed = _resolve_seed(args)
    result = calibrate_lambda(
        config, args.hop, args.target_rate, args.low, args.high,
        runs=args.runs, base_seed=seed,
    )
    print(json.dumps({
        "lambda": result.lam,
        "achieved_rate": result.achieved_rate,
        "converged": result.converged,
        "iterations": result.iterations,
        "bracket": [result.low, result.high],
        "message": result.message,
    }, indent=2))
    return 0


def cmd_pendulum(args) -> int:
    config = harness.pendulum_scenario(input_mode=args.input_mode)
    harness.save_scenario(config, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voinet", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo simulation of a scenario")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--runs", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--policy", help="per-hop override, e.g. 'dvoi,periodic:1'")
    sim.add_argument("--input-mode", choices=("oracle", "estimated"))
    sim.add_argument("--out-dir", default="voinet-out")
    sim.add_argument("--export-traces", choices=("none", "first", "all"), default="first")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="paired comparison against a baseline policy")
    cmp_.add_argument("--scenario", required=True)
    cmp_.add_argument("--baseline", default="periodic:1")
    cmp_.add_argument("--runs", type=int, default=100)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--policy", help="per-hop override for the candidate policy")
    cmp_.add_argument("--input-mode", choices=("oracle", "estimated"))
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=cmd_compare)

    cal = sub.add_parser("calibrate", help="bisect lambda[hop] toward a target rate")
    cal.add_argument("--scenario", required=True)
    cal.add_argument("--hop", type=int, required=True)
    cal.add_argument("--target-rate", type=float, required=True)
    cal.add_argument("--low", type=float, default=0.0)
    cal.add_argument("--high", type=float, default=1000.0)
    cal.add_argument("--runs", type=int, default=50)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--policy", help=argparse.SUPPRESS)
    cal.add_argument("--input-mode", choices=("oracle", "estimated"))
    cal.set_defaults(func=cmd_calibrate)

    pen = sub.add_parser("pendulum", help="emit the built-in pendulum scenario file")
    pen.add_argument("--out", default="pendulum.json")
    pen.add_argument("--input-mode", choices=("oracle", "estimated"), default="oracle")
    pen.set_defaults(func=cmd_pendulum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail("io-error", str(exc))
    except ValueError as exc:
        return _fail("invalid-config", str(exc))
    except Exception as exc:  # noqa: BLE001 - surface anything else as internal
        return _fail("internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
