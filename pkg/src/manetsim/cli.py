"""Command-line experiment runner.

Exit codes: 0 success, 1 configuration error, 2 run failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from dataclasses import replace

from .config import ConfigError, ScenarioConfig, load_scenario, validate
from .experiment import (
    compare,
    default_seeds,
    run_experiment,
    rows_to_csv_text,
    sweep,
    write_csv,
)

DEFAULT_LAMBDA_VALUES = "0,0.3,0.6,0.9,1.0,1.1"
DEFAULT_NODE_VALUES = "5,10,15,20,25"
DEFAULT_STREAM_VALUES = "1,2,3"


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="scenario file; defaults apply when omitted")
    sub.add_argument("--seed", type=int, help="single master seed")
    sub.add_argument("--seeds", help="comma-separated master seeds (overrides --seed)")
    sub.add_argument("--out", default="-", help="output CSV path; '-' writes to stdout")
    sub.add_argument("--protocol", choices=("batman", "golsr", "batmobile"))
    sub.add_argument("--balancing", choices=("on", "off"))
    sub.add_argument("--trace-pdr", metavar="DIR",
                     help="also write one windowed-PDR trace CSV per run into DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Deterministic MANET simulator with passive load balancing",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("run", "simulate one scenario over a seed batch"),
        ("sweep-lambda", "sweep the path-quality likelihood factor"),
        ("sweep-nodes", "sweep the node count"),
        ("sweep-streams", "sweep the parallel stream count"),
        ("compare", "plain vs balanced on identical seeds"),
    ):
        cmd = sub.add_parser(name, help=doc)
        _add_common(cmd)
        if name.startswith("sweep-"):
            cmd.add_argument("--values", help="comma-separated sweep values")
    return parser


def _resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    config = load_scenario(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.protocol:
        overrides["protocol"] = args.protocol
    if args.balancing:
        overrides["balancing"] = args.balancing == "on"
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = replace(config, **overrides)
        validate(config)
    return config


def _resolve_seeds(args: argparse.Namespace, config: ScenarioConfig) -> list[int]:
    if args.seeds is not None:
        text = args.seeds.strip()
        return [int(part) for part in text.split(",") if part.strip()] if text else []
    if args.seed is not None:
        return [args.seed]
    return default_seeds(config)


def _parse_values(args: argparse.Namespace, fallback: str) -> list[float]:
    text = args.values if args.values else fallback
    return [float(part) for part in text.split(",") if part.strip()]


def _emit(rows, args: argparse.Namespace) -> None:
    if args.out == "-":
        sys.stdout.write(rows_to_csv_text(rows))
    else:
        write_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        seeds = _resolve_seeds(args, config)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "run":
            rows = run_experiment(config, seeds, args.trace_pdr)
        elif args.command == "sweep-lambda":
            rows = sweep(config, "lambda", _parse_values(args, DEFAULT_LAMBDA_VALUES),
                         seeds, args.trace_pdr)
        elif args.command == "sweep-nodes":
            rows = sweep(config, "nodes", _parse_values(args, DEFAULT_NODE_VALUES),
                         seeds, args.trace_pdr)
        elif args.command == "sweep-streams":
            rows = sweep(config, "streams", _parse_values(args, DEFAULT_STREAM_VALUES),
                         seeds, args.trace_pdr)
        else:
            rows = compare(config, seeds)
            _print_compare_summary(rows)
        _emit(rows, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


def _print_compare_summary(rows) -> None:
    plain = {row.seed: row.overall_pdr for row in rows if not row.balanced}
    balanced = {row.seed: row.overall_pdr for row in rows if row.balanced}
    if not plain:
        return
    seeds = sorted(plain)
    mean_plain = sum(plain.values()) / len(plain)
    mean_balanced = sum(balanced.values()) / len(balanced)
    wins = sum(1 for s in seeds if balanced[s] > plain[s])
    print(
        f"plain mean PDR {mean_plain:.4f} | balanced mean PDR {mean_balanced:.4f} | "
        f"balanced better in {wins}/{len(seeds)} seeds",
        file=sys.stderr,
    )


if __name__ == "__main__":
    raise SystemExit(main())
