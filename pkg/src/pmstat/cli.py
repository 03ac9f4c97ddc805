"""Command-line entry point: ``pmstat run | list | validate``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .scenarios import (ConfigError, builtin_config, list_scenarios, load_config, parse_config,
                        run)
from .seqlab.indicators import BudgetExceeded

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
OUT_ENV = "PMSTAT_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmstat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write trajectories")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON scenario config")
    src.add_argument("--scenario", help="name of a built-in scenario")
    p_run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./pmstat-out)")
    p_run.add_argument("--mode", choices=("exact", "sampled", "both"))
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--budget", type=int)
    p_run.add_argument("--samples", type=int)
    p_run.add_argument("--workers", type=int)

    sub.add_parser("list", help="list built-in scenarios")

    p_val = sub.add_parser("validate", help="validate a config without running it")
    src = p_val.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--scenario")
    return parser


def _load(args) -> dict:
    return builtin_config(args.scenario) if args.scenario else load_config(args.config)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, cfg in list_scenarios().items():
            kinds = ", ".join(s["kind"] for s in cfg.get("statistics", []))
            print(f"{name}\t{cfg['sequence']['name']}\t{kinds}")
        return EXIT_OK
    try:
        raw = _load(args)
        if args.command == "validate":
            cfg = parse_config(raw)
            print(f"ok: {cfg.name} ({len(cfg.statistics)} statistics, {len(cfg.windows)} windows)")
            return EXIT_OK
        for key in ("mode", "seed", "budget", "samples", "workers"):
            val = getattr(args, key)
            if val is not None:
                raw[key] = val
        cfg = parse_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or os.environ.get(OUT_ENV) or "pmstat-out"
    try:
        manifest = run(cfg, out)
    except BudgetExceeded as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    breaches = [c for c in manifest.cross_check if c["breach_3sigma"]]
    print(json.dumps({"scenario": cfg.name, "out": str(out), "files": sorted(manifest.outputs),
                      "cross_check_breaches": len(breaches)}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
