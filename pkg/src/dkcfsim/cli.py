"""Command-line entry point.

Subcommands:
  run       execute one simulation and write its logs and report
  sweep     execute the config's Monte Carlo grid
  compare   diff the mean statistics of two aggregate reports
  validate  check a config file and list every violation

Exit codes: 0 success, 1 invalid config or usage, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import config_from_dict, load_config
from .errors import (
    ConfigValidationError,
    DegenerateGeometryError,
    NumericalDegeneracyError,
)
from .pipeline import format_run_report, run_experiment
from .sweep import (
    compare_aggregates,
    format_compare_table,
    format_aggregate_table,
    run_sweep,
)


def _apply_overrides(config_path: str, args):
    config = load_config(config_path)
    doc = None
    if getattr(args, "seed", None) is not None:
        doc = dict(config.resolved) if doc is None else doc
        doc["world"] = dict(doc["world"])
        doc["world"]["rng_seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        doc = dict(config.resolved) if doc is None else doc
        doc["consensus"] = dict(doc["consensus"])
        doc["consensus"]["mode"] = args.mode
    if doc is not None:
        if config.sweep is not None and "sweep" in config.resolved:
            doc["sweep"] = config.resolved["sweep"]
        config = config_from_dict(doc)
    if getattr(args, "output_dir", None) is not None:
        config.output_dir = args.output_dir
    return config


def _cmd_run(args) -> int:
    config = _apply_overrides(args.config, args)
    out = config.output_dir if config.output_dir is not None else "out"
    report = run_experiment(config, output_dir=out)
    print(format_run_report(report))
    print(f"wrote run outputs to {out}")
    return 0


def _cmd_sweep(args) -> int:
    config = _apply_overrides(args.config, args)
    out = config.output_dir if config.output_dir is not None else "out"
    aggregate = run_sweep(config, output_dir=out, workers=args.workers)
    print(format_aggregate_table(aggregate))
    print(f"wrote sweep outputs to {out}")
    return 0


def _cmd_compare(args) -> int:
    with open(args.report_a, "r", encoding="utf-8") as fh:
        a = json.load(fh)
    with open(args.report_b, "r", encoding="utf-8") as fh:
        b = json.load(fh)
    deltas = compare_aggregates(a, b)
    print(format_compare_table(deltas))
    return 0


def _cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: OK")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dkcfsim",
        description="Deterministic multi-robot tracking simulator with "
        "consensus fusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override rng_seed")
        p.add_argument(
            "--output-dir", default=None, help="override the output directory"
        )
        p.add_argument(
            "--mode",
            choices=["standard", "adaptive"],
            default=None,
            help="override the consensus mode",
        )

    p_run = sub.add_parser("run", help="execute a single simulation")
    add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="execute the config's sweep grid")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--workers", type=int, default=1, help="process-pool size (1 = in-process)"
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare", help="diff two aggregate reports")
    p_cmp.add_argument("report_a")
    p_cmp.add_argument("report_b")
    p_cmp.set_defaults(func=_cmd_compare)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigValidationError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (NumericalDegeneracyError, DegenerateGeometryError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
