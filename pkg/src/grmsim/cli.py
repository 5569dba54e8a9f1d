"""Command line entry points.

    grmsim generate --config study.json --out runs/study
    grmsim fit      --out runs/study --threads 4
    grmsim evaluate --out runs/study
    grmsim report   --out runs/study
    grmsim run      --config study.json --out runs/study --threads 4

`run` chains all four stages. --reps and --seed override the config for
quick desk-scale runs; --force allows overwriting a stage's existing
outputs. Exit codes: 0 success, 2 configuration or usage errors
(including stages invoked out of order), 1 estimation failures.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, GrmsimError, UsageError
from .pipeline import (
    evaluate_stage,
    fit_stage,
    generate_stage,
    load_config,
    report_stage,
    run_pipeline,
)

_STAGES = {
    "generate": generate_stage,
    "fit": fit_stage,
    "evaluate": evaluate_stage,
    "report": report_stage,
    "run": run_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grmsim",
        description="Monte Carlo item-parameter recovery for the "
        "multidimensional graded response model.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for name, help_text in [
        ("generate", "draw parameters, abilities, and response datasets"),
        ("fit", "calibrate every generated dataset by EM"),
        ("evaluate", "aggregate bias/RMSE into results.csv"),
        ("report", "render bias.svg and rmse.svg from results.csv"),
        ("run", "all four stages in order"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument(
            "--out",
            metavar="DIR",
            default="grmsim-run",
            help="output directory (default: %(default)s)",
        )
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker processes for fitting (default: %(default)s)",
        )
        p.add_argument(
            "--reps", type=int, default=None, help="override replications per condition"
        )
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument(
            "--force",
            action="store_true",
            help="overwrite existing stage outputs",
        )
        p.add_argument(
            "--save-abilities",
            action="store_true",
            help="also persist generated abilities (generate/run only)",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            out_dir=args.out,
            threads=args.threads,
            reps=args.reps,
            seed=args.seed,
            force=args.force,
            save_abilities=args.save_abilities,
        )
        _STAGES[args.stage](cfg)
    except (ConfigError, UsageError) as exc:
        print(f"grmsim {args.stage}: error: {exc}", file=sys.stderr)
        return 2
    except GrmsimError as exc:
        print(f"grmsim {args.stage}: error: {exc}", file=sys.stderr)
        return 1
    return 0
