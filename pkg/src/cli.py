#!/usr/bin/env python3
"""CLI entry point for grounded-ranking experiments."""
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .evaluation.report import report_to_text
from .experiment import ExperimentConfig, load_experiment
from .pipeline import ExperimentRunner, average_report_files
from .utils.config import config
from .utils.errors import ConfigError, GroundedRankingError, NumericalError
from .utils.logging import setup_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grounded-ranking",
        description="Train and evaluate multilingual image–sentence ranking models.",
    )
    parser.add_argument("--log-level", default=None, help="Override the configured log level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", type=Path, required=config_required, help="Experiment config (JSON)")
        p.add_argument("--seed", type=int, action="append", default=None,
                       help="Replace the configured seeds (repeatable)")
        p.add_argument("--out", type=Path, default=None, help="Replace the configured output directory")

    add_common(sub.add_parser("synth", help="Generate synthetic corpora and a starter config"),
               config_required=False)
    add_common(sub.add_parser("train", help="Train with early stopping and report on the test split"))

    p = sub.add_parser("eval", help="Evaluate a checkpoint on the test corpora")
    add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)

    p = sub.add_parser("pseudopairs", help="Generate pseudopairs (and optionally retrain)")
    add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--cycle", action="store_true", help="Retrain on the augmented data")
    p.add_argument("--reference", type=Path, default=None, help="Pair file of another run for stability stats")

    add_common(sub.add_parser("ingest-translations", help="Attach translated captions to corpora"))
    add_common(sub.add_parser("compare-losses", help="Max- vs sum-violation over all seeds"))

    p = sub.add_parser("report", help="Average report JSON files and print the table")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("--out", type=Path, default=None, help="Write the averaged report here")
    return parser


def _experiment(args: argparse.Namespace, check_paths: bool = True) -> ExperimentConfig:
    if args.config is None:
        experiment = ExperimentConfig()
        if args.seed:
            experiment = experiment.model_copy(update={"seeds": args.seed})
        if args.out:
            experiment = experiment.model_copy(update={"output_dir": args.out})
        return experiment
    return load_experiment(args.config, seeds=args.seed, output_dir=args.out, check_paths=check_paths)


def run(args: argparse.Namespace) -> int:
    if args.command == "report":
        report = average_report_files(args.reports)
        if args.out:
            report.save(args.out)
        print(report_to_text(report))
        return EXIT_OK

    experiment = _experiment(args, check_paths=args.command != "synth")
    runner = ExperimentRunner(experiment)

    if args.command == "synth":
        files = runner.synth(args.seed[0] if args.seed else None)
        print(json.dumps(files, indent=2, sort_keys=True))
    elif args.command == "train":
        for seed, report in zip(experiment.seeds, runner.train()):
            print(f"seed {seed}")
            print(report_to_text(report))
    elif args.command == "eval":
        print(report_to_text(runner.evaluate(args.checkpoint)))
    elif args.command == "pseudopairs":
        print(json.dumps(runner.pseudopairs(args.checkpoint, args.cycle, args.reference), indent=2))
    elif args.command == "ingest-translations":
        print(json.dumps(runner.ingest_translations(), indent=2, sort_keys=True))
    elif args.command == "compare-losses":
        print(runner.compare_losses(), end="")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logger = setup_logging(log_level=args.log_level or config.log_level, log_file=config.log_file)

    try:
        return run(args)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERIC
    except GroundedRankingError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR
    except OSError as e:
        logger.error(f"File system error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
