"""
Confocal - command-line entry point
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import structlog

from confocal import __version__
from confocal.config import settings
from confocal.errors import ConfigError, EmptySceneError
from confocal.experiments.runner import (
    EXPERIMENTS,
    build_config,
    report_csv,
    report_schema,
    run_experiment,
)
from confocal.render.svg import write_svg


def configure_logging() -> None:
    """Structured logs on stderr; stdout carries reports only"""
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=settings.log_level.upper())
    renderer = (
        structlog.dev.ConsoleRenderer()
        if settings.log_format == "console"
        else structlog.processors.JSONRenderer()
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confocal",
        description="Numerical experiments on confocal quadrics, billiards, geodesics and threads.",
    )
    parser.add_argument(
        "experiment",
        choices=[*EXPERIMENTS, "schema"],
        help="experiment to run, or 'schema' to print the report JSON schema",
    )
    parser.add_argument("--config", help="flat key = value file with experiment parameters")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one parameter; values are JSON literals (repeatable)",
    )
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    parser.add_argument("--svg", help="write a figure of the experiment here")
    parser.add_argument("--csv", action="store_true", help="also write a CSV table next to the report")
    parser.add_argument("--seed", type=int, help="seed of the random generator")
    parser.add_argument("--tol", type=float, help="tolerance for the pass criterion")
    parser.add_argument("--timing", action="store_true", help="record wall time in the report")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()

    if args.experiment == "schema":
        print(json.dumps(report_schema(), indent=2))
        return 0

    try:
        config = build_config(args.experiment, args.config, args.overrides, args.seed, args.tol, args.out)
        report, experiment = run_experiment(config, timing=args.timing)
    except ConfigError as exc:
        logger.error("invalid_configuration", error=exc.message, errors=exc.errors)
        print(json.dumps({"error": exc.message, "errors": exc.errors}, indent=2), file=sys.stderr)
        return 2

    text = report.to_json()
    if config.output:
        Path(config.output).write_text(text)
        logger.info("report_written", path=config.output)
    else:
        sys.stdout.write(text)

    if args.csv:
        target = Path(config.output).with_suffix(".csv") if config.output else Path(f"{args.experiment}.csv")
        target.write_text(report_csv(report, experiment.csv_columns))
        logger.info("csv_written", path=str(target))

    if args.svg:
        scene = experiment.scene()
        if scene is None:
            logger.warning("no_figure", experiment=args.experiment)
        else:
            try:
                write_svg(scene, args.svg)
                logger.info("svg_written", path=args.svg)
            except EmptySceneError as exc:
                logger.warning("empty_figure", error=exc.message)

    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
