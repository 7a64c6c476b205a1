"""
Command-line entry point: run, validate and list scenarios
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from pmcm import __version__
from pmcm.core.config import settings
from pmcm.services.scenario_runner import EXIT_CONFIGURATION, EXIT_PASSED, ScenarioRunner, exit_code_of


def configure_logging(level: Optional[str] = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level or settings.LOG_LEVEL)


def _resolve_path(item: str) -> Path:
    """A path, or the name of a bundled scenario"""
    path = Path(item)
    if path.exists():
        return path
    bundled = Path(settings.SCENARIO_PATH) / f"{item}.json"
    return bundled if bundled.exists() else path


def cmd_run(args: argparse.Namespace) -> int:
    runner = ScenarioRunner(out_dir=args.out, tol=args.tol, grid=args.grid, seed=args.seed, jobs=args.jobs)
    reports = [runner.run_file(_resolve_path(item)) for item in args.scenarios]
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {report.name} ({report.task}) exit={report.exit_code}")
        if report.certificate and report.certificate.get("failed_conditions"):
            print(f"  failed conditions: {', '.join(report.certificate['failed_conditions'])}")
        if report.error:
            print(f"  {report.error['error']}: {report.error['message']}")
    return exit_code_of(reports)


def cmd_validate(args: argparse.Namespace) -> int:
    runner = ScenarioRunner()
    code = EXIT_PASSED
    for item in args.scenarios:
        report = runner.validate_file(_resolve_path(item))
        if report.errors:
            code = EXIT_CONFIGURATION
        status = "clean" if report.clean else "invalid" if report.errors else "warnings"
        print(f"{status}: {report.path}")
        for line in report.errors:
            print(f"  error: {line}")
        for line in report.warnings:
            print(f"  warning: {line}")
    return code


def cmd_list(args: argparse.Namespace) -> int:
    entries = ScenarioRunner.list_scenarios(args.directory)
    if args.json:
        print(json.dumps(entries, indent=2))
        return EXIT_PASSED
    for entry in entries:
        print(f"{entry['name']:<28} {entry['task']:<13} {entry['description']}")
    return EXIT_PASSED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmcm",
        description="Prescribed mean curvature measure laboratory",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Log level (default: settings.LOG_LEVEL)")
    subparsers = parser.add_subparsers(dest="cmd", required=True)

    run = subparsers.add_parser("run", help="Run scenarios and write reports")
    run.add_argument("scenarios", nargs="+", help="Scenario files or bundled scenario names")
    run.add_argument("--out", default=settings.OUTPUT_PATH, help="Output directory")
    run.add_argument("--tol", type=float, default=None, help="Duality gap tolerance")
    run.add_argument("--grid", type=float, default=None, help="Grid step")
    run.add_argument("--seed", type=int, default=None, help="Seed of the power-iteration start vector; it only enters through the operator-norm estimate behind the step sizes")
    run.add_argument("--jobs", type=int, default=None, help="Worker processes for independent sub-runs")
    run.set_defaults(func=cmd_run)

    validate = subparsers.add_parser("validate", help="Check scenario files without running solvers")
    validate.add_argument("scenarios", nargs="+", help="Scenario files or bundled scenario names")
    validate.set_defaults(func=cmd_validate)

    listing = subparsers.add_parser("list-scenarios", help="List bundled scenarios")
    listing.add_argument("--directory", default=None, help="Scenario directory")
    listing.add_argument("--json", action="store_true", help="Print JSON instead of a table")
    listing.set_defaults(func=cmd_list)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except Exception as e:
        logger.exception(f"unexpected failure: {e}")
        return EXIT_CONFIGURATION


if __name__ == "__main__":
    sys.exit(main())
