"""
Run every bundled scenario and write a markdown summary
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
from datetime import datetime
from pathlib import Path
from typing import List

from dotenv import load_dotenv
from loguru import logger

from pmcm import __version__
from pmcm.core.config import settings
from pmcm.schemas.report_schemas import ScenarioReport
from pmcm.services.scenario_runner import ScenarioRunner, exit_code_of, scenario_summary


def generate_markdown_report(reports: List[ScenarioReport], skipped: List[str]) -> str:
    """Generate a markdown report from scenario reports"""
    passed = sum(1 for r in reports if r.passed)
    report = f"""# Scenario report

**Generated**: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}
**Version**: {__version__}

## Summary

{passed} of {len(reports)} scenarios passed.

| Scenario | Task | Exit code | Failed expectations |
|----------|------|-----------|---------------------|
"""
    for r in reports:
        summary = scenario_summary(r)
        failed = ", ".join(summary["failed"]) or "-"
        report += f"| {r.name} | {r.task} | {r.exit_code} | {failed} |\n"

    report += "\n## Details\n"
    for r in reports:
        report += f"\n### {r.name}\n\n"
        if r.error:
            report += f"- error: `{r.error['error']}`: {r.error['message']}\n"
        if r.certificate:
            failed_conditions = r.certificate.get("failed_conditions") or []
            report += f"- certificate passed: {r.certificate.get('passed')}"
            report += f" (failed: {', '.join(failed_conditions)})\n" if failed_conditions else "\n"
        for name, ok in r.assertions.items():
            report += f"- {name}: {'ok' if ok else 'FAILED'}\n"
        for artifact in r.artifacts:
            report += f"- artifact: `{artifact}`\n"

    if skipped:
        report += "\n## Skipped\n\n" + "".join(f"- {name}\n" for name in skipped)
    return report


def main():
    parser = argparse.ArgumentParser(description="Run bundled scenarios and summarize them")
    parser.add_argument("--directory", default=settings.SCENARIO_PATH, help="Scenario directory")
    parser.add_argument("--out", default=settings.OUTPUT_PATH, help="Output directory")
    parser.add_argument("--jobs", type=int, default=None, help="Worker processes for sub-runs")
    parser.add_argument("--skip", nargs="*", default=[], help="Scenario names to leave out")
    parser.add_argument("--report", default="SCENARIO_REPORT.md", help="Markdown file to write")
    args = parser.parse_args()

    runner = ScenarioRunner(out_dir=args.out, jobs=args.jobs)
    entries = ScenarioRunner.list_scenarios(args.directory)
    if not entries:
        print(f"No scenarios found in {args.directory}")
        return 0

    reports = []
    for entry in entries:
        if entry["name"] in args.skip:
            continue
        logger.info(f"Running {entry['name']}")
        reports.append(runner.run_file(entry["path"]))

    markdown_report = generate_markdown_report(reports, [name for name in args.skip])
    Path(args.report).write_text(markdown_report, encoding="utf-8")
    print(f"\nReport generated: {args.report}")

    print("\n" + "=" * 60)
    print("Scenario summary")
    print("=" * 60)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}")
    return exit_code_of(reports)


if __name__ == "__main__":
    load_dotenv()
    sys.exit(main())
