"""Command-line entry point: run a scenario file or a built-in scenario and
emit a verdict report.

Exit codes: 0 clean run, 1 scenario error (bad file, bad reference, unknown
builtin), 2 engine error.
"""
from __future__ import annotations

import json
import sys

import click

from . import __version__
from .builtins import BUILTIN_NAMES, builtin
from .scenario import Scenario, ScenarioError, parse_scenario, run_scenario
from .tolerances import DEFAULT, Tolerances


def _format_text(report: dict) -> str:
    lines = [f"engine {report['engine_version']}  seed {report['seed']}"]
    for r in report["results"]:
        q = r["query"]
        if "error" in r:
            lines.append(f"{q['type']}: unavailable ({r['message']})")
        elif q["type"] == "parse":
            v = r["verdict"]
            extra = f" [{v['failed_condition']}]" if v["failed_condition"] else ""
            lines.append(f"parse {q['claim']}: {v['status']}{extra}")
        elif q["type"] == "joint_parse":
            status = ("accepted" if r["accepted"]
                      else f"rejected (failing: {', '.join(r['failing'])})")
            lines.append(f"joint_parse {{{', '.join(q['claims'])}}}: {status}")
        elif q["type"] == "distribution":
            lines.append(f"distribution over {', '.join(n['name'] for n in r['distribution']['events'])}:")
            for row in r["distribution"]["table"]:
                if row["p"] > 1e-12:
                    lines.append(f"  P({', '.join(row['outcomes'])}) = {row['p']:.9f}")
        elif q["type"] == "conditional":
            tag = " (certain)" if r["certain"] else ""
            lines.append(f"conditional P({q['query']} | {q['given']}) = {r['p']:.9f}{tag}")
        elif q["type"] == "collapse_compare":
            lines.append(f"collapse_compare on {q['collapse']}: "
                         f"max difference {r['max_difference']:.3e} "
                         f"({'agrees' if r['agrees'] else 'DISAGREES'})")
    return "\n".join(lines)


def _run_and_emit(scenario: Scenario, fmt: str, tol: float | None,
                  seed: int, report_path: str | None) -> None:
    tols = DEFAULT if tol is None else Tolerances(tol_op=tol)
    try:
        report = run_scenario(scenario, seed=seed, tols=tols)
    except Exception as e:
        click.echo(f"engine error: {e}", err=True)
        sys.exit(2)
    out = json.dumps(report, indent=2) if fmt == "json" else _format_text(report)
    if report_path:
        with open(report_path, "w") as fh:
            fh.write(out + "\n")
    click.echo(out)


_common = [
    click.option("--format", "fmt", type=click.Choice(["json", "text"]),
                 default="text", show_default=True, help="Report format."),
    click.option("--tol", type=float, default=None,
                 help="Override the operator-equality tolerance."),
    click.option("--seed", type=int, default=0, show_default=True,
                 help="Seed for the randomized search and verification steps."),
    click.option("--report", "report_path", type=click.Path(dir_okay=False),
                 default=None, help="Also write the report to this file."),
]


def _with_common(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Decide whether claimed dynamics parse as measurements and evaluate
    outcome inferences over scenario files.
    """


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@_with_common
def run(file: str, fmt: str, tol: float | None, seed: int,
        report_path: str | None) -> None:
    """Run a scenario FILE (JSON) and print its report."""
    try:
        with open(file) as fh:
            scenario = parse_scenario(fh.read())
    except ScenarioError as e:
        click.echo(f"scenario error: {e}", err=True)
        sys.exit(1)
    _run_and_emit(scenario, fmt, tol, seed, report_path)


@main.command(name="builtin")
@click.argument("name", type=click.Choice(BUILTIN_NAMES))
@_with_common
def builtin_cmd(name: str, fmt: str, tol: float | None, seed: int,
                report_path: str | None) -> None:
    """Run one of the built-in scenarios."""
    try:
        scenario = builtin(name)
    except (ScenarioError, ValueError) as e:
        click.echo(f"scenario error: {e}", err=True)
        sys.exit(1)
    _run_and_emit(scenario, fmt, tol, seed, report_path)
