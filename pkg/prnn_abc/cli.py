"""The ``prnn-abc`` command line.

Exit codes: 0 success, 1 run abort (or failed verification), 2 configuration
or usage error.
"""

from __future__ import annotations

import argparse
import logging
import pathlib
import sys
import typing

from . import sim
from . import trace_io
from .__version__ import __version__
from .actions import GridAction
from .actions import OnOffAction
from .actions import grid_size
from .config import Scenario
from .config import default_scenario
from .config import load_scenario
from .const import ExitCode
from .const import SupportedSuites
from .exceptions import ConfigError
from .exceptions import SimulationAbort
from .exceptions import TraceFileError
from .utils import configure_logging
from .utils import resolve_workers
from .verify import run_suites

log = logging.getLogger(__name__)


def _add_logging_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "-v",
        "--verbose",
        action="store_const",
        const=1,
        default=0,
        dest="verbosity",
        help="Log debug messages.",
    )
    group.add_argument(
        "-q",
        "--quiet",
        action="store_const",
        const=-1,
        dest="verbosity",
        help="Only log warnings and errors.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prnn-abc",
        description=(
            "Projection network adaptive backstepping control of an inverted pendulum."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run one closed loop simulation.")
    simulate.add_argument(
        "--config",
        type=pathlib.Path,
        default=None,
        help="Scenario TOML file. (Defaults to the bundled scenario).",
    )
    simulate.add_argument(
        "--out", type=pathlib.Path, required=True, help="Output directory."
    )
    simulate.add_argument(
        "--adaptive",
        action=OnOffAction,
        default=None,
        help="Override RLS adaptation, 'on' or 'off'.",
    )
    simulate.add_argument("--seed", type=int, default=None, help="Override the seed.")
    simulate.add_argument(
        "--gnuplot",
        action="store_true",
        default=False,
        help="Also write a gnuplot script next to the trace.",
    )
    _add_logging_flags(simulate)

    verify = commands.add_parser("verify", help="Run the verification suites.")
    verify.add_argument(
        "--suite",
        action="append",
        default=[],
        choices=SupportedSuites,
        help="Only run this suite, may be repeated. (Defaults to all).",
    )
    verify.add_argument("--seed", type=int, default=0, help="Seed for random suites.")
    verify.add_argument(
        "--scenario",
        type=pathlib.Path,
        default=None,
        help="Scenario TOML for the suites that take one.",
    )
    _add_logging_flags(verify)

    sweep = commands.add_parser("sweep", help="Run a parameter grid.")
    sweep.add_argument("--config", type=pathlib.Path, default=None)
    sweep.add_argument(
        "--grid",
        action=GridAction,
        required=True,
        help="A sweep axis 'key=v1,v2,...'; repeat or separate with ';'.",
    )
    sweep.add_argument(
        "--out", type=pathlib.Path, required=True, help="Output directory."
    )
    _add_logging_flags(sweep)

    validate = commands.add_parser("validate", help="Check a trace file.")
    validate.add_argument("trace", type=pathlib.Path)
    validate.add_argument(
        "--config",
        type=pathlib.Path,
        default=None,
        help="Scenario the trace came from, enables the weight and bound checks.",
    )
    validate.add_argument(
        "--unclamped",
        action="store_true",
        help="The trace is an exact baseline run, applied without the actuator box.",
    )
    _add_logging_flags(validate)
    return parser


def _scenario(path: pathlib.Path | None) -> Scenario:
    return default_scenario() if path is None else load_scenario(path)


def _emit(text: str) -> None:
    sys.stdout.write(text + "\n")


def _write_run(
    scenario: Scenario,
    result: sim.SimulationResult,
    out: pathlib.Path,
    *,
    gnuplot: bool,
) -> None:
    out.mkdir(parents=True, exist_ok=True)
    stem = trace_io.artifact_stem(scenario)
    trace_path = trace_io.write_trace(result.trace, out / f"{stem}-trace.csv")
    trace_io.write_summary(result.summary, out / f"{stem}-summary.json")
    if gnuplot:
        script = trace_io.gnuplot_script(trace_path, scenario.name)
        (out / f"{stem}.gp").write_text(script, encoding="utf-8")
    log.info("wrote %s", trace_path)


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _scenario(args.config)
    if args.adaptive is not None:
        scenario = sim.apply_override(scenario, "adaptive", args.adaptive)
    if args.seed is not None:
        scenario = sim.apply_override(scenario, "seed", args.seed)
    code = ExitCode.OK
    try:
        result = sim.run(scenario)
    except SimulationAbort as err:
        log.error("%s", err)
        result = err.result
        code = ExitCode.ABORT
    try:
        _write_run(scenario, result, args.out, gnuplot=args.gnuplot)
    except OSError as err:
        log.error("could not write results to %s: %s", args.out, err)
        return ExitCode.ABORT
    _emit(trace_io.format_summary(result.summary))
    return code


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = None if args.scenario is None else load_scenario(args.scenario)
    results = run_suites(args.suite, seed=args.seed, scenario=scenario)
    for result in results:
        _emit(str(result))
    failed = [r.name for r in results if not r.passed]
    if failed:
        log.error("failed suites: %s", ", ".join(failed))
        return ExitCode.ABORT
    return ExitCode.OK


def cmd_sweep(args: argparse.Namespace) -> int:
    base = _scenario(args.config)
    workers = resolve_workers()
    log.info("sweeping %d cells on %d workers", grid_size(args.grid), workers)
    rows = sim.sweep(base, args.grid, workers=workers)
    args.out.mkdir(parents=True, exist_ok=True)
    path = trace_io.write_sweep(
        rows, args.out / f"{trace_io.artifact_stem(base)}-sweep.csv"
    )
    failed = sum(1 for row in rows if row.status != "ok")
    _emit(f"{len(rows)} cells, {failed} not ok, table at {path}")
    return ExitCode.OK


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = None if args.config is None else load_scenario(args.config)
    try:
        trace = trace_io.read_trace(args.trace)
    except TraceFileError as err:
        log.error("%s", err)
        return ExitCode.CONFIG
    problems = trace_io.validate_trace(trace, scenario, clamped=not args.unclamped)
    for problem in problems:
        _emit(problem)
    if problems:
        log.error("%s: %d problems", args.trace, len(problems))
        return ExitCode.CONFIG
    _emit(f"{args.trace}: {len(trace)} records ok")
    return ExitCode.OK


COMMANDS: dict[str, typing.Callable[[argparse.Namespace], int]] = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv: typing.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbosity)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        log.error("%s", err)
        return ExitCode.CONFIG
