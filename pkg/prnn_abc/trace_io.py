"""Trace, summary and sweep files.

Traces are CSV with a header naming every `TraceRecord` field and floats
written with 17 significant digits, so a parsed trace holds the same doubles
the run produced.
"""

from __future__ import annotations

import csv
import json
import math
import pathlib
import typing
from dataclasses import asdict

from slugify import slugify

from . import backstepping
from . import prnn
from . import qp
from .config import Scenario
from .exceptions import TraceFileError
from .sim import SUMMARY_FIELDS
from .sim import TRACE_FIELDS
from .sim import RunSummary
from .sim import SweepRow
from .sim import TraceRecord
from .sim import network_v2_rate

RECOMPUTE_TOLERANCE = 1e-12


def _fmt(value: typing.Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def artifact_stem(scenario: Scenario) -> str:
    """File name stem for a scenario's artifacts."""
    return slugify(scenario.name) or "scenario"


def write_trace(
    trace: typing.Iterable[TraceRecord], path: pathlib.Path
) -> pathlib.Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for record in trace:
            writer.writerow(_fmt(getattr(record, name)) for name in TRACE_FIELDS)
    return path


def read_trace(path: pathlib.Path) -> list[TraceRecord]:
    """Parse a trace file, rejecting unexpected columns or ragged rows."""
    source = str(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as err:
        raise TraceFileError(source, f"unreadable ({err.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceFileError(source, "empty file")
        if tuple(header) != TRACE_FIELDS:
            missing = sorted(set(TRACE_FIELDS) - set(header))
            extra = sorted(set(header) - set(TRACE_FIELDS))
            raise TraceFileError(
                source, f"header mismatch (missing={missing}, unexpected={extra})"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_FIELDS):
                raise TraceFileError(
                    source,
                    f"line {lineno}: {len(row)} columns, expected {len(TRACE_FIELDS)}",
                )
            try:
                values = [float(v) for v in row]
            except ValueError as err:
                raise TraceFileError(source, f"line {lineno}: {err}") from None
            records.append(TraceRecord(*values))
    return records


def validate_trace(
    trace: typing.Sequence[TraceRecord],
    scenario: Scenario | None = None,
    *,
    clamped: bool = True,
) -> list[str]:
    """Recompute derived columns and report every mismatch.

    Without a scenario only V2 can be rebuilt; with one the ideal and
    predicted V2 rates, the condition residual and the actuator box are
    checked too.

    :param clamped: The trace comes from the network controller, so every
        applied u is the clamp of u_raw and lies in the box.  Pass False for
        exact baseline traces, which are applied unclamped.
    """
    problems = []

    def check(t: float, column: str, stored: float, expected: float) -> None:
        if abs(stored - expected) > RECOMPUTE_TOLERANCE * max(1.0, abs(expected)):
            problems.append(f"t={t:.6f}: {column}={stored!r} expected {expected!r}")

    for r in trace:
        if not all(math.isfinite(getattr(r, name)) for name in TRACE_FIELDS):
            problems.append(f"t={r.t:.6f}: non-finite value")
            continue
        e = backstepping.ErrorCoords(S1=r.S1, S2=r.S2, gamma1=0.0)
        check(r.t, "V2", r.V2, backstepping.lyapunov_v2(e))
        if scenario is None:
            continue
        gains, bounds = scenario.gains, scenario.bounds
        ideal = backstepping.ideal_v2_dot(e, gains)
        check(r.t, "V2_dot_ideal", r.V2_dot_ideal, ideal)
        check(r.t, "V2_dot_predicted", r.V2_dot_predicted, network_v2_rate(r, gains))
        check(
            r.t,
            "condition_residual",
            r.condition_residual,
            qp.condition_residual(r.B, scenario.weights),
        )
        if not clamped:
            continue
        check(r.t, "u", r.u, prnn.project(r.u_raw, bounds.u_min, bounds.u_max))
        if not bounds.u_min <= r.u <= bounds.u_max:
            problems.append(f"t={r.t:.6f}: u={r.u!r} outside bounds")
    return problems


def write_summary(summary: RunSummary, path: pathlib.Path) -> pathlib.Path:
    path.write_text(json.dumps(asdict(summary), indent=2) + "\n", encoding="utf-8")
    return path


def format_summary(summary: RunSummary) -> str:
    status = "ABORTED: " + summary.abort_reason if summary.aborted else "completed"
    lines = [
        f"run {summary.name}: {status}",
        f"  steps                 {summary.steps}",
        f"  settling time         {summary.settling_time:.3f} s"
        + ("" if summary.settled else " (not settled)"),
        f"  max |S1|              {summary.max_abs_s1:.6g} rad",
        f"  integral u^2          {summary.control_energy:.6g}",
        f"  integral S1^2         {summary.tracking_ise:.6g}",
        f"  saturation fraction   {summary.saturation_fraction:.4f}",
        f"  theta error           {summary.theta_error:.4%}",
        f"  prnn settle time      {summary.prnn_settle_time:.3f} s",
        f"  max condition resid.  {summary.max_condition_residual:.3e}",
        f"  lyapunov violations   {summary.lyapunov_violations}",
    ]
    if summary.nonphysical_estimate:
        lines.append("  warning: a nonphysical estimate was produced during the run")
    return "\n".join(lines)


def write_sweep(rows: typing.Sequence[SweepRow], path: pathlib.Path) -> pathlib.Path:
    """One row per grid cell: grid coordinates, summary fields, status."""
    keys = list(rows[0].coords) if rows else []
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*keys, *SUMMARY_FIELDS, "status"])
        for row in rows:
            summary = (
                [_fmt(getattr(row.summary, name)) for name in SUMMARY_FIELDS]
                if row.summary is not None
                else [""] * len(SUMMARY_FIELDS)
            )
            coords = [_fmt(row.coords[k]) for k in keys]
            writer.writerow([*coords, *summary, row.status])
    return path


def gnuplot_script(trace_path: pathlib.Path, title: str) -> str:
    """A gnuplot script plotting angle, control and V2 against time."""
    column = {name: index + 1 for index, name in enumerate(TRACE_FIELDS)}
    data = trace_path.name
    return "\n".join(
        [
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set xlabel 't [s]'",
            "set grid",
            f"set multiplot layout 3,1 title '{title}'",
            "set ylabel 'angle [rad]'",
            f"plot '{data}' using {column['t']}:{column['x1']} with lines, \\",
            f"     '{data}' using {column['t']}:{column['x1d']} with lines dashtype 2",
            "set ylabel 'u [N]'",
            f"plot '{data}' using {column['t']}:{column['u']} with steps",
            "set ylabel 'V2'",
            f"plot '{data}' using {column['t']}:{column['V2']} with lines",
            "unset multiplot",
            "",
        ]
    )
