import dataclasses
import json
import pathlib

import pytest

from prnn_abc import sim
from prnn_abc import trace_io
from prnn_abc.config import Scenario
from prnn_abc.exceptions import TraceFileError
from prnn_abc.sim import SimulationResult
from prnn_abc.sim import SweepRow


@pytest.fixture
def short_run(prnn_scenario: Scenario) -> tuple[Scenario, SimulationResult]:
    scenario = sim.apply_override(prnn_scenario, "timing.duration", 0.1)
    return scenario, sim.run(scenario)


def test_trace_reads_back_exactly(
    short_run: tuple[Scenario, SimulationResult], tmp_path: pathlib.Path
) -> None:
    _, result = short_run
    path = trace_io.write_trace(result.trace, tmp_path / "trace.csv")
    assert trace_io.read_trace(path) == result.trace


def test_header_names_every_field(
    short_run: tuple[Scenario, SimulationResult], tmp_path: pathlib.Path
) -> None:
    path = trace_io.write_trace(short_run[1].trace, tmp_path / "trace.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header[:3] == ["t", "x1", "x2"]
    assert len(header) == len(sim.TRACE_FIELDS)


def test_written_trace_validates(short_run: tuple[Scenario, SimulationResult]) -> None:
    scenario, result = short_run
    assert trace_io.validate_trace(result.trace) == []
    assert trace_io.validate_trace(result.trace, scenario) == []


def test_tampered_v2_is_reported(short_run: tuple[Scenario, SimulationResult]) -> None:
    trace = list(short_run[1].trace)
    trace[3] = dataclasses.replace(trace[3], V2=trace[3].V2 + 1e-3)
    problems = trace_io.validate_trace(trace)
    assert len(problems) == 1
    assert "V2=" in problems[0]


def test_wrong_weights_are_reported(
    short_run: tuple[Scenario, SimulationResult],
) -> None:
    scenario, result = short_run
    other = sim.apply_override(scenario, "R", 1.0)
    problems = trace_io.validate_trace(result.trace, other)
    assert any("condition_residual" in p for p in problems)


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("", "empty file"),
        ("t,x1\n0,0\n", "header mismatch"),
        (",".join(sim.TRACE_FIELDS) + "\n1,2\n", "line 2: 2 columns"),
        (",".join(sim.TRACE_FIELDS) + "\n" + ",".join(["x"] * 25) + "\n", "line 2"),
    ],
)
def test_malformed_trace(tmp_path: pathlib.Path, text: str, message: str) -> None:
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(TraceFileError, match=message):
        trace_io.read_trace(path)


def test_missing_trace(tmp_path: pathlib.Path) -> None:
    with pytest.raises(TraceFileError, match="unreadable"):
        trace_io.read_trace(tmp_path / "nope.csv")


def test_summary_json(
    short_run: tuple[Scenario, SimulationResult], tmp_path: pathlib.Path
) -> None:
    summary = short_run[1].summary
    path = trace_io.write_summary(summary, tmp_path / "summary.json")
    data = json.loads(path.read_text())
    assert data["steps"] == 10
    assert list(data) == list(sim.SUMMARY_FIELDS)
    assert trace_io.format_summary(summary).startswith("run default: completed")


def test_sweep_table_keeps_failed_cells(
    short_run: tuple[Scenario, SimulationResult], tmp_path: pathlib.Path
) -> None:
    rows = [
        SweepRow(coords={"R": 0.1}, summary=short_run[1].summary, status="ok"),
        SweepRow(coords={"R": 0.2}, summary=None, status="error: boom"),
    ]
    lines = trace_io.write_sweep(rows, tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("R,name,steps,")
    assert lines[0].endswith(",status")
    assert lines[1].startswith("0.10000000000000001,default,10,")
    assert lines[2].endswith(",error: boom")


def test_artifact_stem() -> None:
    assert trace_io.artifact_stem(Scenario(name="Saturated Run #2")) == (
        "saturated-run-2"
    )
    assert trace_io.artifact_stem(Scenario(name="!!")) == "scenario"


def test_gnuplot_script_references_trace(tmp_path: pathlib.Path) -> None:
    script = trace_io.gnuplot_script(tmp_path / "run-trace.csv", "run")
    assert "plot 'run-trace.csv' using 1:2 with lines" in script
    assert script.endswith("unset multiplot\n")


def test_out_of_box_u_is_reported(short_run: tuple[Scenario, SimulationResult]) -> None:
    scenario, result = short_run
    trace = list(result.trace)
    trace[4] = dataclasses.replace(trace[4], u=50.0, u_raw=50.0)
    problems = trace_io.validate_trace(trace, scenario)
    assert any("u=50.0 outside bounds" in p for p in problems)
    assert trace_io.validate_trace(trace) == []


def test_baseline_trace_is_exempt_from_the_box(prnn_scenario: Scenario) -> None:
    scenario = sim.apply_override(prnn_scenario, "timing.duration", 0.1)
    scenario = sim.apply_override(scenario, "bounds", 0.01)
    trace = sim.run_exact_baseline(scenario).trace
    assert trace_io.validate_trace(trace, scenario, clamped=False) == []
    assert any("outside bounds" in p for p in trace_io.validate_trace(trace, scenario))


def test_tampered_prediction_is_reported(
    short_run: tuple[Scenario, SimulationResult],
) -> None:
    scenario, result = short_run
    trace = list(result.trace)
    bumped = trace[2].V2_dot_predicted + 1.0
    trace[2] = dataclasses.replace(trace[2], V2_dot_predicted=bumped)
    problems = trace_io.validate_trace(trace, scenario)
    assert len(problems) == 1
    assert "V2_dot_predicted=" in problems[0]
