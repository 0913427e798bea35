import re

import pytest

from prnn_abc.exceptions import ConfigError
from prnn_abc.exceptions import ControllabilityError
from prnn_abc.exceptions import PrnnAbcError
from prnn_abc.exceptions import ScenarioMarkerError
from prnn_abc.exceptions import SimulationAbort
from prnn_abc.exceptions import TraceFileError


def test_scenario_marker_args_err(request: pytest.FixtureRequest) -> None:
    expected = re.escape(
        rf"`@pytest.mark.marker` only supports keyword args. Test({request.node.name}) used args=(5000,)"
    )
    with pytest.raises(ScenarioMarkerError, match=expected):
        raise ScenarioMarkerError((5000,), "marker", request.node.name)


def test_config_error_location() -> None:
    err = ConfigError("run.toml", "c1 > 0 required", key="gains.c1", line=4)
    assert str(err) == "run.toml:4 [gains.c1]: c1 > 0 required"
    assert ConfigError("run.toml", "unreadable").key is None


def test_abort_keeps_cause_and_partial_result() -> None:
    cause = ControllabilityError(1.25, "|x1| reached pi/2")
    err = SimulationAbort(cause, result=None)
    assert err.cause is cause
    assert "t=1.250000s" in str(err)
    assert isinstance(err, PrnnAbcError)


def test_trace_file_error_names_source() -> None:
    assert str(TraceFileError("a.csv", "empty file")) == "a.csv: empty file"
