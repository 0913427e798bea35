import pathlib
import typing

import pytest

from prnn_abc.config import Scenario
from prnn_abc.config import dump_scenario

pytest_plugins = ["pytester"]


@pytest.fixture
def scenario_file(
    tmp_path: pathlib.Path, prnn_scenario: Scenario
) -> typing.Callable[..., pathlib.Path]:
    """Writes the test's scenario, with a short horizon and any model_copy
    style updates, to a TOML file and returns its path."""

    def write(name: str = "short", **updates: typing.Any) -> pathlib.Path:
        timing = prnn_scenario.timing.model_copy(update={"duration": 0.5})
        scenario = prnn_scenario.model_copy(
            update={"name": name, "timing": timing, **updates}
        )
        return dump_scenario(scenario, tmp_path / f"{name}.toml")

    return write
