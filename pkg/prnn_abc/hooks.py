from __future__ import annotations

import typing

import pytest

if typing.TYPE_CHECKING:
    from .config import Scenario


@pytest.hookspec(firstresult=True)
def pytest_prnn_abc_scenario(config: pytest.Config) -> Scenario:
    """User defined behaviour for the base scenario handed to the
    `prnn_scenario` fixture.  The default implementation loads the file
    given by `--prnn-scenario`, or the scenario bundled with prnn-abc.

    User defined invocations of this which do not return `None`
    will stop the call flow, overriding the default behaviour.

    :param config: The pytest.Config object (auto injected) by pluggy.
    """
