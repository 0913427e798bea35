from __future__ import annotations

import logging
import os
import typing

import pytest

from .const import EnvironmentVars
from .const import SupportedSuites
from .exceptions import ConfigError
from .exceptions import ScenarioMarkerError
from .types import Overrides

SCENARIO_MARKER = "prnn_scenario"

log = logging.getLogger(__name__)


def resolve_workers(environ: typing.Mapping[str, str] | None = None) -> int:
    """Number of sweep workers, capped by `PRNN_ABC_THREADS` when set.

    :param environ: Mapping to read from, defaults to the process environment.
    """
    environ = os.environ if environ is None else environ
    available = os.cpu_count() or 1
    raw = environ.get(EnvironmentVars.PRNN_ABC_THREADS)
    if raw is None:
        return available
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(
            EnvironmentVars.PRNN_ABC_THREADS, f"expected an integer, got {raw!r}"
        ) from None
    if cap < 1:
        raise ConfigError(EnvironmentVars.PRNN_ABC_THREADS, "must be at least 1")
    return min(cap, available)


def check_suite(name: str) -> None:
    """Enforces the verification suite name is known."""
    if name not in SupportedSuites:
        err = f"{name} is not a verification suite, choose one of {SupportedSuites}."
        raise ValueError(err)


def first_time_after_which(
    times: typing.Sequence[float], holds: typing.Sequence[bool]
) -> float | None:
    """The earliest time from which `holds` stays true to the end, or None
    if it is false at the last sample."""
    if not holds or not holds[-1]:
        return None
    index = len(holds) - 1
    while index > 0 and holds[index - 1]:
        index -= 1
    return times[index]


def configure_logging(verbosity: int) -> None:
    """Configure the root logger for command line use; library modules only
    ever create child loggers.  Handlers already on the root logger are kept."""
    level = {-1: logging.WARNING, 0: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(format="%(asctime)s %(levelname)-7s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def parse_scenario_overrides_from_node(item: pytest.Item) -> Overrides:
    """Given a test node item, return the scenario overrides from its closest
    `prnn_scenario` marker, merged with whatever the marker's ``callback=``
    returns for the node.

    :param item: The `pytest.Item` for the executing test.
    """
    marker = item.get_closest_marker(SCENARIO_MARKER)
    if marker is None:
        return {}
    if marker.args:
        raise ScenarioMarkerError(marker.args, SCENARIO_MARKER, item.name)
    overrides = dict(marker.kwargs)
    callback = overrides.pop("callback", None)
    if callback is not None:
        return {**overrides, **callback(item)}
    return overrides


def is_master_worker(config: pytest.Config) -> bool:
    """Detect if the calling code is an xdist worker
    or the master worker."""
    return not hasattr(config, "workerinput")


def get_artifacts_dir_from_node(pytestconfig: pytest.Config) -> str:
    """Fetches the artifacts directory in an xdist compatible way."""
    if hasattr(pytestconfig, "workerinput"):
        return pytestconfig.workerinput["prnn_artifacts_dir"]
    return pytestconfig.prnn_artifacts_dir
