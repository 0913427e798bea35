from __future__ import annotations

import pathlib
import shutil
import typing

import numpy as np
import pytest
from slugify import slugify

from .config import PendulumParams
from .config import Scenario
from .config import default_scenario
from .config import load_scenario
from .const import FixtureScope
from .sim import SimulationResult
from .sim import apply_override
from .trace_io import write_summary
from .trace_io import write_trace
from .utils import SCENARIO_MARKER
from .utils import get_artifacts_dir_from_node
from .utils import is_master_worker
from .utils import parse_scenario_overrides_from_node

if typing.TYPE_CHECKING:
    from xdist.workermanage import WorkerController


@pytest.hookimpl
def pytest_addoption(parser: pytest.Parser) -> None:
    """Register argparse-style options and ini-style configuration values
    for the plugin.
    """
    prnn = parser.getgroup(
        "prnn-abc",
        "Pendulum scenarios and traces for pytest",
    )
    prnn.addoption(
        "--prnn-seed",
        action="store",
        type=int,
        default=0,
        dest="prnn_seed",
        help="Seed for the prnn_rng fixture and every prnn_scenario. (Defaults to 0).",
    )
    prnn.addoption(
        "--prnn-scenario",
        action="store",
        default=None,
        dest="prnn_scenario",
        help="A scenario TOML file used as the base for prnn_scenario.",
    )
    prnn.addoption(
        "--prnn-artifacts",
        action="store",
        default=None,
        dest="prnn_artifacts",
        help="The folder where recorded traces are stored. (Defaults to a tmp dir).",
    )


@pytest.hookimpl
def pytest_configure(config: pytest.Config) -> None:
    """Register the scenario marker and prepare the artifacts directory.

    :param config: The pytest `Config` object. (auto injected by pluggy).
    """
    config.addinivalue_line(
        "markers",
        f"{SCENARIO_MARKER}(**overrides): override scenario settings for a test, "
        "dotted paths or sweep aliases, callback= for computed overrides.",
    )
    config.prnn_artifacts_dir = None
    if config.option.prnn_artifacts is not None and is_master_worker(config):
        artifacts_dir = config.rootpath / config.option.prnn_artifacts
        if artifacts_dir.is_dir():
            shutil.rmtree(artifacts_dir)
        artifacts_dir.mkdir(parents=True)
        # Stored as a string so it serializes across xdist workers.
        config.prnn_artifacts_dir = str(artifacts_dir)


@pytest.hookimpl(optionalhook=True)
def pytest_configure_node(node: WorkerController) -> None:
    """Prepare the xdist workers with the artifacts dir availability."""
    node.workerinput["prnn_artifacts_dir"] = node.config.prnn_artifacts_dir


@pytest.hookimpl
def pytest_addhooks(pluginmanager: pytest.PytestPluginManager) -> None:
    """Register new `prnn-abc` specific hooking functionality."""
    from prnn_abc import hooks as prnn_hooks

    pluginmanager.add_hookspecs(prnn_hooks)


@pytest.hookimpl(trylast=True)
def pytest_prnn_abc_scenario(config: pytest.Config) -> Scenario:
    """The default base scenario: `--prnn-scenario` if given, else the
    bundled one.

    :param config: The `pytest.Config` object. (auto injected).
    """
    if (path := config.option.prnn_scenario) is not None:
        return load_scenario(path)
    return default_scenario()


@pytest.fixture(scope=FixtureScope.Session)
def prnn_seed(pytestconfig: pytest.Config) -> int:
    """The run wide seed from `--prnn-seed`."""
    return pytestconfig.option.prnn_seed


@pytest.fixture(scope=FixtureScope.Function)
def prnn_rng(prnn_seed: int) -> np.random.Generator:
    """A fresh generator seeded from `--prnn-seed`, so every test sees the
    same stream regardless of ordering or xdist distribution."""
    return np.random.default_rng(prnn_seed)


@pytest.fixture(scope=FixtureScope.Session)
def prnn_base_scenario(pytestconfig: pytest.Config) -> Scenario:
    """The scenario returned by the `pytest_prnn_abc_scenario` hook."""
    return pytestconfig.hook.pytest_prnn_abc_scenario(config=pytestconfig)


@pytest.fixture(scope=FixtureScope.Function)
def prnn_scenario(
    request: pytest.FixtureRequest, prnn_base_scenario: Scenario, prnn_seed: int
) -> Scenario:
    """The base scenario with the run seed applied, then the overrides of the
    test's `prnn_scenario` marker.  Marker values take priority, with
    ``callback=`` results applied last.
    """
    scenario = apply_override(prnn_base_scenario, "seed", prnn_seed)
    for key, value in parse_scenario_overrides_from_node(request.node).items():
        scenario = apply_override(scenario, key, value)
    return scenario


@pytest.fixture(scope=FixtureScope.Function)
def prnn_params(prnn_scenario: Scenario) -> PendulumParams:
    """Physical constants of the test's scenario."""
    return prnn_scenario.params


@pytest.fixture(scope=FixtureScope.Session)
def prnn_artifacts_dir(
    pytestconfig: pytest.Config, tmp_path_factory: pytest.TempPathFactory
) -> pathlib.Path:
    """Where `prnn_record` writes.  Cast in the fixture as a pathlib.Path
    cannot be serialized across xdist workers."""
    configured = get_artifacts_dir_from_node(pytestconfig)
    if configured is None:
        return tmp_path_factory.mktemp("prnn-abc")
    return pathlib.Path(configured)


@pytest.fixture(scope=FixtureScope.Function)
def prnn_record(
    request: pytest.FixtureRequest, prnn_artifacts_dir: pathlib.Path
) -> typing.Callable[[SimulationResult], pathlib.Path]:
    """Returns a callable persisting a result's trace and summary under a name
    derived from the test node; it returns the trace path."""
    name = slugify(request.node.name)

    def record(result: SimulationResult) -> pathlib.Path:
        write_summary(result.summary, prnn_artifacts_dir / f"{name}-summary.json")
        return write_trace(result.trace, prnn_artifacts_dir / f"{name}-trace.csv")

    return record
