from .__version__ import __version__  # noqa
from .config import Scenario
from .config import default_scenario
from .config import load_scenario
from .exceptions import PrnnAbcError
from .exceptions import SimulationAbort
from .sim import RunSummary
from .sim import SimulationResult
from .sim import TraceRecord
from .sim import run
from .sim import run_exact_baseline
from .sim import sweep

__all__ = [
    "PrnnAbcError",
    "RunSummary",
    "Scenario",
    "SimulationAbort",
    "SimulationResult",
    "TraceRecord",
    "default_scenario",
    "load_scenario",
    "run",
    "run_exact_baseline",
    "sweep",
]
