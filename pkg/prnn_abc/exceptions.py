from __future__ import annotations

import typing

if typing.TYPE_CHECKING:
    from .sim import SimulationResult


class PrnnAbcError(Exception):
    """Base class for all prnn-abc exceptions."""


class DomainError(PrnnAbcError):
    """Raised when a plant term is evaluated on a non-finite input."""

    def __init__(self: DomainError, quantity: str, value: float) -> None:
        self.quantity = quantity
        super().__init__(f"{quantity} must be finite, got {value!r}")


class IntegrationBlowupError(PrnnAbcError):
    """Raised when a fixed step integration produces a non-finite state."""

    def __init__(self: IntegrationBlowupError, t: float, what: str) -> None:
        self.t = t
        super().__init__(f"integration blew up at t={t:.6f}s: {what} is not finite")


class ControllabilityError(PrnnAbcError):
    """Raised when the plant leaves the region where the input gain keeps its sign."""

    def __init__(self: ControllabilityError, t: float, reason: str) -> None:
        self.t = t
        super().__init__(f"controllability lost at t={t:.6f}s: {reason}")


class NotIdentifiableError(PrnnAbcError):
    """Raised when an RLS estimate cannot be mapped back onto physical parameters."""

    def __init__(self: NotIdentifiableError, theta_hat: typing.Sequence[float]) -> None:
        self.theta_hat = tuple(float(v) for v in theta_hat)
        super().__init__(
            f"parameters not yet identifiable from theta_hat={self.theta_hat}"
        )


class SimulationAbort(PrnnAbcError):
    """Raised when a closed loop run cannot continue.  The partial result is
    kept on the exception so callers can still persist the trace."""

    def __init__(
        self: SimulationAbort, cause: PrnnAbcError, result: SimulationResult
    ) -> None:
        self.cause = cause
        self.result = result
        super().__init__(f"simulation aborted: {cause}")


class ConfigError(PrnnAbcError):
    """Raised when a scenario configuration cannot be parsed or validated."""

    def __init__(
        self: ConfigError,
        source: str,
        problem: str,
        key: str | None = None,
        line: int | None = None,
    ) -> None:
        self.source = source
        self.key = key
        self.line = line
        where = source
        if line is not None:
            where += f":{line}"
        if key is not None:
            where += f" [{key}]"
        super().__init__(f"{where}: {problem}")


class ScenarioMarkerError(PrnnAbcError):
    """Raised when passing args to the prnn_scenario marker, only keyword args are supported."""

    def __init__(
        self: ScenarioMarkerError, args: tuple[typing.Any, ...], marker: str, test: str
    ) -> None:
        super().__init__(
            f"`@pytest.mark.{marker}` only supports keyword args. Test({test}) used {args=}"
        )


class TraceFileError(PrnnAbcError):
    """Raised when a trace CSV does not follow the trace file layout."""

    def __init__(self: TraceFileError, source: str, problem: str) -> None:
        self.source = source
        super().__init__(f"{source}: {problem}")
