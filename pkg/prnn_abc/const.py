from dataclasses import dataclass


@dataclass(frozen=True)
class FixtureScope:
    Function: str = "function"
    Session: str = "session"


@dataclass(frozen=True)
class DisturbanceKind:
    NONE: str = "none"
    CONSTANT: str = "constant"
    SINUSOID: str = "sinusoid"
    RANDOM: str = "bounded-uniform-random"


@dataclass(frozen=True)
class ReferenceKind:
    CONSTANT: str = "constant"
    SINUSOID: str = "sinusoid"
    SMOOTHSTEP: str = "smoothstep"


@dataclass(frozen=True)
class RateConvention:
    MULTIPLY: str = "multiply"
    DIVIDE: str = "divide"


@dataclass(frozen=True)
class SuiteName:
    PRNN_ORACLE: str = "prnn-oracle"
    INTERIOR_DECAY: str = "interior-decay"
    BACKSTEPPING: str = "backstepping-lyapunov"
    CLOSED_LOOP: str = "closed-loop"
    R_CONSISTENCY: str = "r-consistency"
    RLS: str = "rls"
    SATURATION: str = "saturation"
    HYGIENE: str = "hygiene"
    LYAPUNOV: str = "lyapunov"


@dataclass(frozen=True)
class EnvironmentVars:
    PRNN_ABC_THREADS = "PRNN_ABC_THREADS"


@dataclass(frozen=True)
class ExitCode:
    OK: int = 0
    ABORT: int = 1
    CONFIG: int = 2


# These are tuples, not sets as order is important.
SupportedDisturbances = (
    DisturbanceKind.NONE,
    DisturbanceKind.CONSTANT,
    DisturbanceKind.SINUSOID,
    DisturbanceKind.RANDOM,
)

SupportedReferences = (
    ReferenceKind.CONSTANT,
    ReferenceKind.SINUSOID,
    ReferenceKind.SMOOTHSTEP,
)

SupportedSuites = (
    SuiteName.PRNN_ORACLE,
    SuiteName.INTERIOR_DECAY,
    SuiteName.BACKSTEPPING,
    SuiteName.CLOSED_LOOP,
    SuiteName.R_CONSISTENCY,
    SuiteName.RLS,
    SuiteName.SATURATION,
    SuiteName.HYGIENE,
    SuiteName.LYAPUNOV,
)

# Grid keys accepted by sweep that are not plain dotted paths into a Scenario.
SweepAliases = {
    "c1": "gains.c1",
    "c2": "gains.c2",
    "T": "weights.T",
    "R": "weights.R",
    "vartheta": "prnn.vartheta",
    "u_min": "bounds.u_min",
    "u_max": "bounds.u_max",
}
