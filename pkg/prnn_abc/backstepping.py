"""Backstepping error coordinates, virtual control and Lyapunov functions.

    S1 = x1 - x1d
    gamma1 = -c1 S1
    S2 = x2 - dx1d - gamma1
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import Gains
from .config import ReferenceSignal
from .exceptions import ControllabilityError
from .plant import PlantState
from .reference_strategy import REFERENCE_FACTORY
from .types import ReferenceTriple

# Below this |B| the exact law would divide by (numerically) zero.
MIN_GAIN = 1e-9


@dataclass(frozen=True, slots=True)
class ErrorCoords:
    S1: float
    S2: float
    gamma1: float


def reference_at(ref: ReferenceSignal, t: float) -> ReferenceTriple:
    """Return (x1d, dx1d, ddx1d) at time `t`."""
    if t < 0:
        raise ValueError(f"reference requested at negative time {t}")
    return REFERENCE_FACTORY[ref.kind](ref, t)


def error_coords(state: PlantState, refs: ReferenceTriple, gains: Gains) -> ErrorCoords:
    x1d, dx1d, _ = refs
    s1 = state.x1 - x1d
    gamma1 = -gains.c1 * s1
    return ErrorCoords(S1=s1, S2=state.x2 - dx1d - gamma1, gamma1=gamma1)


def gamma1_dot(e: ErrorCoords, gains: Gains) -> float:
    """Closed form time derivative of the virtual control, -c1 S2 + c1^2 S1."""
    return -gains.c1 * e.S2 + gains.c1**2 * e.S1


def s2_dot(
    A: float, B: float, u: float, ddx1d: float, e: ErrorCoords, gains: Gains  # noqa: N803
) -> float:
    return A + B * u - ddx1d + gains.c1 * e.S2 - gains.c1**2 * e.S1


def tracking_term(
    A: float, ddx1d: float, e: ErrorCoords, gains: Gains  # noqa: N803
) -> float:
    """A - ddx1d + (c1 + c2) S2 + (1 - c1^2) S1, the bracket shared by the
    stabilising condition, the performance index and P(x)."""
    return A - ddx1d + (gains.c1 + gains.c2) * e.S2 + (1.0 - gains.c1**2) * e.S1


def lyapunov_v1(e: ErrorCoords) -> float:
    return 0.5 * e.S1**2


def lyapunov_v2(e: ErrorCoords) -> float:
    return 0.5 * e.S1**2 + 0.5 * e.S2**2


def ideal_v2_dot(e: ErrorCoords, gains: Gains) -> float:
    """-c1 S1^2 - c2 S2^2: V2 rate under the exact stabilising control."""
    return -gains.c1 * e.S1**2 - gains.c2 * e.S2**2


def v2_dot(
    A: float, B: float, u: float, ddx1d: float, e: ErrorCoords, gains: Gains  # noqa: N803
) -> float:
    """Instantaneous V2 rate for an arbitrary applied `u` and no disturbance.

    Equal to `ideal_v2_dot(e, gains) + S2 (tracking_term + B u)`, which
    collapses to the ideal rate when `u` is `exact_control`."""
    return -gains.c1 * e.S1**2 + e.S2 * (
        A + B * u - ddx1d + gains.c1 * e.S2 + (1.0 - gains.c1**2) * e.S1
    )


def exact_control(
    A: float, B: float, ddx1d: float, e: ErrorCoords, gains: Gains, t: float = 0.0  # noqa: N803
) -> float:
    """Unconstrained u making V2 decay at exactly `ideal_v2_dot`.

    :raises ControllabilityError: when |B| is too small to divide by.
    """
    if abs(B) < MIN_GAIN:
        raise ControllabilityError(t, f"input gain B={B:.3e} too small for exact control")
    return -tracking_term(A, ddx1d, e, gains) / B
