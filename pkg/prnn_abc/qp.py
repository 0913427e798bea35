"""Per-step box constrained quadratic program

    min  1/2 Q u^2 + P u    subject to  u_min <= u <= u_max

with P = T B (A - ddx1d + (c1 + c2) S2 + (1 - c1^2) S1) and Q = T B^2 + R.
The u independent term of the performance index is not stored, so `cost`
differs from `performance_index` by a constant and shares its minimiser.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backstepping import ErrorCoords
from .backstepping import tracking_term
from .config import Bounds
from .config import Gains
from .config import Weights


@dataclass(frozen=True, slots=True)
class QpCoefficients:
    P: float
    Q: float
    u_min: float
    u_max: float

    def __post_init__(self: QpCoefficients) -> None:
        if not self.Q > 0:
            raise ValueError(f"Q must be positive, got {self.Q}")
        if not self.u_min < self.u_max:
            raise ValueError(f"empty box [{self.u_min}, {self.u_max}]")


def assemble(
    A: float,  # noqa: N803
    B: float,  # noqa: N803
    e: ErrorCoords,
    ddx1d: float,
    gains: Gains,
    w: Weights,
    bounds: Bounds,
) -> QpCoefficients:
    """Build the QP for the current state.  Every term of P carries a factor
    of B, so B=0 gives P=0 and Q=R rather than a division by zero."""
    return QpCoefficients(
        P=w.T * B * tracking_term(A, ddx1d, e, gains),
        Q=w.T * B * B + w.R,
        u_min=bounds.u_min,
        u_max=bounds.u_max,
    )


def cost(q: QpCoefficients, u: float) -> float:
    return 0.5 * q.Q * u * u + q.P * u


def gradient(q: QpCoefficients, u: float) -> float:
    return q.Q * u + q.P


def clamp(u: float, u_min: float, u_max: float) -> float:
    return min(max(u, u_min), u_max)


def solve_oracle(q: QpCoefficients) -> float:
    """Closed form minimiser: the unconstrained vertex clamped into the box."""
    return clamp(-q.P / q.Q, q.u_min, q.u_max)


def vi_certificate(q: QpCoefficients, u: float) -> float:
    """min over v in the box of gradient(u) (v - u).  Non negative exactly
    when `u` solves the variational inequality; the gradient is affine so the
    box endpoints are enough."""
    g = gradient(q, u)
    return min(g * (q.u_min - u), g * (q.u_max - u))


def performance_index(
    A: float,  # noqa: N803
    B: float,  # noqa: N803
    u: float,
    ddx1d: float,
    e: ErrorCoords,
    gains: Gains,
    w: Weights,
) -> float:
    """The full index 1/2 T (A + B u - ddx1d + (c1+c2) S2 + (1-c1^2) S1)^2 + 1/2 R u^2."""
    residual = tracking_term(A, ddx1d, e, gains) + B * u
    return 0.5 * w.T * residual * residual + 0.5 * w.R * u * u


def condition_residual(B: float, w: Weights) -> float:  # noqa: N803
    """R / (T B^2 + R); zero exactly when T B^2 / Q = 1, approached as R -> 0."""
    return w.R / (w.T * B * B + w.R)
