"""Nonlinear angle dynamics of the cart-pole and its fixed step integration.

    dx1 = x2
    dx2 = A(x) + B(x) u + d
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DisturbanceSpec
from .config import PendulumParams
from .disturbance_strategy import DISTURBANCE_FACTORY
from .exceptions import ControllabilityError
from .exceptions import DomainError
from .exceptions import IntegrationBlowupError
from .types import FloatArray

HALF_PI = math.pi / 2


@dataclass(frozen=True, slots=True)
class PlantState:
    x1: float
    x2: float

    @property
    def upright(self: PlantState) -> bool:
        """True while the input gain B(x) keeps its sign."""
        return abs(self.x1) < HALF_PI


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(name, value)


def _inertia(params: PendulumParams, x1: float) -> float:
    """l (4/3 - m cos^2 x1 / (m_c + m)), bounded away from zero for real pendulums."""
    c = math.cos(x1)
    return params.l * (4.0 / 3.0 - params.m * c * c / params.total_mass)


def drift_term(params: PendulumParams, state: PlantState) -> float:
    """The input independent part A(x) of the angular acceleration.

    :param params: Physical constants.
    :param state: Angle and angular velocity.
    """
    _require_finite(x1=state.x1, x2=state.x2)
    s, c = math.sin(state.x1), math.cos(state.x1)
    numerator = params.g * s - params.m * params.l * state.x2**2 * c * s / params.total_mass
    return numerator / _inertia(params, state.x1)


def gain_term(params: PendulumParams, state: PlantState) -> float:
    """The input gain B(x); even in x1 and positive while |x1| < pi/2.

    :param params: Physical constants.
    :param state: Angle and angular velocity.
    """
    _require_finite(x1=state.x1, x2=state.x2)
    return (math.cos(state.x1) / params.total_mass) / _inertia(params, state.x1)


def derivatives(
    params: PendulumParams, state: PlantState, u: float, d: float
) -> tuple[float, float]:
    """Right hand side of the angle subsystem."""
    _require_finite(u=u, d=d)
    return state.x2, drift_term(params, state) + gain_term(params, state) * u + d


def disturbance_at(spec: DisturbanceSpec, t: float, seed: int = 0) -> float:
    """The disturbance at `t`; `seed` is the run seed keying random streams."""
    return DISTURBANCE_FACTORY[spec.kind](spec, t, seed)


def step(
    params: PendulumParams,
    state: PlantState,
    u: float,
    disturbance: DisturbanceSpec,
    t: float,
    dt: float,
    *,
    seed: int = 0,
) -> PlantState:
    """Advance one classic RK4 step with `u` held constant over the step.

    The disturbance is sampled at every stage time.

    :param t: Time at the start of the step.
    :param dt: Step length, strictly positive.
    :param seed: Run seed for random disturbances.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    def rhs(tau: float, x1: float, x2: float) -> tuple[float, float]:
        return derivatives(
            params, PlantState(x1, x2), u, disturbance_at(disturbance, tau, seed)
        )

    half = dt / 2
    x1, x2 = state.x1, state.x2
    try:
        k1 = rhs(t, x1, x2)
        k2 = rhs(t + half, x1 + half * k1[0], x2 + half * k1[1])
        k3 = rhs(t + half, x1 + half * k2[0], x2 + half * k2[1])
        k4 = rhs(t + dt, x1 + dt * k3[0], x2 + dt * k3[1])
    except DomainError as err:
        raise IntegrationBlowupError(t, err.quantity) from err
    x1 += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    x2 += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise IntegrationBlowupError(t + dt, "state")
    return PlantState(x1, x2)


def check_upright(state: PlantState, t: float) -> None:
    if not state.upright:
        raise ControllabilityError(t, f"|x1|={abs(state.x1):.6f} >= pi/2")


def energy(params: PendulumParams, state: PlantState) -> float:
    """First integral of the unforced, undisturbed angle dynamics (per unit
    pendulum mass and length scaling).  Constant along exact u=0 trajectories."""
    return 0.5 * _inertia(params, state.x1) * state.x2**2 + params.g * math.cos(
        state.x1
    )


def theta_true(params: PendulumParams) -> FloatArray:
    """[m/(m_c+m), 1/l, 1/(l (m_c+m))], the linear-in-parameters vector."""
    total = params.total_mass
    return np.array([params.m / total, 1.0 / params.l, 1.0 / (params.l * total)])


def implicit_residual(
    params: PendulumParams, state: PlantState, u: float, x2dot: float
) -> float:
    """Residual of the rearranged dynamics

        x2dot = 3/4 m/(m_c+m) (x2dot cos^2 x1 - x2^2 cos x1 sin x1)
                + 3 g/(4 l) sin x1 + 3 cos(x1) u / (4 l (m_c+m))

    which vanishes when `x2dot` comes from `derivatives` with d=0."""
    s, c = math.sin(state.x1), math.cos(state.x1)
    total = params.total_mass
    rhs = (
        0.75 * params.m / total * (x2dot * c * c - state.x2**2 * c * s)
        + 0.75 * params.g / params.l * s
        + 0.75 * c * u / (params.l * total)
    )
    return rhs - x2dot
